#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gear/commands.hpp"
#include "gear/errors.hpp"

namespace {

using gear::AppConfig;
using gear::cli::Overrides;

AppConfig load(const std::string& config_path, const Overrides& ov) {
  AppConfig cfg =
      config_path.empty() ? AppConfig{} : gear::load_config(config_path);
  return gear::cli::apply_overrides(cfg, ov);
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      values.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw gear::ConfigError("bad sweep value '" + item + "'");
    }
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GEAR: granularity-adaptive advantage reweighting for "
               "outcome-reward RL"};
  app.require_subcommand(1);

  std::string config_path, trace_path, out_path;
  Overrides ov;
  double threshold = 0.1;
  int top_n = 20;
  std::string sweep_param, sweep_values;
  bool dump_config = false;

  const auto add_common = [&](CLI::App* cmd, bool with_trace) {
    cmd->add_option("--config", config_path, "run configuration file");
    if (with_trace)
      cmd->add_option("--trace", trace_path, "input trace file (JSONL)")
          ->required();
    cmd->add_option("--variant", [&](const std::vector<std::string>& v) {
      ov.variant = v.back();
      return true;
    }, "segmentation variant");
    cmd->add_option("--lambda-kl", [&](const std::vector<std::string>& v) {
      ov.lambda_kl = std::stod(v.back());
      return true;
    }, "KL trigger threshold");
    cmd->add_option("--lambda-h", [&](const std::vector<std::string>& v) {
      ov.lambda_h = std::stod(v.back());
      return true;
    }, "entropy termination multiplier");
    cmd->add_option("--alpha", [&](const std::vector<std::string>& v) {
      ov.alpha = std::stod(v.back());
      return true;
    }, "affine scale (offset re-derived unless --offset given)");
    cmd->add_option("--offset", [&](const std::vector<std::string>& v) {
      ov.offset = std::stod(v.back());
      return true;
    }, "affine offset");
    cmd->add_option("--seed", [&](const std::vector<std::string>& v) {
      ov.seed = std::stoll(v.back());
      return true;
    }, "base RNG seed");
  };

  CLI::App* train = app.add_subcommand("train", "run the GRPO training loop");
  add_common(train, false);
  train->add_flag("--dump-config", dump_config,
                  "print the effective default configuration and exit");

  CLI::App* reweight =
      app.add_subcommand("reweight", "augment a trace with credit fields");
  add_common(reweight, true);
  reweight->add_option("--out", out_path, "output trace path")->required();

  CLI::App* ablate =
      app.add_subcommand("ablate", "compare all variants over a seed list");
  add_common(ablate, false);
  ablate->add_option("--out", out_path, "optional CSV output path");

  CLI::App* sweep =
      app.add_subcommand("sweep", "train once per hyperparameter value");
  add_common(sweep, false);
  sweep->add_option("param", sweep_param, "sweepable parameter name")
      ->required();
  sweep->add_option("values", sweep_values, "comma-separated values")
      ->required();
  sweep->add_option("--out", out_path, "optional CSV output path");

  CLI::App* analyze = app.add_subcommand(
      "analyze-tokens", "count high reverse-KL tokens in a trace");
  analyze->add_option("--trace", trace_path, "input trace file (JSONL)")
      ->required();
  analyze->add_option("--threshold", threshold,
                      "norm_rkl threshold (strict)");
  analyze->add_option("--top", top_n, "rows to emit");
  analyze->add_option("--out", out_path, "optional CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) {
      if (dump_config) {
        std::cout << gear::default_config_text();
        return 0;
      }
      gear::cli::run_train(load(config_path, ov), std::cout);
    } else if (reweight->parsed()) {
      gear::cli::run_reweight(load(config_path, ov), trace_path, out_path,
                              std::cout);
    } else if (ablate->parsed()) {
      gear::cli::run_ablate(load(config_path, ov), out_path, std::cout);
    } else if (sweep->parsed()) {
      gear::cli::run_sweep(load(config_path, ov), sweep_param,
                           parse_values(sweep_values), out_path, std::cout);
    } else if (analyze->parsed()) {
      gear::cli::run_analyze(trace_path, threshold, top_n, out_path,
                             std::cout);
    }
  } catch (const gear::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const gear::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const gear::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
