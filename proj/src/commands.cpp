#include "gear/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "gear/errors.hpp"
#include "gear/parallel.hpp"
#include "gear/signals.hpp"

namespace gear::cli {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_mean = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stderr_mean = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

// Runs fn(i) for each index, capturing the first exception message instead of
// letting it escape the parallel region.
template <typename Fn>
void parallel_runs(std::size_t n, ExecMode mode, Fn&& fn) {
  std::vector<std::string> errors(n);
  parallel_for(n, mode, [&](std::size_t i) {
    try {
      fn(i);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const std::string& e : errors)
    if (!e.empty()) throw NumericError("training run failed: " + e);
}

// Trains each (cfg, seed) pair; outer parallelism with serial inner loops so
// results match individually invoked runs bit for bit.
std::vector<double> final_evals_over_seeds(const TrainConfig& base,
                                           int num_seeds, ExecMode mode) {
  std::vector<double> evals(static_cast<std::size_t>(num_seeds));
  parallel_runs(evals.size(), mode, [&](std::size_t i) {
    TrainConfig cfg = base;
    cfg.seed = base.seed + i;
    cfg.exec = ExecMode::Serial;
    evals[i] = train(cfg).final_eval;
  });
  return evals;
}

}  // namespace

AppConfig apply_overrides(AppConfig cfg, const Overrides& ov) {
  if (ov.variant) cfg.train.gear.variant = variant_from_string(*ov.variant);
  if (ov.lambda_kl) cfg.train.gear.lambda_kl = *ov.lambda_kl;
  if (ov.lambda_h) cfg.train.gear.lambda_h = *ov.lambda_h;
  if (ov.alpha) {
    cfg.train.gear.alpha = *ov.alpha;
    if (!ov.offset) cfg.train.gear.affine_offset = 1.0 - 0.5 * *ov.alpha;
  }
  if (ov.offset) cfg.train.gear.affine_offset = *ov.offset;
  if (ov.seed) cfg.train.seed = static_cast<std::uint64_t>(*ov.seed);
  cfg.train.validate();
  return cfg;
}

void run_train(const AppConfig& cfg, std::ostream& log) {
  const TrainResult result = train(cfg.train);
  const std::string metrics_path = resolve_output_path(cfg.metrics_out);
  const std::string params_path = resolve_output_path(cfg.params_out);
  write_metrics(metrics_path, result.metrics);
  write_params(params_path, result.params);
  log << "trained " << cfg.train.total_steps << " steps (variant "
      << variant_name(cfg.train.gear.variant) << ", seed " << cfg.train.seed
      << ")\n";
  log << "metrics: " << metrics_path << "\n";
  log << "params:  " << params_path << "\n";
  log << "final eval success: " << format_double(result.final_eval) << "\n";
}

void run_reweight(const AppConfig& cfg, const std::string& trace_path,
                  const std::string& out_path, std::ostream& log) {
  const std::vector<TrajectoryGroup> groups = parse_trace(trace_path);
  std::vector<std::vector<TrajectoryCredit>> credit(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g)
    credit[g] = gear_credit_detailed(groups[g], cfg.train.gear);
  const std::string resolved = resolve_output_path(out_path);
  write_reweighted_trace(resolved, groups, credit);

  std::size_t n_traj = 0, n_segments = 0;
  for (const auto& per_group : credit)
    for (const auto& tc : per_group) {
      ++n_traj;
      n_segments += tc.segments.size();
    }
  log << "reweighted " << n_traj << " trajectories in " << groups.size()
      << " groups (variant " << variant_name(cfg.train.gear.variant) << ", "
      << n_segments << " segments)\n";
  log << "wrote " << resolved << "\n";
}

std::vector<AblateRow> ablate_rows(const AppConfig& cfg) {
  struct Setting {
    std::string name;
    Variant variant;
    bool plain_grpo;
  };
  const std::vector<Setting> settings = {
      {"gear", Variant::Gear, false},
      {"token_only", Variant::TokenOnly, false},
      {"kl_only", Variant::KlOnly, false},
      {"entropy_only", Variant::EntropyOnly, false},
      {"marker", Variant::Marker, false},
      {"entropy_window", Variant::EntropyWindow, false},
      {"grpo", Variant::Gear, true},
  };

  const int num_seeds = cfg.experiment_seeds;
  std::vector<AblateRow> rows(settings.size());
  std::vector<double> evals(settings.size() * static_cast<std::size_t>(num_seeds));
  parallel_runs(evals.size(), cfg.train.exec, [&](std::size_t idx) {
    const std::size_t v = idx / static_cast<std::size_t>(num_seeds);
    const std::size_t s = idx % static_cast<std::size_t>(num_seeds);
    TrainConfig run = cfg.train;
    run.gear.variant = settings[v].variant;
    if (settings[v].plain_grpo) {
      run.gear.alpha = 0.0;
      run.gear.affine_offset = 1.0;
    }
    run.seed = cfg.train.seed + s;
    run.exec = ExecMode::Serial;
    evals[idx] = train(run).final_eval;
  });
  for (std::size_t v = 0; v < settings.size(); ++v) {
    rows[v].variant = settings[v].name;
    rows[v].per_seed_final_eval.assign(
        evals.begin() + static_cast<std::ptrdiff_t>(v * num_seeds),
        evals.begin() + static_cast<std::ptrdiff_t>((v + 1) * num_seeds));
    const MeanStderr ms = mean_stderr(rows[v].per_seed_final_eval);
    rows[v].mean = ms.mean;
    rows[v].stderr_mean = ms.stderr_mean;
  }
  return rows;
}

void run_ablate(const AppConfig& cfg, const std::string& out_path,
                std::ostream& log) {
  const std::vector<AblateRow> rows = ablate_rows(cfg);
  log << "ablation over " << cfg.experiment_seeds << " seeds (base seed "
      << cfg.train.seed << ", " << cfg.train.total_steps << " steps)\n";
  log << std::left << std::setw(16) << "variant" << "final_eval\n";
  for (const AblateRow& row : rows) {
    std::ostringstream cell;
    cell << std::fixed << std::setprecision(4) << row.mean << " +/- "
         << row.stderr_mean;
    log << std::left << std::setw(16) << row.variant << cell.str() << "\n";
  }
  if (!out_path.empty()) {
    const std::string resolved = resolve_output_path(out_path);
    std::ofstream out(resolved);
    if (!out) throw DataError("cannot open ablate output file: " + resolved);
    out << "variant,mean_final_eval,stderr_final_eval";
    for (int s = 0; s < cfg.experiment_seeds; ++s) out << ",seed" << s;
    out << "\n";
    for (const AblateRow& row : rows) {
      out << row.variant << ',' << format_double(row.mean) << ','
          << format_double(row.stderr_mean);
      for (double e : row.per_seed_final_eval) out << ',' << format_double(e);
      out << "\n";
    }
    log << "wrote " << resolved << "\n";
  }
}

const std::vector<std::string>& sweepable_params() {
  static const std::vector<std::string> params = {
      "lambda_kl",       "lambda_h",  "alpha",    "window_size",
      "learning_rate",   "hint_prob", "clip_eps", "kl_penalty_coef"};
  return params;
}

std::vector<SweepRow> sweep_rows(const AppConfig& cfg, const std::string& param,
                                 const std::vector<double>& values) {
  const auto& known = sweepable_params();
  if (std::find(known.begin(), known.end(), param) == known.end()) {
    std::string list;
    for (const auto& p : known) list += (list.empty() ? "" : ", ") + p;
    throw ConfigError("unknown sweep parameter '" + param +
                      "' (sweepable: " + list + ")");
  }
  if (values.empty()) throw ConfigError("sweep needs at least one value");

  std::vector<SweepRow> rows(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    AppConfig run = cfg;
    const double v = values[i];
    TrainConfig& t = run.train;
    if (param == "lambda_kl") t.gear.lambda_kl = v;
    else if (param == "lambda_h") t.gear.lambda_h = v;
    else if (param == "alpha") {
      t.gear.alpha = v;
      t.gear.affine_offset = 1.0 - 0.5 * v;  // derived offset rule
    } else if (param == "window_size") t.gear.window_size = static_cast<int>(v);
    else if (param == "learning_rate") t.learning_rate = v;
    else if (param == "hint_prob") t.env.hint_prob = v;
    else if (param == "clip_eps") { t.clip_eps = v; t.gear.clip_eps = v; }
    else if (param == "kl_penalty_coef") { t.kl_penalty_coef = v; t.gear.kl_penalty_coef = v; }
    t.validate();

    const std::vector<double> evals =
        final_evals_over_seeds(t, run.experiment_seeds, cfg.train.exec);
    const MeanStderr ms = mean_stderr(evals);
    rows[i] = {v, t.gear.affine_offset, ms.mean, ms.stderr_mean};
  }
  return rows;
}

void run_sweep(const AppConfig& cfg, const std::string& param,
               const std::vector<double>& values, const std::string& out_path,
               std::ostream& log) {
  const std::vector<SweepRow> rows = sweep_rows(cfg, param, values);
  log << "sweep of " << param << " over " << cfg.experiment_seeds
      << " seeds\n";
  log << std::left << std::setw(12) << param << std::setw(16)
      << "affine_offset" << "final_eval\n";
  for (const SweepRow& row : rows) {
    std::ostringstream cell;
    cell << std::fixed << std::setprecision(4) << row.mean_final_eval
         << " +/- " << row.stderr_final_eval;
    log << std::left << std::setw(12) << row.value << std::setw(16)
        << row.affine_offset << cell.str() << "\n";
  }
  if (!out_path.empty()) {
    const std::string resolved = resolve_output_path(out_path);
    std::ofstream out(resolved);
    if (!out) throw DataError("cannot open sweep output file: " + resolved);
    out << param << ",affine_offset,mean_final_eval,stderr_final_eval\n";
    for (const SweepRow& row : rows)
      out << format_double(row.value) << ',' << format_double(row.affine_offset)
          << ',' << format_double(row.mean_final_eval) << ','
          << format_double(row.stderr_final_eval) << "\n";
    log << "wrote " << resolved << "\n";
  }
}

std::vector<TokenCount> analyze_tokens(const std::vector<TrajectoryGroup>& groups,
                                       double threshold, int top_n) {
  std::map<int, TokenCount> counts;
  for (const TrajectoryGroup& group : groups) {
    for (const Trajectory& traj : group.members) {
      const PolicyView view = policy_token_view(traj);
      if (view.size() == 0) continue;
      const std::vector<double> norm =
          minmax_normalize(
              reverse_kl_sequence(view.behavior_logp, view.teacher_logp).values)
              .values;
      for (std::size_t i = 0; i < view.size(); ++i) {
        if (!(norm[i] > threshold)) continue;
        const TokenRecord& rec = traj.records[view.positions[i]];
        TokenCount& tc = counts[rec.token_id];
        tc.token_id = rec.token_id;
        if (tc.text.empty() && rec.text) tc.text = *rec.text;
        tc.count += 1;
      }
    }
  }
  std::vector<TokenCount> rows;
  rows.reserve(counts.size());
  for (auto& [id, tc] : counts) rows.push_back(std::move(tc));
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TokenCount& a, const TokenCount& b) {
                     if (a.count != b.count) return a.count > b.count;
                     return a.token_id < b.token_id;
                   });
  if (top_n >= 0 && rows.size() > static_cast<std::size_t>(top_n))
    rows.resize(static_cast<std::size_t>(top_n));
  return rows;
}

void run_analyze(const std::string& trace_path, double threshold, int top_n,
                 const std::string& out_path, std::ostream& log) {
  const std::vector<TrajectoryGroup> groups = parse_trace(trace_path);
  const std::vector<TokenCount> rows = analyze_tokens(groups, threshold, top_n);
  log << "tokens with norm_rkl > " << threshold << " (top " << top_n << ")\n";
  log << std::left << std::setw(10) << "token_id" << std::setw(12) << "text"
      << "count\n";
  for (const TokenCount& row : rows)
    log << std::left << std::setw(10) << row.token_id << std::setw(12)
        << (row.text.empty() ? "-" : row.text) << row.count << "\n";
  if (!out_path.empty()) {
    const std::string resolved = resolve_output_path(out_path);
    std::ofstream out(resolved);
    if (!out) throw DataError("cannot open analyze output file: " + resolved);
    out << "token_id,text,count\n";
    for (const TokenCount& row : rows)
      out << row.token_id << ',' << row.text << ',' << row.count << "\n";
    log << "wrote " << resolved << "\n";
  }
}

}  // namespace gear::cli
