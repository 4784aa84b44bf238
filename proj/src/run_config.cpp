#include "gear/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "gear/errors.hpp"

namespace gear {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: " + value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': not a boolean: " + value);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

AppConfig parse_config_text(const std::string& text, const std::string& name) {
  AppConfig cfg;
  bool offset_set = false;
  bool alpha_set = false;
  std::set<std::string> seen;

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    if (!seen.insert(key).second)
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");

    TrainConfig& t = cfg.train;
    if (key == "lambda_kl") t.gear.lambda_kl = parse_double(key, value);
    else if (key == "lambda_h") t.gear.lambda_h = parse_double(key, value);
    else if (key == "alpha") { t.gear.alpha = parse_double(key, value); alpha_set = true; }
    else if (key == "affine_offset") { t.gear.affine_offset = parse_double(key, value); offset_set = true; }
    else if (key == "eps_std") t.gear.eps_std = parse_double(key, value);
    else if (key == "clip_eps") { t.clip_eps = parse_double(key, value); t.gear.clip_eps = t.clip_eps; }
    else if (key == "kl_penalty_coef") { t.kl_penalty_coef = parse_double(key, value); t.gear.kl_penalty_coef = t.kl_penalty_coef; }
    else if (key == "variant") t.gear.variant = variant_from_string(value);
    else if (key == "window_size") t.gear.window_size = static_cast<int>(parse_int(key, value));
    else if (key == "group_size") t.group_size = static_cast<int>(parse_int(key, value));
    else if (key == "groups_per_batch") t.groups_per_batch = static_cast<int>(parse_int(key, value));
    else if (key == "learning_rate") t.learning_rate = parse_double(key, value);
    else if (key == "total_steps") t.total_steps = static_cast<int>(parse_int(key, value));
    else if (key == "seed") t.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "eval_interval") t.eval_interval = static_cast<int>(parse_int(key, value));
    else if (key == "num_eval_instances") t.num_eval_instances = static_cast<int>(parse_int(key, value));
    else if (key == "policy_dim") t.policy_dim = static_cast<int>(parse_int(key, value));
    else if (key == "context_k") t.context_k = static_cast<int>(parse_int(key, value));
    else if (key == "init_scale") t.init_scale = parse_double(key, value);
    else if (key == "exec_mode") {
      if (value == "serial") t.exec = ExecMode::Serial;
      else if (value == "parallel") t.exec = ExecMode::Parallel;
      else throw ConfigError("config key 'exec_mode': expected serial|parallel");
    }
    else if (key == "vocab_size") t.env.vocab_size = static_cast<int>(parse_int(key, value));
    else if (key == "max_steps") t.env.max_steps = static_cast<int>(parse_int(key, value));
    else if (key == "num_branches") t.env.num_branches = static_cast<int>(parse_int(key, value));
    else if (key == "branch_arity") t.env.branch_arity = static_cast<int>(parse_int(key, value));
    else if (key == "observation_len") t.env.observation_len = static_cast<int>(parse_int(key, value));
    else if (key == "hint_prob") t.env.hint_prob = parse_double(key, value);
    else if (key == "env_seed") t.env.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "partial_credit") t.env.partial_credit = parse_bool(key, value);
    else if (key == "metrics_out") cfg.metrics_out = value;
    else if (key == "params_out") cfg.params_out = value;
    else if (key == "experiment_seeds") cfg.experiment_seeds = static_cast<int>(parse_int(key, value));
    else
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": unknown config key '" + key + "'");
  }

  if (alpha_set && !offset_set)
    cfg.train.gear.affine_offset = 1.0 - 0.5 * cfg.train.gear.alpha;
  cfg.train.validate();
  if (cfg.experiment_seeds < 2)
    throw ConfigError("experiment_seeds must be >= 2");
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string default_config_text() {
  const AppConfig cfg;
  const TrainConfig& t = cfg.train;
  std::ostringstream out;
  out << "# GEAR run configuration (defaults)\n"
      << "lambda_kl = " << format_double(t.gear.lambda_kl) << "\n"
      << "lambda_h = " << format_double(t.gear.lambda_h) << "\n"
      << "alpha = " << format_double(t.gear.alpha) << "\n"
      << "affine_offset = " << format_double(t.gear.affine_offset) << "\n"
      << "eps_std = " << format_double(t.gear.eps_std) << "\n"
      << "clip_eps = " << format_double(t.clip_eps) << "\n"
      << "kl_penalty_coef = " << format_double(t.kl_penalty_coef) << "\n"
      << "variant = " << variant_name(t.gear.variant) << "\n"
      << "window_size = " << t.gear.window_size << "\n"
      << "group_size = " << t.group_size << "\n"
      << "groups_per_batch = " << t.groups_per_batch << "\n"
      << "learning_rate = " << format_double(t.learning_rate) << "\n"
      << "total_steps = " << t.total_steps << "\n"
      << "seed = " << t.seed << "\n"
      << "eval_interval = " << t.eval_interval << "\n"
      << "num_eval_instances = " << t.num_eval_instances << "\n"
      << "policy_dim = " << t.policy_dim << "\n"
      << "context_k = " << t.context_k << "\n"
      << "init_scale = " << format_double(t.init_scale) << "\n"
      << "exec_mode = "
      << (t.exec == ExecMode::Parallel ? "parallel" : "serial") << "\n"
      << "vocab_size = " << t.env.vocab_size << "\n"
      << "max_steps = " << t.env.max_steps << "\n"
      << "num_branches = " << t.env.num_branches << "\n"
      << "branch_arity = " << t.env.branch_arity << "\n"
      << "observation_len = " << t.env.observation_len << "\n"
      << "hint_prob = " << format_double(t.env.hint_prob) << "\n"
      << "env_seed = " << t.env.seed << "\n"
      << "partial_credit = " << (t.env.partial_credit ? "true" : "false")
      << "\n"
      << "metrics_out = " << cfg.metrics_out << "\n"
      << "params_out = " << cfg.params_out << "\n"
      << "experiment_seeds = " << cfg.experiment_seeds << "\n";
  return out.str();
}

std::string metrics_to_csv(const std::vector<StepMetrics>& metrics) {
  std::ostringstream out;
  out << "step,mean_reward,mean_entropy,mean_abs_adv,segment_token_frac,"
         "clipped_frac,eval_success\n";
  for (const StepMetrics& m : metrics) {
    out << m.step << ',' << format_double(m.mean_reward) << ','
        << format_double(m.mean_entropy) << ','
        << format_double(m.mean_abs_adv) << ','
        << format_double(m.segment_token_frac) << ','
        << format_double(m.clipped_frac) << ','
        << format_double(m.eval_success) << '\n';
  }
  return out.str();
}

void write_metrics(const std::string& path,
                   const std::vector<StepMetrics>& metrics) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open metrics file for writing: " + path);
  out << metrics_to_csv(metrics);
}

std::vector<StepMetrics> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("metrics file is empty: " + path);
  std::vector<StepMetrics> metrics;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 7)
      throw DataError("metrics row with wrong column count: " + line);
    StepMetrics m;
    m.step = static_cast<int>(parse_int("step", fields[0]));
    m.mean_reward = parse_double("mean_reward", fields[1]);
    m.mean_entropy = parse_double("mean_entropy", fields[2]);
    m.mean_abs_adv = parse_double("mean_abs_adv", fields[3]);
    m.segment_token_frac = parse_double("segment_token_frac", fields[4]);
    m.clipped_frac = parse_double("clipped_frac", fields[5]);
    m.eval_success = parse_double("eval_success", fields[6]);
    metrics.push_back(m);
  }
  return metrics;
}

void write_params(const std::string& path, const PolicyParams& params) {
  nlohmann::ordered_json j;
  j["vocab"] = params.vocab;
  j["dim"] = params.dim;
  j["context_k"] = params.context_k;
  j["embeddings"] = params.embeddings;
  j["proj"] = params.proj;
  j["out_w"] = params.out_w;
  j["out_b"] = params.out_b;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open params file for writing: " + path);
  out << j.dump(2) << '\n';
}

PolicyParams read_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open params file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed params file " + path + ": " + e.what());
  }
  PolicyParams p;
  p.vocab = j.at("vocab").get<int>();
  p.dim = j.at("dim").get<int>();
  p.context_k = j.at("context_k").get<int>();
  p.embeddings = j.at("embeddings").get<std::vector<double>>();
  p.proj = j.at("proj").get<std::vector<double>>();
  p.out_w = j.at("out_w").get<std::vector<double>>();
  p.out_b = j.at("out_b").get<std::vector<double>>();
  return p;
}

std::string resolve_output_path(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.is_absolute()) return path;
  const char* dir = std::getenv("GEAR_OUT_DIR");
  if (!dir || !*dir) return path;
  return (fs::path(dir) / p).string();
}

}  // namespace gear
