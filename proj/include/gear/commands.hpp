#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gear/run_config.hpp"
#include "gear/trace_io.hpp"

namespace gear::cli {

// Flag-level overrides applied on top of the loaded configuration. An alpha
// override without an offset override re-derives the offset rule.
struct Overrides {
  std::optional<std::string> variant;
  std::optional<double> lambda_kl;
  std::optional<double> lambda_h;
  std::optional<double> alpha;
  std::optional<double> offset;
  std::optional<long long> seed;
};

AppConfig apply_overrides(AppConfig cfg, const Overrides& ov);

// train: metrics CSV + final parameter snapshot; prints final eval success.
void run_train(const AppConfig& cfg, std::ostream& log);

// reweight: augments every policy token of the trace with the credit fields.
void run_reweight(const AppConfig& cfg, const std::string& trace_path,
                  const std::string& out_path, std::ostream& log);

struct AblateRow {
  std::string variant;
  std::vector<double> per_seed_final_eval;
  double mean = 0.0;
  double stderr_mean = 0.0;
};

// One row per segmentation variant plus the plain-GRPO baseline (alpha = 0,
// offset = 1), trained over the shared seed list seed, seed+1, ...
std::vector<AblateRow> ablate_rows(const AppConfig& cfg);
void run_ablate(const AppConfig& cfg, const std::string& out_path,
                std::ostream& log);

struct SweepRow {
  double value = 0.0;
  double affine_offset = 0.0;
  double mean_final_eval = 0.0;
  double stderr_final_eval = 0.0;
};

const std::vector<std::string>& sweepable_params();
std::vector<SweepRow> sweep_rows(const AppConfig& cfg, const std::string& param,
                                 const std::vector<double>& values);
void run_sweep(const AppConfig& cfg, const std::string& param,
               const std::vector<double>& values, const std::string& out_path,
               std::ostream& log);

struct TokenCount {
  int token_id = 0;
  std::string text;
  long long count = 0;
};

// Occurrences of norm_rkl > threshold per token identity, sorted by count
// descending with ties broken by ascending token_id.
std::vector<TokenCount> analyze_tokens(const std::vector<TrajectoryGroup>& groups,
                                       double threshold, int top_n);
void run_analyze(const std::string& trace_path, double threshold, int top_n,
                 const std::string& out_path, std::ostream& log);

}  // namespace gear::cli
