#pragma once

#include <string>
#include <vector>

#include "gear/grpo.hpp"

namespace gear {

// Plain key = value run configuration. '#' starts a comment; unknown or
// duplicate keys are hard errors. Every key has a default, so an empty file
// is a valid configuration. If alpha is set without affine_offset, the
// offset follows the derived rule 1 - 0.5 * alpha.
struct AppConfig {
  TrainConfig train;
  std::string metrics_out = "metrics.csv";
  std::string params_out = "params.json";
  int experiment_seeds = 5;  // per-variant seeds used by ablate/sweep
};

AppConfig parse_config_text(const std::string& text, const std::string& name);
AppConfig load_config(const std::string& path);

// Known keys with their defaults, one "key = value" line each (documentation
// and the --dump-config output).
std::string default_config_text();

// Comma-separated metrics table; doubles are shortest-round-trip formatted,
// independent of locale.
std::string metrics_to_csv(const std::vector<StepMetrics>& metrics);
void write_metrics(const std::string& path,
                   const std::vector<StepMetrics>& metrics);
std::vector<StepMetrics> read_metrics(const std::string& path);

void write_params(const std::string& path, const PolicyParams& params);
PolicyParams read_params(const std::string& path);

// Joins path with the GEAR_OUT_DIR environment variable (default ".") unless
// path is absolute.
std::string resolve_output_path(const std::string& path);

}  // namespace gear
