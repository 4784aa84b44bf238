#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gear {

// One token of a flattened interaction trace. Policy tokens carry the
// sampling-time log-prob under the behavior policy, the log-prob of the same
// action under the hint-conditioned teacher state, and the behavior policy's
// entropy at that state. Observation tokens carry none of these: they stay in
// the state but are masked from every token-level training signal.
struct TokenRecord {
  int position = 0;
  int token_id = 0;
  bool is_policy_token = false;
  std::optional<double> behavior_logp;
  std::optional<double> teacher_logp;
  std::optional<double> entropy;
  std::optional<std::string> text;
};

struct Trajectory {
  std::vector<TokenRecord> records;
  std::string prompt_id;
  double reward = 0.0;
  bool terminated = false;

  int num_policy_tokens() const {
    int n = 0;
    for (const auto& r : records) n += r.is_policy_token ? 1 : 0;
    return n;
  }
};

// K rollouts of the same prompt. group_mean / group_std are the empirical
// mean and population (divide-by-K) standard deviation of member rewards.
struct TrajectoryGroup {
  std::string prompt_id;
  std::vector<Trajectory> members;
  double group_mean = 0.0;
  double group_std = 0.0;
};

// A contiguous divergent span over the policy-token subsequence,
// [start, end] inclusive. onset_weight is the normalized reverse-KL at start.
struct Segment {
  int start = 0;
  int end = 0;
  double onset_weight = 0.0;

  friend bool operator==(const Segment& a, const Segment& b) {
    return a.start == b.start && a.end == b.end &&
           a.onset_weight == b.onset_weight;
  }
};

// Per-policy-token credit pipeline output: piecewise KL weights, sign-aware
// weights, final modulation weights, and the reweighted advantages.
struct CreditVector {
  std::vector<double> w_kl;
  std::vector<double> w_signed;
  std::vector<double> w_final;
  std::vector<double> adv;
};

enum class Variant {
  Gear,
  TokenOnly,
  KlOnly,
  EntropyOnly,
  Marker,
  EntropyWindow,
};

const char* variant_name(Variant v);
Variant variant_from_string(const std::string& s);  // throws ConfigError

struct GearConfig {
  double lambda_kl = 0.1;
  double lambda_h = 1.5;
  double alpha = 0.2;
  // Offset of the affine map W = alpha*w + affine_offset. Named to avoid
  // colliding with the KL-penalty coefficient below.
  double affine_offset = 0.9;
  double eps_std = 1e-4;
  double clip_eps = 0.2;
  double kl_penalty_coef = 0.01;
  Variant variant = Variant::Gear;
  int window_size = 8;

  // Range checks for configuration loading. Library-level segmentation
  // routines deliberately do not re-check ranges, so properties like
  // "lambda_kl >= 1 yields zero segments" stay testable.
  void validate() const;  // throws ConfigError
};

// Column view of the policy-token subsequence of one trajectory.
// positions[i] is the full-trace position of policy token i.
struct PolicyView {
  std::vector<int> positions;
  std::vector<double> behavior_logp;
  std::vector<double> teacher_logp;
  std::vector<double> entropy;

  std::size_t size() const { return positions.size(); }
};

struct GroupStats {
  double mean = 0.0;
  double stdev = 0.0;  // population convention
  std::vector<double> advantages;
};

// Validation helpers; throw DataError naming the violated invariant.
void validate_token_record(const TokenRecord& rec);
void validate_trajectory(const Trajectory& traj);
void validate_segments(const std::vector<Segment>& segments, int length);

PolicyView policy_token_view(const Trajectory& traj);

// advantages[k] = (rewards[k] - mean) / (stdev + eps_std).
GroupStats group_statistics(const std::vector<double>& rewards,
                            double eps_std);

// Builds a group from members sharing one prompt_id and fills in the
// empirical statistics.
TrajectoryGroup make_trajectory_group(std::vector<Trajectory> members);

// Policy-token indices that start a tool call: a policy token directly
// followed in the full trace by at least one observation token. Used by the
// marker segmentation variant.
std::vector<int> tool_call_markers(const Trajectory& traj);

}  // namespace gear
