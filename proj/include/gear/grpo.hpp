#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gear/parallel.hpp"
#include "gear/policy.hpp"
#include "gear/reweighting.hpp"
#include "gear/toy_env.hpp"
#include "gear/trajectory.hpp"

namespace gear {

struct TrainConfig {
  int group_size = 8;
  int groups_per_batch = 4;
  double learning_rate = 3.0;
  int total_steps = 800;
  double clip_eps = 0.2;
  double kl_penalty_coef = 0.01;
  GearConfig gear;
  EnvSpec env;
  std::uint64_t seed = 1;
  int eval_interval = 20;
  int num_eval_instances = 160;
  int policy_dim = 8;
  int context_k = 4;
  double init_scale = 0.1;
  TeacherGains teacher;
  ExecMode exec = ExecMode::Parallel;

  void validate() const;  // throws ConfigError
};

struct StepMetrics {
  int step = 0;
  double mean_reward = 0.0;
  double mean_entropy = 0.0;
  double mean_abs_adv = 0.0;
  double segment_token_frac = 0.0;
  double clipped_frac = 0.0;
  double eval_success = 0.0;
};

// Per-policy-token state snapshots and sampled actions of one trajectory,
// kept alongside the Trajectory so the loss can recompute current log-probs
// without replaying the environment.
struct RolloutStates {
  std::vector<StateFeatures> states;
  std::vector<int> actions;
};

struct RolloutBatch {
  std::vector<TrajectoryGroup> groups;
  std::vector<std::vector<RolloutStates>> states;  // [group][member]
};

// K rollouts of one instance with per-member substreams; bit-identical for a
// fixed (instance_seed, stream_key) regardless of mode.
TrajectoryGroup rollout_group(const PolicyParams& params, const EnvSpec& spec,
                              int K, std::uint64_t instance_seed,
                              std::uint64_t stream_key,
                              std::vector<RolloutStates>* states_out = nullptr,
                              ExecMode mode = ExecMode::Serial,
                              const TeacherGains& gains = TeacherGains{});

RolloutBatch rollout_batch(const PolicyParams& params, const TrainConfig& cfg,
                           int step);

// min(r * adv, clip(r, 1-eps, 1+eps) * adv), the clipped per-token term.
double clipped_surrogate(double ratio, double advantage, double clip_eps);

// Exact KL between two categorical distributions given as log-probabilities.
double kl_categorical(const std::vector<double>& logp,
                      const std::vector<double>& logq);

// Mean exact KL(pi_params || pi_ref) over the given states.
double kl_to_reference(const PolicyParams& params,
                       const PolicyParams& ref_params,
                       const std::vector<StateFeatures>& states);

// GRPO credit with no reweighting: every token carries weight 1 and the raw
// group-normalized advantage. Kept as an independent code path for the
// alpha = 0 degeneracy checks.
std::vector<CreditVector> plain_grpo_credit(const TrajectoryGroup& group,
                                            double eps_std);

std::vector<std::vector<CreditVector>> batch_credit(
    const RolloutBatch& batch, const GearConfig& cfg, ExecMode mode);

struct BatchLoss {
  double loss = 0.0;
  PolicyParams grad;
  double clipped_frac = 0.0;
  std::size_t policy_tokens = 0;
};

// Negated clipped-surrogate objective with the KL-to-reference penalty;
// ratios use the behavior log-probs recorded in the trajectories and the
// per-trajectory average runs over policy tokens only.
BatchLoss batch_loss_and_grad(const PolicyParams& params,
                              const PolicyParams& ref_params,
                              const RolloutBatch& batch,
                              const std::vector<std::vector<CreditVector>>& credit,
                              const TrainConfig& cfg);

double evaluate_policy(const PolicyParams& params, const TrainConfig& cfg);

// The parameter draw train() starts from, reproducible from the config seed.
PolicyParams initial_policy(const TrainConfig& cfg);

struct TrainResult {
  std::vector<StepMetrics> metrics;
  PolicyParams params;
  double final_eval = 0.0;
};

TrainResult train(const TrainConfig& cfg);

struct GradCheckBlock {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double max_rel_err = 0.0;
  bool pass = false;
  std::string worst_block;
};

// Central finite differences (step h) against the analytic gradient on a
// small fixed batch. Relative error uses max(|a|, |b|, 1) as denominator.
GradCheckReport grad_check(const PolicyParams& params, const TrainConfig& cfg,
                           double tolerance, double h = 1e-5);

}  // namespace gear
