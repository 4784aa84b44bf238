#include "gear/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "gear/errors.hpp"
#include "gear/rng.hpp"
#include "gear/signals.hpp"

namespace gear {

namespace {

constexpr std::uint64_t kInitTag = 0xA1;
constexpr std::uint64_t kInstanceTag = 0xB2;
constexpr std::uint64_t kSampleTag = 0xC3;
constexpr std::uint64_t kEvalTag = 0xD4;

void check_finite(double v, const char* where) {
  if (!std::isfinite(v))
    throw NumericError(std::string("non-finite value in ") + where);
}

void check_finite_block(const std::vector<double>& v, const char* where) {
  for (double x : v)
    if (!std::isfinite(x))
      throw NumericError(std::string("non-finite gradient in ") + where);
}

void axpy(PolicyParams& dst, const PolicyParams& src, double a) {
  for (std::size_t i = 0; i < dst.embeddings.size(); ++i)
    dst.embeddings[i] += a * src.embeddings[i];
  for (std::size_t i = 0; i < dst.proj.size(); ++i)
    dst.proj[i] += a * src.proj[i];
  for (std::size_t i = 0; i < dst.out_w.size(); ++i)
    dst.out_w[i] += a * src.out_w[i];
  for (std::size_t i = 0; i < dst.out_b.size(); ++i)
    dst.out_b[i] += a * src.out_b[i];
}

struct SingleRollout {
  Trajectory trajectory;
  RolloutStates states;
};

SingleRollout rollout_single(const PolicyParams& params, const EnvSpec& spec,
                             const TeacherGains& gains,
                             std::uint64_t instance_seed, Rng rng) {
  SingleRollout out;
  EpisodeRecord episode =
      run_episode(spec, instance_seed, [&](const EnvState& state) {
        const StateFeatures feats =
            make_features(spec, state, params.context_k);
        const PolicyForward fwd = policy_forward(params, feats);
        ActionSample s;
        s.action = sample_action(fwd, rng);
        s.behavior_logp = fwd.logp(s.action);
        s.entropy = policy_entropy(fwd.logits);
        // Teacher: the same parameters under the state conditioned on the
        // ground-truth answer for this prefix.
        const EnvState teacher = teacher_state(
            state, current_target_token(spec, state.prompt_key,
                                        state.correct_branches));
        const PolicyForward teacher_fwd = policy_forward(
            params, make_features(spec, teacher, params.context_k, gains));
        s.teacher_logp = teacher_fwd.logp(s.action);
        out.states.states.push_back(feats);
        out.states.actions.push_back(s.action);
        return s;
      });
  out.trajectory = std::move(episode.trajectory);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (group_size < 2) throw ConfigError("group_size must be >= 2");
  if (groups_per_batch < 1) throw ConfigError("groups_per_batch must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (!(clip_eps > 0.0 && clip_eps < 1.0))
    throw ConfigError("clip_eps must lie in (0,1)");
  if (kl_penalty_coef < 0.0)
    throw ConfigError("kl_penalty_coef must be >= 0");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (num_eval_instances < 1)
    throw ConfigError("num_eval_instances must be >= 1");
  if (policy_dim < 1) throw ConfigError("policy_dim must be >= 1");
  if (context_k < 1) throw ConfigError("context_k must be >= 1");
  gear.validate();
  env.validate();
}

TrajectoryGroup rollout_group(const PolicyParams& params, const EnvSpec& spec,
                              int K, std::uint64_t instance_seed,
                              std::uint64_t stream_key,
                              std::vector<RolloutStates>* states_out,
                              ExecMode mode, const TeacherGains& gains) {
  std::vector<SingleRollout> slots(static_cast<std::size_t>(K));
  parallel_for(static_cast<std::size_t>(K), mode, [&](std::size_t k) {
    slots[k] = rollout_single(params, spec, gains, instance_seed,
                              Rng(mix_key(stream_key, k)));
  });
  std::vector<Trajectory> members;
  members.reserve(slots.size());
  for (auto& s : slots) members.push_back(std::move(s.trajectory));
  if (states_out) {
    states_out->clear();
    for (auto& s : slots) states_out->push_back(std::move(s.states));
  }
  return make_trajectory_group(std::move(members));
}

RolloutBatch rollout_batch(const PolicyParams& params, const TrainConfig& cfg,
                           int step) {
  const int G = cfg.groups_per_batch, K = cfg.group_size;
  RolloutBatch batch;
  batch.groups.resize(static_cast<std::size_t>(G));
  batch.states.resize(static_cast<std::size_t>(G));
  std::vector<std::vector<SingleRollout>> slots(
      static_cast<std::size_t>(G),
      std::vector<SingleRollout>(static_cast<std::size_t>(K)));
  parallel_for(static_cast<std::size_t>(G) * K, cfg.exec, [&](std::size_t i) {
    const std::size_t g = i / static_cast<std::size_t>(K);
    const std::size_t k = i % static_cast<std::size_t>(K);
    const std::uint64_t instance_seed = mix_key(
        mix_key(cfg.seed ^ kInstanceTag, static_cast<std::uint64_t>(step)), g);
    const std::uint64_t stream_key = mix_key(
        mix_key(cfg.seed ^ kSampleTag, static_cast<std::uint64_t>(step)), g);
    slots[g][k] = rollout_single(params, cfg.env, cfg.teacher, instance_seed,
                                 Rng(mix_key(stream_key, k)));
  });
  for (int g = 0; g < G; ++g) {
    std::vector<Trajectory> members;
    members.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
      members.push_back(std::move(slots[g][k].trajectory));
    batch.groups[g] = make_trajectory_group(std::move(members));
    for (int k = 0; k < K; ++k)
      batch.states[g].push_back(std::move(slots[g][k].states));
  }
  return batch;
}

double clipped_surrogate(double ratio, double advantage, double clip_eps) {
  const double clipped =
      std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantage;
  return std::min(ratio * advantage, clipped);
}

double kl_categorical(const std::vector<double>& logp,
                      const std::vector<double>& logq) {
  if (logp.size() != logq.size())
    throw DataError("kl_categorical: distribution size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i)
    kl += std::exp(logp[i]) * (logp[i] - logq[i]);
  return kl;
}

namespace {

std::vector<double> log_probs(const PolicyForward& fwd) {
  std::vector<double> lp(fwd.logits.size());
  for (std::size_t v = 0; v < fwd.logits.size(); ++v)
    lp[v] = fwd.logits[v] - fwd.logsumexp;
  return lp;
}

}  // namespace

double kl_to_reference(const PolicyParams& params,
                       const PolicyParams& ref_params,
                       const std::vector<StateFeatures>& states) {
  if (states.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : states) {
    total += kl_categorical(log_probs(policy_forward(params, s)),
                            log_probs(policy_forward(ref_params, s)));
  }
  return total / static_cast<double>(states.size());
}

std::vector<CreditVector> plain_grpo_credit(const TrajectoryGroup& group,
                                            double eps_std) {
  std::vector<double> rewards;
  rewards.reserve(group.members.size());
  for (const auto& m : group.members) rewards.push_back(m.reward);
  const GroupStats stats = group_statistics(rewards, eps_std);
  std::vector<CreditVector> out(group.members.size());
  for (std::size_t k = 0; k < group.members.size(); ++k) {
    const std::size_t n =
        static_cast<std::size_t>(group.members[k].num_policy_tokens());
    out[k].w_final.assign(n, 1.0);
    out[k].adv.assign(n, stats.advantages[k]);
  }
  return out;
}

std::vector<std::vector<CreditVector>> batch_credit(const RolloutBatch& batch,
                                                    const GearConfig& cfg,
                                                    ExecMode mode) {
  std::vector<std::vector<CreditVector>> credit(batch.groups.size());
  parallel_for(batch.groups.size(), mode, [&](std::size_t g) {
    credit[g] = gear_credit(batch.groups[g], cfg);
  });
  return credit;
}

BatchLoss batch_loss_and_grad(const PolicyParams& params,
                              const PolicyParams& ref_params,
                              const RolloutBatch& batch,
                              const std::vector<std::vector<CreditVector>>& credit,
                              const TrainConfig& cfg) {
  const std::size_t G = batch.groups.size();
  if (credit.size() != G)
    throw DataError("batch_loss_and_grad: credit not aligned to groups");

  // Total policy tokens, for the KL-penalty state average.
  std::size_t total_tokens = 0;
  for (const auto& group_states : batch.states)
    for (const auto& traj : group_states) total_tokens += traj.states.size();
  if (total_tokens == 0)
    throw DataError("batch_loss_and_grad: batch has no policy tokens");

  struct TrajTask {
    std::size_t g = 0, k = 0;
  };
  std::vector<TrajTask> tasks;
  for (std::size_t g = 0; g < G; ++g) {
    if (credit[g].size() != batch.states[g].size() ||
        batch.states[g].size() != batch.groups[g].members.size())
      throw DataError("batch_loss_and_grad: credit not aligned to group members");
    for (std::size_t k = 0; k < batch.states[g].size(); ++k) {
      const std::size_t T = batch.states[g][k].states.size();
      if (static_cast<std::size_t>(
              batch.groups[g].members[k].num_policy_tokens()) != T ||
          credit[g][k].adv.size() != T ||
          batch.states[g][k].actions.size() != T)
        throw DataError(
            "batch_loss_and_grad: states/credit misaligned with trajectory");
      tasks.push_back({g, k});
    }
  }

  struct TrajResult {
    double loss = 0.0;
    PolicyParams grad;
    std::size_t clipped = 0;
  };
  std::vector<TrajResult> results(tasks.size());

  const double kl_scale = cfg.kl_penalty_coef / static_cast<double>(total_tokens);

  // No throwing inside the parallel region; non-finite intermediates surface
  // through the finiteness scan after the reduce.
  parallel_for(tasks.size(), cfg.exec, [&](std::size_t idx) {
    const auto [g, k] = tasks[idx];
    const RolloutStates& traj_states = batch.states[g][k];
    const PolicyView view = policy_token_view(batch.groups[g].members[k]);
    const CreditVector& cv = credit[g][k];
    const std::size_t T = traj_states.states.size();

    TrajResult& res = results[idx];
    res.grad = zero_like(params);
    const double surrogate_scale =
        -1.0 /
        (static_cast<double>(G) *
         static_cast<double>(batch.states[g].size()) * static_cast<double>(T));

    std::vector<double> g_logits(static_cast<std::size_t>(params.vocab));
    for (std::size_t t = 0; t < T; ++t) {
      const StateFeatures& feats = traj_states.states[t];
      const int action = traj_states.actions[t];
      const PolicyForward fwd = policy_forward(params, feats);
      const std::vector<double> probs = fwd.probs();
      const double logp = fwd.logp(action);
      const double ratio = std::exp(logp - view.behavior_logp[t]);

      const double adv = cv.adv[t];
      const double unclipped = ratio * adv;
      const double clipped =
          std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
      const bool clip_active = unclipped > clipped;
      res.loss += surrogate_scale * std::min(unclipped, clipped);
      if (clip_active) res.clipped += 1;

      std::fill(g_logits.begin(), g_logits.end(), 0.0);
      if (!clip_active) {
        // d min / d logp = adv * ratio when the unclipped branch is active;
        // the clipped branch has zero derivative outside the trust region.
        const double coeff = surrogate_scale * adv * ratio;
        for (int v = 0; v < params.vocab; ++v)
          g_logits[v] = -coeff * probs[v];
        g_logits[action] += coeff;
      }

      if (cfg.kl_penalty_coef != 0.0) {
        const PolicyForward ref_fwd = policy_forward(ref_params, feats);
        const std::vector<double> lp = log_probs(fwd);
        const std::vector<double> lq = log_probs(ref_fwd);
        double kl = 0.0;
        for (int v = 0; v < params.vocab; ++v)
          kl += probs[v] * (lp[v] - lq[v]);
        res.loss += kl_scale * kl;
        for (int v = 0; v < params.vocab; ++v)
          g_logits[v] += kl_scale * probs[v] * ((lp[v] - lq[v]) - kl);
      }

      policy_backward(params, feats, fwd, g_logits, res.grad);
    }
  });

  BatchLoss out;
  out.grad = zero_like(params);
  out.policy_tokens = total_tokens;
  std::size_t clipped_total = 0;
  for (const auto& res : results) {
    out.loss += res.loss;
    clipped_total += res.clipped;
    axpy(out.grad, res.grad, 1.0);
  }
  out.clipped_frac =
      static_cast<double>(clipped_total) / static_cast<double>(total_tokens);

  check_finite(out.loss, "batch_loss_and_grad: loss (check ratios and advantages)");
  check_finite_block(out.grad.embeddings, "embeddings");
  check_finite_block(out.grad.proj, "proj");
  check_finite_block(out.grad.out_w, "out_w");
  check_finite_block(out.grad.out_b, "out_b");
  return out;
}

double evaluate_policy(const PolicyParams& params, const TrainConfig& cfg) {
  std::vector<double> rewards(static_cast<std::size_t>(cfg.num_eval_instances));
  parallel_for(rewards.size(), cfg.exec, [&](std::size_t i) {
    const std::uint64_t instance_seed = mix_key(cfg.seed ^ kEvalTag, i);
    EpisodeRecord episode =
        run_episode(cfg.env, instance_seed, [&](const EnvState& state) {
          const PolicyForward fwd = policy_forward(
              params, make_features(cfg.env, state, params.context_k));
          ActionSample s;
          s.action = greedy_action(fwd.logits);
          s.behavior_logp = fwd.logp(s.action);
          s.entropy = policy_entropy(fwd.logits);
          s.teacher_logp = s.behavior_logp;
          return s;
        });
    rewards[i] = episode.trajectory.reward;
  });
  double sum = 0.0;
  for (double r : rewards) sum += r;
  return sum / static_cast<double>(rewards.size());
}

PolicyParams initial_policy(const TrainConfig& cfg) {
  Rng init_rng(mix_key(cfg.seed, kInitTag));
  return init_policy(cfg.env.vocab_size, cfg.policy_dim, cfg.context_k,
                     cfg.init_scale, init_rng);
}

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  PolicyParams params = initial_policy(cfg);
  const PolicyParams ref_params = params;

  TrainResult result;
  result.metrics.reserve(static_cast<std::size_t>(cfg.total_steps));
  double last_eval = evaluate_policy(params, cfg);

  for (int step = 0; step < cfg.total_steps; ++step) {
    const RolloutBatch batch = rollout_batch(params, cfg, step);
    std::vector<std::vector<TrajectoryCredit>> detailed(batch.groups.size());
    parallel_for(batch.groups.size(), cfg.exec, [&](std::size_t g) {
      detailed[g] = gear_credit_detailed(batch.groups[g], cfg.gear);
    });
    std::vector<std::vector<CreditVector>> credit(batch.groups.size());
    for (std::size_t g = 0; g < batch.groups.size(); ++g)
      for (const TrajectoryCredit& tc : detailed[g])
        credit[g].push_back(tc.credit);
    const BatchLoss bl =
        batch_loss_and_grad(params, ref_params, batch, credit, cfg);

    StepMetrics m;
    m.step = step;
    std::size_t n_traj = 0, n_tokens = 0, seg_tokens = 0;
    double reward_sum = 0.0, entropy_sum = 0.0, abs_adv_sum = 0.0;
    for (std::size_t g = 0; g < batch.groups.size(); ++g) {
      const TrajectoryGroup& group = batch.groups[g];
      for (std::size_t k = 0; k < group.members.size(); ++k) {
        reward_sum += group.members[k].reward;
        ++n_traj;
        const PolicyView view = policy_token_view(group.members[k]);
        for (double h : view.entropy) entropy_sum += h;
        for (double a : credit[g][k].adv) abs_adv_sum += std::abs(a);
        n_tokens += view.size();
        for (const Segment& s : detailed[g][k].segments)
          seg_tokens += static_cast<std::size_t>(s.end - s.start + 1);
      }
    }
    m.mean_reward = reward_sum / static_cast<double>(n_traj);
    m.mean_entropy = entropy_sum / static_cast<double>(n_tokens);
    m.mean_abs_adv = abs_adv_sum / static_cast<double>(n_tokens);
    m.segment_token_frac =
        static_cast<double>(seg_tokens) / static_cast<double>(n_tokens);
    m.clipped_frac = bl.clipped_frac;
    if (step % cfg.eval_interval == 0) last_eval = evaluate_policy(params, cfg);
    m.eval_success = last_eval;
    result.metrics.push_back(m);

    axpy(params, bl.grad, -cfg.learning_rate);
  }

  result.final_eval = evaluate_policy(params, cfg);
  result.params = std::move(params);
  return result;
}

GradCheckReport grad_check(const PolicyParams& params, const TrainConfig& cfg,
                           double tolerance, double h) {
  // Fixed small batch rolled out under the given parameters. Rewards are
  // overwritten with an alternating 0/1 pattern so group advantages (and with
  // them the surrogate term) are guaranteed nonzero.
  RolloutBatch batch = rollout_batch(params, cfg, /*step=*/0);
  for (auto& group : batch.groups) {
    std::vector<Trajectory> members = std::move(group.members);
    for (std::size_t k = 0; k < members.size(); ++k)
      members[k].reward = static_cast<double>(k % 2);
    group = make_trajectory_group(std::move(members));
  }
  const auto credit = batch_credit(batch, cfg.gear, ExecMode::Serial);
  TrainConfig serial_cfg = cfg;
  serial_cfg.exec = ExecMode::Serial;
  // A reference policy different from params keeps the KL-penalty term (and
  // its gradient) away from the trivial zero at equality.
  Rng ref_rng(mix_key(cfg.seed, 0xEEULL));
  const PolicyParams ref_params = init_policy(
      params.vocab, params.dim, params.context_k, cfg.init_scale, ref_rng);

  const auto loss_at = [&](const PolicyParams& p) {
    return batch_loss_and_grad(p, ref_params, batch, credit, serial_cfg).loss;
  };

  const BatchLoss base =
      batch_loss_and_grad(params, ref_params, batch, credit, serial_cfg);

  GradCheckReport report;
  PolicyParams probe = params;
  PolicyParams analytic = base.grad;
  const auto probe_blocks = param_blocks(probe);
  const auto grad_blocks = param_blocks(analytic);
  for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
    GradCheckBlock block;
    block.name = probe_blocks[b].name;
    std::vector<double>& data = *probe_blocks[b].data;
    const std::vector<double>& grad = *grad_blocks[b].data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = loss_at(probe);
      data[i] = saved - h;
      const double down = loss_at(probe);
      data[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1.0});
      block.max_rel_err =
          std::max(block.max_rel_err, std::abs(fd - grad[i]) / denom);
    }
    if (block.max_rel_err > report.max_rel_err) {
      report.max_rel_err = block.max_rel_err;
      report.worst_block = block.name;
    }
    report.blocks.push_back(block);
  }
  report.pass = report.max_rel_err < tolerance;
  return report;
}

}  // namespace gear
