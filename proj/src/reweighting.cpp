#include "gear/reweighting.hpp"

#include <cstddef>

#include "gear/errors.hpp"

namespace gear {

std::vector<double> sign_aware_weights(const std::vector<double>& w_kl,
                                       double advantage) {
  const double sign =
      advantage > 0.0 ? 1.0 : (advantage < 0.0 ? -1.0 : 0.0);
  std::vector<double> w(w_kl.size());
  for (std::size_t i = 0; i < w_kl.size(); ++i)
    w[i] = 0.5 + (0.5 - w_kl[i]) * sign;
  return w;
}

std::vector<double> affine_rescale(const std::vector<double>& w,
                                   const RewardModulation& mod) {
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = mod.apply(w[i]);
  return out;
}

std::vector<double> reweight_advantage(const std::vector<double>& w_final,
                                       double advantage) {
  std::vector<double> out(w_final.size());
  for (std::size_t i = 0; i < w_final.size(); ++i)
    out[i] = w_final[i] * advantage;
  return out;
}

namespace {

SegmentationResult segment_for_variant(const Trajectory& traj,
                                       const std::vector<double>& norm_rkl,
                                       const std::vector<double>& entropy,
                                       const GearConfig& cfg) {
  switch (cfg.variant) {
    case Variant::Gear:
      return segment_gear(norm_rkl, entropy, cfg);
    case Variant::KlOnly:
      return segment_kl_only(norm_rkl, cfg);
    case Variant::EntropyOnly:
      return segment_entropy_only(norm_rkl, entropy, cfg);
    case Variant::Marker:
      return segment_by_markers(tool_call_markers(traj),
                                static_cast<int>(norm_rkl.size()), norm_rkl);
    case Variant::EntropyWindow:
      return segment_entropy_window(norm_rkl, entropy, cfg);
    case Variant::TokenOnly:
      break;  // handled by the caller: no segments, token-level weights
  }
  return {{}, norm_rkl};
}

}  // namespace

std::vector<TrajectoryCredit> gear_credit_detailed(const TrajectoryGroup& group,
                                                   const GearConfig& cfg) {
  std::vector<double> rewards;
  rewards.reserve(group.members.size());
  for (const auto& m : group.members) rewards.push_back(m.reward);
  const GroupStats stats = group_statistics(rewards, cfg.eps_std);

  const RewardModulation mod{cfg.alpha, cfg.affine_offset, false};
  std::vector<TrajectoryCredit> out(group.members.size());
  for (std::size_t k = 0; k < group.members.size(); ++k) {
    const PolicyView view = policy_token_view(group.members[k]);
    TrajectoryCredit& tc = out[k];
    tc.advantage = stats.advantages[k];
    if (view.size() == 0) continue;  // degenerate: nothing to credit

    tc.norm_rkl =
        minmax_normalize(
            reverse_kl_sequence(view.behavior_logp, view.teacher_logp).values)
            .values;
    SegmentationResult seg =
        segment_for_variant(group.members[k], tc.norm_rkl, view.entropy, cfg);
    tc.segments = std::move(seg.segments);
    tc.credit.w_kl = std::move(seg.w_kl);
    tc.credit.w_signed = sign_aware_weights(tc.credit.w_kl, tc.advantage);
    tc.credit.w_final = affine_rescale(tc.credit.w_signed, mod);
    tc.credit.adv = reweight_advantage(tc.credit.w_final, tc.advantage);
  }
  return out;
}

std::vector<CreditVector> gear_credit(const TrajectoryGroup& group,
                                      const GearConfig& cfg) {
  std::vector<TrajectoryCredit> detailed = gear_credit_detailed(group, cfg);
  std::vector<CreditVector> out;
  out.reserve(detailed.size());
  for (auto& tc : detailed) out.push_back(std::move(tc.credit));
  return out;
}

}  // namespace gear
