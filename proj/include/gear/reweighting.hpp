#pragma once

#include <vector>

#include "gear/segmentation.hpp"
#include "gear/signals.hpp"
#include "gear/trajectory.hpp"

namespace gear {

// Affine modulation W = alpha * w + offset. With the derived-offset rule the
// offset is pinned to 1 - 0.5*alpha and the map is evaluated in the centered
// form 1 + alpha*(w - 0.5), which keeps W == 1 exact at w == 0.5 and the
// range endpoints 1 -/+ 0.5*alpha exact.
struct RewardModulation {
  double alpha = 0.2;
  double affine_offset = 0.9;
  bool derived_offset_rule = false;

  static RewardModulation derived(double alpha_value) {
    return {alpha_value, 1.0 - 0.5 * alpha_value, true};
  }

  double apply(double w) const {
    if (derived_offset_rule) return 1.0 + alpha * (w - 0.5);
    return alpha * w + affine_offset;
  }
};

// w[t] = 0.5 + (0.5 - w_kl[t]) * sign(advantage), with sign(0) = 0.
std::vector<double> sign_aware_weights(const std::vector<double>& w_kl,
                                       double advantage);

std::vector<double> affine_rescale(const std::vector<double>& w,
                                   const RewardModulation& mod);

std::vector<double> reweight_advantage(const std::vector<double>& w_final,
                                       double advantage);

// Full per-trajectory pipeline output; gear_credit returns the CreditVector
// slice, the detailed form also carries the signals and segments for trace
// augmentation and analysis.
struct TrajectoryCredit {
  CreditVector credit;
  std::vector<double> norm_rkl;
  std::vector<Segment> segments;
  double advantage = 0.0;
};

std::vector<TrajectoryCredit> gear_credit_detailed(const TrajectoryGroup& group,
                                                   const GearConfig& cfg);

std::vector<CreditVector> gear_credit(const TrajectoryGroup& group,
                                      const GearConfig& cfg);

}  // namespace gear
