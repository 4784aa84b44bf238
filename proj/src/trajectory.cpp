#include "gear/trajectory.hpp"

#include <cmath>
#include <cstddef>

#include "gear/errors.hpp"

namespace gear {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Gear: return "gear";
    case Variant::TokenOnly: return "token_only";
    case Variant::KlOnly: return "kl_only";
    case Variant::EntropyOnly: return "entropy_only";
    case Variant::Marker: return "marker";
    case Variant::EntropyWindow: return "entropy_window";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "gear") return Variant::Gear;
  if (s == "token_only") return Variant::TokenOnly;
  if (s == "kl_only") return Variant::KlOnly;
  if (s == "entropy_only") return Variant::EntropyOnly;
  if (s == "marker") return Variant::Marker;
  if (s == "entropy_window") return Variant::EntropyWindow;
  throw ConfigError("unknown variant '" + s +
                    "' (expected gear|token_only|kl_only|entropy_only|"
                    "marker|entropy_window)");
}

void GearConfig::validate() const {
  if (!(lambda_kl > 0.0 && lambda_kl < 1.0))
    throw ConfigError("lambda_kl must lie in (0,1)");
  if (!(lambda_h > 1.0)) throw ConfigError("lambda_h must be > 1");
  // alpha = 0 is the plain-GRPO degeneracy used by the ablation baseline.
  if (alpha < 0.0 || !std::isfinite(alpha))
    throw ConfigError("alpha must be >= 0");
  if (!(clip_eps > 0.0 && clip_eps < 1.0))
    throw ConfigError("clip_eps must lie in (0,1)");
  if (window_size < 1) throw ConfigError("window_size must be >= 1");
  if (!(eps_std >= 0.0)) throw ConfigError("eps_std must be >= 0");
  if (!(kl_penalty_coef >= 0.0))
    throw ConfigError("kl_penalty_coef must be >= 0");
}

void validate_token_record(const TokenRecord& rec) {
  const bool has_all =
      rec.behavior_logp.has_value() && rec.teacher_logp.has_value() &&
      rec.entropy.has_value();
  const bool has_any =
      rec.behavior_logp.has_value() || rec.teacher_logp.has_value() ||
      rec.entropy.has_value();
  if (rec.is_policy_token && !has_all)
    throw DataError(
        "token record invariant: behavior_logp/teacher_logp/entropy must be "
        "present on policy tokens");
  if (!rec.is_policy_token && has_any)
    throw DataError(
        "token record invariant: behavior_logp/teacher_logp/entropy must be "
        "absent on observation tokens");
  if (rec.is_policy_token) {
    if (!std::isfinite(*rec.behavior_logp) || *rec.behavior_logp > 0.0)
      throw DataError("token record invariant: behavior_logp must be finite and <= 0");
    if (!std::isfinite(*rec.teacher_logp) || *rec.teacher_logp > 0.0)
      throw DataError("token record invariant: teacher_logp must be finite and <= 0");
    if (!std::isfinite(*rec.entropy) || *rec.entropy < 0.0)
      throw DataError("token record invariant: entropy must be finite and >= 0");
  }
}

void validate_trajectory(const Trajectory& traj) {
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    if (traj.records[i].position != static_cast<int>(i))
      throw DataError(
          "trajectory invariant: positions must be consecutive from 0");
    validate_token_record(traj.records[i]);
  }
  if (!std::isfinite(traj.reward))
    throw DataError("trajectory invariant: reward must be finite");
  if (traj.terminated && traj.num_policy_tokens() == 0)
    throw DataError(
        "trajectory invariant: a terminated trajectory needs at least one "
        "policy token");
}

void validate_segments(const std::vector<Segment>& segments, int length) {
  int prev_end = -1;
  for (const auto& s : segments) {
    if (s.start > s.end)
      throw DataError("segment invariant: start must be <= end");
    if (s.start <= prev_end)
      throw DataError("segment invariant: segments must be disjoint and sorted");
    if (s.start < 0 || s.end >= length)
      throw DataError("segment invariant: segment out of range");
    prev_end = s.end;
  }
}

PolicyView policy_token_view(const Trajectory& traj) {
  PolicyView view;
  for (const auto& rec : traj.records) {
    if (!rec.is_policy_token) continue;
    view.positions.push_back(rec.position);
    view.behavior_logp.push_back(rec.behavior_logp.value());
    view.teacher_logp.push_back(rec.teacher_logp.value());
    view.entropy.push_back(rec.entropy.value());
  }
  return view;
}

GroupStats group_statistics(const std::vector<double>& rewards,
                            double eps_std) {
  GroupStats out;
  if (rewards.empty()) throw DataError("group_statistics: empty reward list");
  double sum = 0.0;
  for (double r : rewards) sum += r;
  out.mean = sum / static_cast<double>(rewards.size());
  double ss = 0.0;
  for (double r : rewards) {
    const double d = r - out.mean;
    ss += d * d;
  }
  out.stdev = std::sqrt(ss / static_cast<double>(rewards.size()));
  const double denom = out.stdev + eps_std;
  out.advantages.reserve(rewards.size());
  // Identical rewards with eps_std = 0 would divide 0 by 0; the deviations
  // are exactly zero, so the advantages are too.
  for (double r : rewards)
    out.advantages.push_back(denom == 0.0 ? 0.0 : (r - out.mean) / denom);
  return out;
}

TrajectoryGroup make_trajectory_group(std::vector<Trajectory> members) {
  if (members.empty())
    throw DataError("trajectory group invariant: group must not be empty");
  TrajectoryGroup group;
  group.prompt_id = members.front().prompt_id;
  for (const auto& m : members) {
    if (m.prompt_id != group.prompt_id)
      throw DataError(
          "trajectory group invariant: members must share one prompt_id");
  }
  std::vector<double> rewards;
  rewards.reserve(members.size());
  for (const auto& m : members) rewards.push_back(m.reward);
  const GroupStats stats = group_statistics(rewards, 0.0);
  group.group_mean = stats.mean;
  group.group_std = stats.stdev;
  group.members = std::move(members);
  return group;
}

std::vector<int> tool_call_markers(const Trajectory& traj) {
  std::vector<int> markers;
  int policy_index = -1;
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    if (!traj.records[i].is_policy_token) continue;
    ++policy_index;
    if (i + 1 < traj.records.size() && !traj.records[i + 1].is_policy_token)
      markers.push_back(policy_index);
  }
  return markers;
}

}  // namespace gear
