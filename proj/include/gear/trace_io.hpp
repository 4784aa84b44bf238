#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gear/reweighting.hpp"
#include "gear/trajectory.hpp"

namespace gear {

// Line-delimited JSON trace format. Each trajectory is one header record
//   {"kind":"traj","prompt_id":...,"group_id":...,"member_index":...,
//    "reward":...,"terminated":...}
// followed by its token records
//   {"kind":"tok","position":...,"token_id":...,"is_policy_token":...,
//    "behavior_logp":...,"teacher_logp":...,"entropy":...,"text":...}
// with the optional numeric fields present iff is_policy_token. Groups are
// contiguous blocks sharing group_id.

std::vector<TrajectoryGroup> parse_trace(const std::string& path);
std::vector<TrajectoryGroup> parse_trace_stream(std::istream& in,
                                                const std::string& name);

void write_trace(const std::string& path,
                 const std::vector<TrajectoryGroup>& groups);
void write_trace_stream(std::ostream& out,
                        const std::vector<TrajectoryGroup>& groups);

// Trace with per-policy-token credit fields appended to the token records:
// norm_rkl, w_kl, w_signed, w_final, adv, and segment_id (null outside
// segments).
void write_reweighted_trace(const std::string& path,
                            const std::vector<TrajectoryGroup>& groups,
                            const std::vector<std::vector<TrajectoryCredit>>& credit);

}  // namespace gear
