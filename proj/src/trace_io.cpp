#include "gear/trace_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "gear/errors.hpp"

namespace gear {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& name, std::size_t line,
                       const std::string& message) {
  throw DataError(name + ":" + std::to_string(line) + ": " + message);
}

json traj_header(const Trajectory& traj, int group_id, int member_index) {
  json rec;
  rec["kind"] = "traj";
  rec["prompt_id"] = traj.prompt_id;
  rec["group_id"] = group_id;
  rec["member_index"] = member_index;
  rec["reward"] = traj.reward;
  rec["terminated"] = traj.terminated;
  return rec;
}

json tok_record(const TokenRecord& tok) {
  json rec;
  rec["kind"] = "tok";
  rec["position"] = tok.position;
  rec["token_id"] = tok.token_id;
  rec["is_policy_token"] = tok.is_policy_token;
  if (tok.behavior_logp) rec["behavior_logp"] = *tok.behavior_logp;
  if (tok.teacher_logp) rec["teacher_logp"] = *tok.teacher_logp;
  if (tok.entropy) rec["entropy"] = *tok.entropy;
  if (tok.text) rec["text"] = *tok.text;
  return rec;
}

}  // namespace

std::vector<TrajectoryGroup> parse_trace_stream(std::istream& in,
                                                const std::string& name) {
  std::vector<TrajectoryGroup> groups;
  std::vector<Trajectory> pending_members;
  bool have_group = false;
  long long current_group_id = 0;
  bool have_traj = false;
  Trajectory current;
  std::size_t header_line = 0;

  const auto flush_trajectory = [&](std::size_t line) {
    if (!have_traj) return;
    try {
      validate_trajectory(current);
    } catch (const DataError& e) {
      fail(name, header_line, e.what());
    }
    (void)line;
    pending_members.push_back(std::move(current));
    current = Trajectory{};
    have_traj = false;
  };
  const auto flush_group = [&](std::size_t line) {
    flush_trajectory(line);
    if (!have_group) return;
    if (pending_members.empty())
      fail(name, line, "group with no trajectories");
    try {
      groups.push_back(make_trajectory_group(std::move(pending_members)));
    } catch (const DataError& e) {
      fail(name, header_line,
           std::string(e.what()) + " (group_id " +
               std::to_string(current_group_id) + ")");
    }
    pending_members.clear();
    have_group = false;
  };

  std::string line_text;
  std::size_t line_no = 0;
  while (std::getline(in, line_text)) {
    ++line_no;
    if (line_text.empty()) continue;
    json rec;
    try {
      rec = json::parse(line_text);
    } catch (const json::parse_error& e) {
      fail(name, line_no, std::string("malformed JSON record: ") + e.what());
    }
    const std::string kind = rec.value("kind", "");
    if (kind == "traj") {
      flush_trajectory(line_no);
      if (!rec.contains("prompt_id") || !rec.contains("group_id") ||
          !rec.contains("reward"))
        fail(name, line_no, "traj record needs prompt_id, group_id, reward");
      const long long gid = rec["group_id"].get<long long>();
      if (!have_group || gid != current_group_id) {
        flush_group(line_no);
        have_group = true;
        current_group_id = gid;
      }
      have_traj = true;
      header_line = line_no;
      current = Trajectory{};
      if (rec["prompt_id"].is_string())
        current.prompt_id = rec["prompt_id"].get<std::string>();
      else
        current.prompt_id = rec["prompt_id"].dump();
      current.reward = rec["reward"].get<double>();
      current.terminated = rec.value("terminated", true);
    } else if (kind == "tok") {
      if (!have_traj)
        fail(name, line_no, "tok record before any traj header");
      TokenRecord tok;
      if (!rec.contains("position") || !rec.contains("token_id") ||
          !rec.contains("is_policy_token"))
        fail(name, line_no,
             "tok record needs position, token_id, is_policy_token");
      tok.position = rec["position"].get<int>();
      tok.token_id = rec["token_id"].get<int>();
      tok.is_policy_token = rec["is_policy_token"].get<bool>();
      if (rec.contains("behavior_logp"))
        tok.behavior_logp = rec["behavior_logp"].get<double>();
      if (rec.contains("teacher_logp"))
        tok.teacher_logp = rec["teacher_logp"].get<double>();
      if (rec.contains("entropy")) tok.entropy = rec["entropy"].get<double>();
      if (rec.contains("text")) tok.text = rec["text"].get<std::string>();
      try {
        validate_token_record(tok);
      } catch (const DataError& e) {
        fail(name, line_no, e.what());
      }
      current.records.push_back(std::move(tok));
    } else {
      fail(name, line_no, "record kind must be 'traj' or 'tok'");
    }
  }
  flush_group(line_no + 1);
  return groups;
}

std::vector<TrajectoryGroup> parse_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file: " + path);
  return parse_trace_stream(in, path);
}

void write_trace_stream(std::ostream& out,
                        const std::vector<TrajectoryGroup>& groups) {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t k = 0; k < groups[g].members.size(); ++k) {
      const Trajectory& traj = groups[g].members[k];
      out << traj_header(traj, static_cast<int>(g), static_cast<int>(k)).dump()
          << '\n';
      for (const TokenRecord& tok : traj.records)
        out << tok_record(tok).dump() << '\n';
    }
  }
}

void write_trace(const std::string& path,
                 const std::vector<TrajectoryGroup>& groups) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output trace file: " + path);
  write_trace_stream(out, groups);
}

void write_reweighted_trace(
    const std::string& path, const std::vector<TrajectoryGroup>& groups,
    const std::vector<std::vector<TrajectoryCredit>>& credit) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output trace file: " + path);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t k = 0; k < groups[g].members.size(); ++k) {
      const Trajectory& traj = groups[g].members[k];
      const TrajectoryCredit& tc = credit[g][k];
      out << traj_header(traj, static_cast<int>(g), static_cast<int>(k)).dump()
          << '\n';
      int policy_index = -1;
      for (const TokenRecord& tok : traj.records) {
        json rec = tok_record(tok);
        if (tok.is_policy_token) {
          ++policy_index;
          rec["norm_rkl"] = tc.norm_rkl[policy_index];
          rec["w_kl"] = tc.credit.w_kl[policy_index];
          rec["w_signed"] = tc.credit.w_signed[policy_index];
          rec["w_final"] = tc.credit.w_final[policy_index];
          rec["adv"] = tc.credit.adv[policy_index];
          json seg_id = nullptr;
          for (std::size_t s = 0; s < tc.segments.size(); ++s) {
            if (policy_index >= tc.segments[s].start &&
                policy_index <= tc.segments[s].end) {
              seg_id = static_cast<int>(s);
              break;
            }
          }
          rec["segment_id"] = seg_id;
        }
        out << rec.dump() << '\n';
      }
    }
  }
}

}  // namespace gear
