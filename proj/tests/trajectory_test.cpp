#include <cmath>
#include <random>

#include "doctest.h"
#include "gear/errors.hpp"
#include "gear/trajectory.hpp"

using namespace gear;

namespace {

TokenRecord policy_tok(int pos, int id, double blogp, double tlogp, double h) {
  TokenRecord r;
  r.position = pos;
  r.token_id = id;
  r.is_policy_token = true;
  r.behavior_logp = blogp;
  r.teacher_logp = tlogp;
  r.entropy = h;
  return r;
}

TokenRecord obs_tok(int pos, int id) {
  TokenRecord r;
  r.position = pos;
  r.token_id = id;
  r.is_policy_token = false;
  return r;
}

}  // namespace

TEST_CASE("policy_token_view filters observation tokens in order") {
  Trajectory traj;
  traj.prompt_id = "p";
  traj.records = {policy_tok(0, 5, -1.0, -2.0, 0.5), obs_tok(1, 9),
                  policy_tok(2, 7, -0.5, -0.5, 1.5)};
  traj.terminated = true;

  const PolicyView view = policy_token_view(traj);
  REQUIRE(view.size() == 2);
  CHECK(view.positions == std::vector<int>{0, 2});
  CHECK(view.behavior_logp == std::vector<double>{-1.0, -0.5});
  CHECK(view.teacher_logp == std::vector<double>{-2.0, -0.5});
  CHECK(view.entropy == std::vector<double>{0.5, 1.5});
}

TEST_CASE("policy_token_view of all-observation trace is empty") {
  Trajectory traj;
  traj.records = {obs_tok(0, 1), obs_tok(1, 2)};
  CHECK(policy_token_view(traj).size() == 0);
}

TEST_CASE("policy_token_view length matches an independent mask count") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Trajectory traj;
    int expected = 0;
    for (int pos = 0; pos < 64; ++pos) {
      if (rng() % 2 == 0) {
        traj.records.push_back(policy_tok(pos, static_cast<int>(rng() % 16),
                                          -1.0, -1.0, 0.1));
        ++expected;  // independent linear scan of the mask flags
      } else {
        traj.records.push_back(obs_tok(pos, static_cast<int>(rng() % 16)));
      }
    }
    const PolicyView view = policy_token_view(traj);
    CHECK(static_cast<int>(view.size()) == expected);
    // Round-trip: reading through the view equals reading directly.
    for (std::size_t i = 0; i < view.size(); ++i) {
      const TokenRecord& rec = traj.records[view.positions[i]];
      CHECK(rec.is_policy_token);
      CHECK(view.behavior_logp[i] == *rec.behavior_logp);
      CHECK(view.entropy[i] == *rec.entropy);
    }
  }
}

TEST_CASE("group_statistics matches direct arithmetic") {
  SUBCASE("two successes, two failures") {
    const GroupStats s = group_statistics({1, 1, 0, 0}, 1e-4);
    CHECK(s.mean == doctest::Approx(0.5));
    CHECK(s.stdev == doctest::Approx(0.5));
    for (int k = 0; k < 2; ++k)
      CHECK(s.advantages[k] == doctest::Approx(0.999800039992).epsilon(1e-12));
    for (int k = 2; k < 4; ++k)
      CHECK(s.advantages[k] == doctest::Approx(-0.999800039992).epsilon(1e-12));
  }
  SUBCASE("identical rewards give zero advantages") {
    const GroupStats s = group_statistics({0.3, 0.3, 0.3, 0.3}, 1e-4);
    for (double a : s.advantages) CHECK(a == 0.0);
  }
  SUBCASE("identical rewards with zero epsilon stay finite") {
    const GroupStats s = group_statistics({0.7, 0.7}, 0.0);
    CHECK(s.stdev == 0.0);
    for (double a : s.advantages) CHECK(a == 0.0);
  }
  SUBCASE("single success, eps 0") {
    const GroupStats s = group_statistics({1, 0, 0, 0}, 0.0);
    CHECK(s.mean == doctest::Approx(0.25));
    CHECK(s.advantages[0] ==
          doctest::Approx(1.7320508075688772).epsilon(1e-14));
    CHECK(s.advantages[1] ==
          doctest::Approx(-0.5773502691896257).epsilon(1e-14));
  }
}

TEST_CASE("group advantages sum to zero") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = 2 + static_cast<int>(rng() % 7);
    std::vector<double> rewards;
    for (int k = 0; k < K; ++k) rewards.push_back(uni(rng));
    const GroupStats s = group_statistics(rewards, 1e-4);
    double sum = 0.0;
    for (double a : s.advantages) sum += a;
    CHECK(std::abs(sum) < 1e-9);
  }
}

TEST_CASE("token record invariants are enforced") {
  TokenRecord bad = obs_tok(0, 3);
  bad.teacher_logp = -0.5;  // observation token with a policy-only field
  CHECK_THROWS_AS(validate_token_record(bad), DataError);

  TokenRecord positive_logp = policy_tok(0, 3, 0.5, -1.0, 0.2);
  CHECK_THROWS_AS(validate_token_record(positive_logp), DataError);

  TokenRecord negative_entropy = policy_tok(0, 3, -0.5, -1.0, -0.2);
  CHECK_THROWS_AS(validate_token_record(negative_entropy), DataError);

  CHECK_NOTHROW(validate_token_record(policy_tok(0, 3, 0.0, 0.0, 0.0)));
}

TEST_CASE("trajectory invariants are enforced") {
  Trajectory gap;
  gap.records = {policy_tok(0, 1, -1, -1, 0), policy_tok(2, 1, -1, -1, 0)};
  CHECK_THROWS_AS(validate_trajectory(gap), DataError);

  Trajectory no_policy;
  no_policy.records = {obs_tok(0, 1)};
  no_policy.terminated = true;
  CHECK_THROWS_AS(validate_trajectory(no_policy), DataError);

  Trajectory ok;
  ok.records = {policy_tok(0, 1, -1, -1, 0), obs_tok(1, 2)};
  ok.terminated = true;
  CHECK_NOTHROW(validate_trajectory(ok));
}

TEST_CASE("segment list validation") {
  CHECK_NOTHROW(validate_segments({{0, 2, 0.5}, {3, 3, 0.1}}, 4));
  CHECK_THROWS_AS(validate_segments({{2, 1, 0.0}}, 4), DataError);
  CHECK_THROWS_AS(validate_segments({{0, 2, 0.0}, {2, 3, 0.0}}, 4), DataError);
  CHECK_THROWS_AS(validate_segments({{0, 4, 0.0}}, 4), DataError);
}

TEST_CASE("make_trajectory_group computes population statistics") {
  Trajectory a, b;
  a.prompt_id = b.prompt_id = "x";
  a.records = {policy_tok(0, 1, -1, -1, 0)};
  b.records = {policy_tok(0, 2, -1, -1, 0)};
  a.reward = 1.0;
  b.reward = 0.0;
  const TrajectoryGroup group = make_trajectory_group({a, b});
  CHECK(group.group_mean == doctest::Approx(0.5));
  CHECK(group.group_std == doctest::Approx(0.5));

  Trajectory c = b;
  c.prompt_id = "y";
  CHECK_THROWS_AS(make_trajectory_group({a, c}), DataError);
}

TEST_CASE("tool_call_markers finds policy tokens followed by observations") {
  Trajectory traj;
  traj.records = {policy_tok(0, 1, -1, -1, 0), policy_tok(1, 4, -1, -1, 0),
                  obs_tok(2, 9),               obs_tok(3, 9),
                  policy_tok(4, 2, -1, -1, 0), policy_tok(5, 4, -1, -1, 0),
                  obs_tok(6, 9),               policy_tok(7, 5, -1, -1, 0)};
  CHECK(tool_call_markers(traj) == std::vector<int>{1, 3});
}
