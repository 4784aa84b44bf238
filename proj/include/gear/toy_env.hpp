#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gear/trajectory.hpp"

namespace gear {

// Deterministic synthetic agent task. The vocabulary is laid out as
//   [0, branch_arity)            branch-choice tokens
//   branch_arity                 CALL (tool invocation)
//   branch_arity + 1             ANS (answer prefix)
//   [branch_arity + 2, ...)      answer digit tokens (up to 10)
//   vocab_size - 1               filler used in observations
//
// Emitting CALL injects observation_len masked tokens; with probability
// hint_prob the observation starts with the branch token of the next correct
// branch. Emitting ANS makes the following token the final answer and ends
// the episode. The episode also ends after max_steps policy tokens.
//
// The j-th emission of a branch token is the j-th branch decision (j up to
// num_branches). An episode is solved when the final answer token encodes
// (prompt_key + number of correct branch decisions) mod 10.
struct EnvSpec {
  int vocab_size = 16;
  int max_steps = 16;
  int num_branches = 2;
  int branch_arity = 4;
  int observation_len = 2;
  double hint_prob = 0.8;
  std::uint64_t seed = 7;
  bool partial_credit = false;

  void validate() const;  // throws ConfigError

  int call_token() const { return branch_arity; }
  int ans_token() const { return branch_arity + 1; }
  int digit_base() const { return branch_arity + 2; }
  int num_digit_tokens() const {
    const int room = vocab_size - digit_base();
    return room < 10 ? room : 10;
  }
  int filler_token() const { return vocab_size - 1; }
  int answer_token_for_digit(int digit) const {
    return digit_base() + digit % num_digit_tokens();
  }

  // Probability that a uniform-random policy solves an instance: it must
  // emit ANS within the first max_steps - 1 tokens and then hit the single
  // target token.
  double chance_level() const;
};

struct EnvState {
  std::uint64_t prompt_key = 0;
  std::vector<int> generated_prefix;      // policy tokens so far
  std::vector<int> context;               // full interleaved trace so far
  std::optional<std::vector<int>> pending_observation;
  std::optional<int> answer_hint;         // present only in teacher states
  int step = 0;
  int calls_made = 0;
  int branches_decided = 0;
  int correct_branches = 0;
  bool awaiting_answer = false;
  bool done = false;
  std::optional<int> final_answer;
};

struct EpisodeRecord {
  Trajectory trajectory;
  int reference_answer = 0;
  int correct_branches = 0;
  std::uint64_t prompt_key = 0;
};

struct StepResult {
  EnvState next_state;
  std::vector<int> injected_observation;
  bool done = false;
};

EnvState reset(const EnvSpec& spec, std::uint64_t instance_seed);

StepResult step(const EnvSpec& spec, const EnvState& state, int action);

// The correct branch choice at decision point j (0-based) of an instance.
int correct_branch(const EnvSpec& spec, std::uint64_t prompt_key, int j);

// Final answer token of the all-correct reference path.
int reference_answer_token(const EnvSpec& spec, std::uint64_t prompt_key);

// Ground-truth answer token for the trajectory so far: the digit target
// tracks the branch decisions already made, so a teacher conditioned on it
// stays consistent with the student's own prefix.
int current_target_token(const EnvSpec& spec, std::uint64_t prompt_key,
                         int correct_branches);

double outcome_reward(const EpisodeRecord& episode, const EnvSpec& spec);

EnvState teacher_state(const EnvState& state, int reference_answer);

EpisodeRecord reference_trajectory(const EnvSpec& spec,
                                   std::uint64_t instance_seed);

// Drives the environment with a caller-supplied action source and records the
// flattened trace. The callback receives the current state and must return
// (action, behavior_logp, teacher_logp, entropy) for the next policy token.
struct ActionSample {
  int action = 0;
  double behavior_logp = 0.0;
  double teacher_logp = 0.0;
  double entropy = 0.0;
};

template <typename Sampler>
EpisodeRecord run_episode(const EnvSpec& spec, std::uint64_t instance_seed,
                          Sampler&& sample) {
  EnvState state = reset(spec, instance_seed);
  EpisodeRecord episode;
  episode.prompt_key = state.prompt_key;
  episode.reference_answer = reference_answer_token(spec, state.prompt_key);
  Trajectory& traj = episode.trajectory;
  traj.prompt_id = std::to_string(state.prompt_key);
  int position = 0;
  bool done = false;
  while (!done) {
    const ActionSample s = sample(static_cast<const EnvState&>(state));
    TokenRecord rec;
    rec.position = position++;
    rec.token_id = s.action;
    rec.is_policy_token = true;
    rec.behavior_logp = s.behavior_logp;
    rec.teacher_logp = s.teacher_logp;
    rec.entropy = s.entropy;
    traj.records.push_back(rec);
    StepResult result = step(spec, state, s.action);
    for (int obs : result.injected_observation) {
      TokenRecord orec;
      orec.position = position++;
      orec.token_id = obs;
      orec.is_policy_token = false;
      traj.records.push_back(orec);
    }
    state = std::move(result.next_state);
    done = result.done;
  }
  episode.correct_branches = state.correct_branches;
  traj.terminated = true;
  traj.reward = outcome_reward(episode, spec);
  return episode;
}

}  // namespace gear
