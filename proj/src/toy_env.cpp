#include "gear/toy_env.hpp"

#include <cmath>

#include "gear/errors.hpp"
#include "gear/rng.hpp"

namespace gear {

namespace {

constexpr std::uint64_t kBranchTag = 0x11;
constexpr std::uint64_t kHintTag = 0x22;

double unit_uniform(std::uint64_t key) {
  return static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53;
}

}  // namespace

void EnvSpec::validate() const {
  if (vocab_size < branch_arity + 4)
    throw ConfigError("vocab_size must be >= branch_arity + 4");
  if (branch_arity < 1) throw ConfigError("branch_arity must be >= 1");
  if (num_branches < 1) throw ConfigError("num_branches must be >= 1");
  if (observation_len < 1) throw ConfigError("observation_len must be >= 1");
  if (max_steps < 2 * num_branches + 2)
    throw ConfigError(
        "max_steps must fit the reference trajectory (2*num_branches + 2)");
  if (!(hint_prob >= 0.0 && hint_prob <= 1.0))
    throw ConfigError("hint_prob must lie in [0,1]");
}

double EnvSpec::chance_level() const {
  const double p = 1.0 / static_cast<double>(vocab_size);
  return p * (1.0 - std::pow(1.0 - p, max_steps - 1));
}

EnvState reset(const EnvSpec& spec, std::uint64_t instance_seed) {
  (void)spec;
  EnvState state;
  state.prompt_key = splitmix64(instance_seed);
  return state;
}

int correct_branch(const EnvSpec& spec, std::uint64_t prompt_key, int j) {
  const std::uint64_t key =
      mix_key(mix_key(spec.seed ^ kBranchTag, prompt_key),
              static_cast<std::uint64_t>(j));
  return static_cast<int>(splitmix64(key) %
                          static_cast<std::uint64_t>(spec.branch_arity));
}

int reference_answer_token(const EnvSpec& spec, std::uint64_t prompt_key) {
  return current_target_token(spec, prompt_key, spec.num_branches);
}

int current_target_token(const EnvSpec& spec, std::uint64_t prompt_key,
                         int correct_branches) {
  const int digit =
      static_cast<int>((prompt_key % 10 +
                        static_cast<std::uint64_t>(correct_branches)) %
                       10);
  return spec.answer_token_for_digit(digit);
}

StepResult step(const EnvSpec& spec, const EnvState& state, int action) {
  if (action < 0 || action >= spec.vocab_size)
    throw DataError("step: action " + std::to_string(action) +
                    " outside vocabulary [0," +
                    std::to_string(spec.vocab_size) + ")");
  if (state.done) throw DataError("step: episode already terminated");

  StepResult result;
  EnvState& next = result.next_state;
  next = state;
  next.generated_prefix.push_back(action);
  next.context.push_back(action);
  next.step += 1;
  next.pending_observation.reset();

  if (state.awaiting_answer) {
    next.final_answer = action;
    next.awaiting_answer = false;
    next.done = true;
    result.done = true;
    return result;
  }

  if (action == spec.ans_token()) {
    next.awaiting_answer = true;
  } else if (action < spec.branch_arity &&
             state.branches_decided < spec.num_branches) {
    const int j = state.branches_decided;
    next.branches_decided += 1;
    if (action == correct_branch(spec, state.prompt_key, j))
      next.correct_branches += 1;
  } else if (action == spec.call_token()) {
    const std::uint64_t key =
        mix_key(mix_key(spec.seed ^ kHintTag, state.prompt_key),
                static_cast<std::uint64_t>(state.calls_made));
    const bool pending = state.branches_decided < spec.num_branches;
    const bool hint = pending && unit_uniform(key) < spec.hint_prob;
    std::vector<int> obs(static_cast<std::size_t>(spec.observation_len),
                         spec.filler_token());
    if (hint)
      obs[0] = correct_branch(spec, state.prompt_key, state.branches_decided);
    next.calls_made += 1;
    for (int tok : obs) next.context.push_back(tok);
    next.pending_observation = obs;
    result.injected_observation = std::move(obs);
  }
  // Any other token is inert filler.

  if (next.step >= spec.max_steps) next.done = true;
  result.done = next.done;
  return result;
}

double outcome_reward(const EpisodeRecord& episode, const EnvSpec& spec) {
  if (!episode.trajectory.terminated)
    throw DataError("outcome_reward: episode has not terminated");

  // Recover the answer from the trace: the policy token right after the
  // first ANS emission.
  bool saw_ans = false;
  std::optional<int> answer;
  for (const auto& rec : episode.trajectory.records) {
    if (!rec.is_policy_token) continue;
    if (saw_ans) {
      answer = rec.token_id;
      break;
    }
    if (rec.token_id == spec.ans_token()) saw_ans = true;
  }

  const bool correct =
      answer.has_value() &&
      *answer == current_target_token(spec, episode.prompt_key,
                                      episode.correct_branches);
  if (!spec.partial_credit) return correct ? 1.0 : 0.0;
  return (static_cast<double>(episode.correct_branches) + (correct ? 1.0 : 0.0)) /
         (static_cast<double>(spec.num_branches) + 1.0);
}

EnvState teacher_state(const EnvState& state, int reference_answer) {
  if (state.answer_hint.has_value())
    throw DataError("teacher_state: answer hint already present");
  EnvState teacher = state;
  teacher.answer_hint = reference_answer;
  return teacher;
}

EpisodeRecord reference_trajectory(const EnvSpec& spec,
                                   std::uint64_t instance_seed) {
  const EnvState initial = reset(spec, instance_seed);
  std::vector<int> actions;
  for (int j = 0; j < spec.num_branches; ++j) {
    actions.push_back(spec.call_token());
    actions.push_back(correct_branch(spec, initial.prompt_key, j));
  }
  actions.push_back(spec.ans_token());
  actions.push_back(reference_answer_token(spec, initial.prompt_key));

  std::size_t i = 0;
  // Deterministic scripted policy: probability one on each scripted action.
  return run_episode(spec, instance_seed, [&](const EnvState&) {
    ActionSample s;
    s.action = actions[i++];
    return s;
  });
}

}  // namespace gear
