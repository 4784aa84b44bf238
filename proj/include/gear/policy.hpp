#pragma once

#include <cstdint>
#include <vector>

#include "gear/rng.hpp"
#include "gear/toy_env.hpp"

namespace gear {

// Snapshot of everything the policy reads from an environment state. Token
// ids are kept (not embedded) so the forward pass can be re-run under
// updated embeddings when computing ratios.
struct StateFeatures {
  std::vector<int> window;    // last <= k context tokens, oldest first
  int prompt_digit = 0;       // prompt_key mod 10
  int hint_digit = -1;        // answer-hint digit index, -1 when absent
  int hint_token = -1;        // answer-hint token id, -1 when absent
  double progress = 0.0;      // step / max_steps
  double branches_frac = 0.0; // branches_decided / num_branches
  bool awaiting_answer = false;
  // Ground-truth conditioning for teacher states: a fixed logit bias built
  // from the privileged information (empty for student states). Added after
  // the learned head, so it carries no gradient.
  std::vector<double> teacher_bias;
};

// One-hot prompt digit (10) + one-hot hint digit (10) + hint-present flag +
// progress + branches_frac + awaiting_answer.
constexpr int kExtraFeatures = 24;

// Conditioning strengths for the teacher bias. The ground-truth-conditioned
// teacher leans toward moves that complete the current prefix correctly
// (answering, the right branch, tool calls while branches remain) and away
// from moves that break it or waste steps.
struct TeacherGains {
  double branch = 2.0;      // toward the correct branch, away from wrong ones
  double answer = 2.0;      // toward the hinted digit at the answer slot
  double ans_prefix = 1.0;  // toward ANS elsewhere
  double call = 0.5;        // toward CALL while branches remain
  double waste = 1.0;       // away from filler and out-of-slot tokens
};

StateFeatures make_features(const EnvSpec& spec, const EnvState& state,
                            int context_k,
                            const TeacherGains& gains = TeacherGains{});

// Autoregressive softmax policy: mean-pooled window embeddings concatenated
// with the scalar features, one tanh projection, linear output head. Teacher
// states additionally add the fixed conditioning bias from StateFeatures.
struct PolicyParams {
  int vocab = 0;
  int dim = 0;
  int context_k = 0;
  std::vector<double> embeddings;  // vocab x dim
  std::vector<double> proj;        // dim x (dim + kExtraFeatures)
  std::vector<double> out_w;       // dim x vocab
  std::vector<double> out_b;       // vocab

  int input_dim() const { return dim + kExtraFeatures; }
  std::size_t param_count() const {
    return embeddings.size() + proj.size() + out_w.size() + out_b.size();
  }
};

PolicyParams init_policy(int vocab, int dim, int context_k, double scale,
                         Rng& rng);
PolicyParams zero_like(const PolicyParams& params);

// Named access to the parameter blocks, used by the update rule and the
// finite-difference checker.
struct ParamBlock {
  const char* name;
  std::vector<double>* data;
};
std::vector<ParamBlock> param_blocks(PolicyParams& params);

struct PolicyForward {
  std::vector<double> input;   // assembled feature vector x
  std::vector<double> hidden;  // tanh activations
  std::vector<double> logits;
  double logsumexp = 0.0;

  double logp(int action) const { return logits[action] - logsumexp; }
  std::vector<double> probs() const;
};

PolicyForward policy_forward(const PolicyParams& params,
                             const StateFeatures& features);

std::vector<double> policy_logits(const PolicyParams& params,
                                  const EnvSpec& spec, const EnvState& state);

// Accumulates d(sum(g_logits . logits))/d(params) into grad. The forward
// cache must come from the same (params, features) pair.
void policy_backward(const PolicyParams& params, const StateFeatures& features,
                     const PolicyForward& fwd,
                     const std::vector<double>& g_logits, PolicyParams& grad);

int sample_action(const PolicyForward& fwd, Rng& rng);
int greedy_action(const std::vector<double>& logits);

}  // namespace gear
