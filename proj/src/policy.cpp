#include "gear/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace gear {

StateFeatures make_features(const EnvSpec& spec, const EnvState& state,
                            int context_k, const TeacherGains& gains) {
  StateFeatures f;
  const std::size_t n = state.context.size();
  const std::size_t take =
      std::min(n, static_cast<std::size_t>(context_k));
  f.window.assign(state.context.end() - static_cast<std::ptrdiff_t>(take),
                  state.context.end());
  f.prompt_digit = static_cast<int>(state.prompt_key % 10);
  f.progress = static_cast<double>(state.step) /
               static_cast<double>(spec.max_steps);
  f.branches_frac = static_cast<double>(state.branches_decided) /
                    static_cast<double>(spec.num_branches);
  f.awaiting_answer = state.awaiting_answer;
  if (state.answer_hint.has_value()) {
    f.hint_digit = *state.answer_hint - spec.digit_base();
    f.hint_token = *state.answer_hint;
    // Ground-truth conditioning: lean toward the continuation that completes
    // this prefix correctly, away from the moves that break it.
    if (state.awaiting_answer) {
      // Any token other than the hinted digit is a wrong answer.
      f.teacher_bias.assign(static_cast<std::size_t>(spec.vocab_size),
                            -gains.answer);
      if (*state.answer_hint >= 0 && *state.answer_hint < spec.vocab_size)
        f.teacher_bias[*state.answer_hint] = gains.answer;
    } else {
      // Wasted steps cost the budget; answering is always a valid
      // continuation; a wrong branch is the move that breaks the prefix.
      f.teacher_bias.assign(static_cast<std::size_t>(spec.vocab_size),
                            -gains.waste);
      f.teacher_bias[spec.ans_token()] = gains.ans_prefix;
      if (state.branches_decided < spec.num_branches) {
        const int correct =
            correct_branch(spec, state.prompt_key, state.branches_decided);
        for (int b = 0; b < spec.branch_arity; ++b)
          f.teacher_bias[b] = -gains.branch;
        f.teacher_bias[correct] = gains.branch;
        f.teacher_bias[spec.call_token()] = gains.call;
      }
    }
  }
  return f;
}

PolicyParams init_policy(int vocab, int dim, int context_k, double scale,
                         Rng& rng) {
  PolicyParams p;
  p.vocab = vocab;
  p.dim = dim;
  p.context_k = context_k;
  p.embeddings.resize(static_cast<std::size_t>(vocab) * dim);
  p.proj.resize(static_cast<std::size_t>(dim) * p.input_dim());
  p.out_w.resize(static_cast<std::size_t>(dim) * vocab);
  p.out_b.resize(static_cast<std::size_t>(vocab));
  for (auto* block : {&p.embeddings, &p.proj, &p.out_w, &p.out_b})
    for (double& v : *block) v = (2.0 * rng.next_double() - 1.0) * scale;
  // Hint-feature columns start at zero: the student never sees the hint, so
  // these weights receive no gradient, and a random draw here would inject
  // permanent noise into the teacher-student divergence signal.
  const int in_dim = p.input_dim();
  for (int i = 0; i < dim; ++i)
    for (int j = dim + 10; j < dim + 21; ++j)
      p.proj[static_cast<std::size_t>(i) * in_dim + j] = 0.0;
  return p;
}

PolicyParams zero_like(const PolicyParams& params) {
  PolicyParams g = params;
  for (auto* block : {&g.embeddings, &g.proj, &g.out_w, &g.out_b})
    std::fill(block->begin(), block->end(), 0.0);
  return g;
}

std::vector<ParamBlock> param_blocks(PolicyParams& params) {
  return {{"embeddings", &params.embeddings},
          {"proj", &params.proj},
          {"out_w", &params.out_w},
          {"out_b", &params.out_b}};
}

namespace {

std::vector<double> assemble_input(const PolicyParams& params,
                                   const StateFeatures& f) {
  std::vector<double> x(static_cast<std::size_t>(params.input_dim()), 0.0);
  if (!f.window.empty()) {
    const double inv = 1.0 / static_cast<double>(f.window.size());
    for (int tok : f.window) {
      const double* row = &params.embeddings[static_cast<std::size_t>(tok) *
                                             params.dim];
      for (int j = 0; j < params.dim; ++j) x[j] += row[j] * inv;
    }
  }
  const int base = params.dim;
  if (f.prompt_digit >= 0 && f.prompt_digit < 10)
    x[base + f.prompt_digit] = 1.0;
  if (f.hint_digit >= 0 && f.hint_digit < 10) {
    x[base + 10 + f.hint_digit] = 1.0;
    x[base + 20] = 1.0;  // hint present
  }
  x[base + 21] = f.progress;
  x[base + 22] = f.branches_frac;
  x[base + 23] = f.awaiting_answer ? 1.0 : 0.0;
  return x;
}

}  // namespace

std::vector<double> PolicyForward::probs() const {
  std::vector<double> p(logits.size());
  for (std::size_t v = 0; v < logits.size(); ++v)
    p[v] = std::exp(logits[v] - logsumexp);
  return p;
}

PolicyForward policy_forward(const PolicyParams& params,
                             const StateFeatures& features) {
  PolicyForward fwd;
  fwd.input = assemble_input(params, features);
  const int in_dim = params.input_dim();
  fwd.hidden.resize(static_cast<std::size_t>(params.dim));
  for (int i = 0; i < params.dim; ++i) {
    const double* row = &params.proj[static_cast<std::size_t>(i) * in_dim];
    double acc = 0.0;
    for (int j = 0; j < in_dim; ++j) acc += row[j] * fwd.input[j];
    fwd.hidden[i] = std::tanh(acc);
  }
  fwd.logits.assign(params.out_b.begin(), params.out_b.end());
  for (int i = 0; i < params.dim; ++i) {
    const double h = fwd.hidden[i];
    const double* row = &params.out_w[static_cast<std::size_t>(i) * params.vocab];
    for (int v = 0; v < params.vocab; ++v) fwd.logits[v] += h * row[v];
  }
  if (!features.teacher_bias.empty())
    for (int v = 0; v < params.vocab; ++v)
      fwd.logits[v] += features.teacher_bias[v];
  const double zmax =
      *std::max_element(fwd.logits.begin(), fwd.logits.end());
  double z = 0.0;
  for (double v : fwd.logits) z += std::exp(v - zmax);
  fwd.logsumexp = zmax + std::log(z);
  return fwd;
}

std::vector<double> policy_logits(const PolicyParams& params,
                                  const EnvSpec& spec, const EnvState& state) {
  return policy_forward(params, make_features(spec, state, params.context_k))
      .logits;
}

void policy_backward(const PolicyParams& params, const StateFeatures& features,
                     const PolicyForward& fwd,
                     const std::vector<double>& g_logits, PolicyParams& grad) {
  const int in_dim = params.input_dim();
  std::vector<double> g_hidden(static_cast<std::size_t>(params.dim), 0.0);
  for (int v = 0; v < params.vocab; ++v) {
    const double g = g_logits[v];
    if (g == 0.0) continue;
    grad.out_b[v] += g;
    for (int i = 0; i < params.dim; ++i) {
      grad.out_w[static_cast<std::size_t>(i) * params.vocab + v] +=
          fwd.hidden[i] * g;
      g_hidden[i] += params.out_w[static_cast<std::size_t>(i) * params.vocab + v] * g;
    }
  }
  std::vector<double> g_pooled(static_cast<std::size_t>(params.dim), 0.0);
  for (int i = 0; i < params.dim; ++i) {
    const double g_pre = g_hidden[i] * (1.0 - fwd.hidden[i] * fwd.hidden[i]);
    if (g_pre == 0.0) continue;
    double* grow = &grad.proj[static_cast<std::size_t>(i) * in_dim];
    const double* prow = &params.proj[static_cast<std::size_t>(i) * in_dim];
    for (int j = 0; j < in_dim; ++j) grow[j] += g_pre * fwd.input[j];
    for (int j = 0; j < params.dim; ++j) g_pooled[j] += prow[j] * g_pre;
  }
  if (!features.window.empty()) {
    const double inv = 1.0 / static_cast<double>(features.window.size());
    for (int tok : features.window) {
      double* erow =
          &grad.embeddings[static_cast<std::size_t>(tok) * params.dim];
      for (int j = 0; j < params.dim; ++j) erow[j] += g_pooled[j] * inv;
    }
  }
}

int sample_action(const PolicyForward& fwd, Rng& rng) {
  const std::vector<double> p = fwd.probs();
  const double u = rng.next_double();
  double cum = 0.0;
  for (std::size_t v = 0; v < p.size(); ++v) {
    cum += p[v];
    if (u < cum) return static_cast<int>(v);
  }
  return static_cast<int>(p.size()) - 1;
}

int greedy_action(const std::vector<double>& logits) {
  return static_cast<int>(
      std::max_element(logits.begin(), logits.end()) - logits.begin());
}

}  // namespace gear
