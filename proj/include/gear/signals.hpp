#pragma once

#include <vector>

namespace gear {

enum class SignalKind { RawRkl, NormRkl, Entropy, WindowedEntropy };

// A per-policy-token scalar signal. norm_rkl values lie in [0,1];
// entropy values are >= 0.
struct SignalVector {
  std::vector<double> values;
  SignalKind kind = SignalKind::RawRkl;
};

// rkl[t] = student_logp[t] - teacher_logp[t]. Negative values are allowed:
// the normalization below maps the per-trajectory range onto [0,1].
SignalVector reverse_kl_sequence(const std::vector<double>& student_logp,
                                 const std::vector<double>& teacher_logp);

// (v - min) / (max - min); constant input maps to all zeros so that a
// flat signal never flags any token as divergent.
SignalVector minmax_normalize(const std::vector<double>& values);

// Entropy in nats of softmax(logits), computed with a max-logit shift.
double policy_entropy(const std::vector<double>& logits);

// Trailing mean over min(window, t+1) entries ending at t.
SignalVector entropy_window_average(const std::vector<double>& entropy,
                                    int window);

}  // namespace gear
