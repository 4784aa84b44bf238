#include "gear/signals.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "gear/errors.hpp"

namespace gear {

SignalVector reverse_kl_sequence(const std::vector<double>& student_logp,
                                 const std::vector<double>& teacher_logp) {
  if (student_logp.size() != teacher_logp.size())
    throw DataError(
        "reverse_kl_sequence: student/teacher log-prob length mismatch (" +
        std::to_string(student_logp.size()) + " vs " +
        std::to_string(teacher_logp.size()) + ")");
  SignalVector out;
  out.kind = SignalKind::RawRkl;
  out.values.resize(student_logp.size());
  for (std::size_t i = 0; i < student_logp.size(); ++i)
    out.values[i] = student_logp[i] - teacher_logp[i];
  return out;
}

SignalVector minmax_normalize(const std::vector<double>& values) {
  if (values.empty())
    throw DataError("minmax_normalize: empty input");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  SignalVector out;
  out.kind = SignalKind::NormRkl;
  out.values.resize(values.size());
  if (hi == lo) {
    std::fill(out.values.begin(), out.values.end(), 0.0);
    return out;
  }
  const double range = hi - lo;
  for (std::size_t i = 0; i < values.size(); ++i)
    out.values[i] = (values[i] - lo) / range;
  return out;
}

double policy_entropy(const std::vector<double>& logits) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double z = 0.0, weighted = 0.0;
  for (double v : logits) {
    const double e = std::exp(v - zmax);
    z += e;
    weighted += e * (v - zmax);
  }
  // H = log Z - E[z - zmax]
  return std::log(z) - weighted / z;
}

SignalVector entropy_window_average(const std::vector<double>& entropy,
                                    int window) {
  if (window < 1)
    throw DataError("entropy_window_average: window must be >= 1");
  SignalVector out;
  out.kind = SignalKind::WindowedEntropy;
  out.values.resize(entropy.size());
  for (std::size_t t = 0; t < entropy.size(); ++t) {
    const std::size_t begin =
        t + 1 >= static_cast<std::size_t>(window)
            ? t + 1 - static_cast<std::size_t>(window)
            : 0;
    double sum = 0.0;
    for (std::size_t i = begin; i <= t; ++i) sum += entropy[i];
    out.values[t] = sum / static_cast<double>(t - begin + 1);
  }
  return out;
}

}  // namespace gear
