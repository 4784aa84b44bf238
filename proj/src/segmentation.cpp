#include "gear/segmentation.hpp"

#include <cstddef>
#include <string>

#include "gear/errors.hpp"
#include "gear/signals.hpp"

namespace gear {

namespace {

void require_equal_lengths(const std::vector<double>& a,
                           const std::vector<double>& b, const char* what) {
  if (a.size() != b.size())
    throw DataError(std::string(what) + ": norm_rkl/entropy length mismatch (" +
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                    ")");
}

SegmentationResult finish(std::vector<Segment> segments,
                          const std::vector<double>& norm_rkl) {
  SegmentationResult out;
  out.w_kl = piecewise_weights(segments, norm_rkl);
  out.segments = std::move(segments);
  return out;
}

// Shared scan for segment_gear and segment_entropy_window; `term` is the
// signal used for the onset reference and the termination comparison.
SegmentationResult gear_scan(const std::vector<double>& norm_rkl,
                             const std::vector<double>& term,
                             const GearConfig& cfg) {
  const int n = static_cast<int>(norm_rkl.size());
  std::vector<Segment> segments;
  int t = 0;
  while (t < n) {
    if (norm_rkl[t] > cfg.lambda_kl) {
      const int start = t;
      const double threshold = cfg.lambda_h * term[start];
      int end = n - 1;  // unterminated segments run to the last token
      for (int u = start + 1; u < n; ++u) {
        if (term[u] > threshold) {
          end = u;
          break;
        }
      }
      segments.push_back({start, end, norm_rkl[start]});
      t = end + 1;
    } else {
      ++t;
    }
  }
  return finish(std::move(segments), norm_rkl);
}

}  // namespace

SegmentationResult segment_gear(const std::vector<double>& norm_rkl,
                                const std::vector<double>& entropy,
                                const GearConfig& cfg) {
  require_equal_lengths(norm_rkl, entropy, "segment_gear");
  return gear_scan(norm_rkl, entropy, cfg);
}

SegmentationResult segment_kl_only(const std::vector<double>& norm_rkl,
                                   const GearConfig& cfg) {
  const int n = static_cast<int>(norm_rkl.size());
  std::vector<Segment> segments;
  for (int t = 0; t < n; ++t) {
    if (norm_rkl[t] <= cfg.lambda_kl) continue;
    if (!segments.empty()) segments.back().end = t - 1;
    segments.push_back({t, n - 1, norm_rkl[t]});
  }
  return finish(std::move(segments), norm_rkl);
}

SegmentationResult segment_entropy_only(const std::vector<double>& norm_rkl,
                                        const std::vector<double>& entropy,
                                        const GearConfig& cfg) {
  require_equal_lengths(norm_rkl, entropy, "segment_entropy_only");
  const int n = static_cast<int>(norm_rkl.size());
  std::vector<Segment> segments;
  int t = 0;
  while (t < n) {
    const int start = t;
    const double threshold = cfg.lambda_h * entropy[start];
    int end = n - 1;
    for (int u = start + 1; u < n; ++u) {
      if (entropy[u] > threshold) {
        end = u;  // the terminating token belongs to the segment it closes
        break;
      }
    }
    segments.push_back({start, end, norm_rkl[start]});
    t = end + 1;
  }
  return finish(std::move(segments), norm_rkl);
}

SegmentationResult segment_by_markers(const std::vector<int>& marker_positions,
                                      int length,
                                      const std::vector<double>& norm_rkl) {
  if (static_cast<int>(norm_rkl.size()) != length)
    throw DataError("segment_by_markers: norm_rkl length does not match length");
  std::vector<Segment> segments;
  int prev = -1;
  for (std::size_t i = 0; i < marker_positions.size(); ++i) {
    const int m = marker_positions[i];
    if (m < 0 || m >= length)
      throw DataError("segment_by_markers: marker position " +
                      std::to_string(m) + " out of range [0," +
                      std::to_string(length) + ")");
    if (m < prev)
      throw DataError("segment_by_markers: marker positions must be sorted");
    if (m == prev) continue;  // duplicate boundary
    if (m > 0)
      segments.push_back({prev < 0 ? 0 : prev, m - 1, 0.0});
    prev = m;
  }
  if (length > 0) segments.push_back({prev < 0 ? 0 : prev, length - 1, 0.0});
  for (auto& s : segments) s.onset_weight = norm_rkl[s.start];
  return finish(std::move(segments), norm_rkl);
}

SegmentationResult segment_entropy_window(const std::vector<double>& norm_rkl,
                                          const std::vector<double>& entropy,
                                          const GearConfig& cfg) {
  require_equal_lengths(norm_rkl, entropy, "segment_entropy_window");
  const SignalVector windowed =
      entropy_window_average(entropy, cfg.window_size);
  return gear_scan(norm_rkl, windowed.values, cfg);
}

std::vector<double> piecewise_weights(const std::vector<Segment>& segments,
                                      const std::vector<double>& norm_rkl) {
  validate_segments(segments, static_cast<int>(norm_rkl.size()));
  std::vector<double> w(norm_rkl);
  for (const auto& s : segments) {
    const double onset = norm_rkl[s.start];
    for (int t = s.start; t <= s.end; ++t) w[t] = onset;
  }
  return w;
}

}  // namespace gear
