#pragma once

#include <vector>

#include "gear/trajectory.hpp"

namespace gear {

// Partition of one trajectory's policy-token subsequence. Inside a segment
// every token carries the onset token's normalized reverse-KL; outside,
// tokens keep their own values.
struct SegmentationResult {
  std::vector<Segment> segments;
  std::vector<double> w_kl;
};

// Left-to-right scan: a position with norm_rkl > lambda_kl opens a segment;
// the first later position whose entropy exceeds lambda_h times the onset
// entropy closes it (inclusive); an unterminated segment runs to the last
// token; the scan resumes after the segment end. Both comparisons are strict.
SegmentationResult segment_gear(const std::vector<double>& norm_rkl,
                                const std::vector<double>& entropy,
                                const GearConfig& cfg);

// Every trigger position starts a segment that extends to just before the
// next trigger (the last one to the end). Positions before the first trigger
// stay token-level.
SegmentationResult segment_kl_only(const std::vector<double>& norm_rkl,
                                   const GearConfig& cfg);

// Entropy-threshold partition covering the whole sequence: the first token
// opens a segment with threshold lambda_h * entropy[onset]; the first later
// position exceeding it closes the segment (inclusive) and the next token
// opens a fresh one.
SegmentationResult segment_entropy_only(const std::vector<double>& norm_rkl,
                                        const std::vector<double>& entropy,
                                        const GearConfig& cfg);

// Boundary partition: a segment starts at each marker; tokens before the
// first marker form the leading segment. Covers the whole sequence.
SegmentationResult segment_by_markers(const std::vector<int>& marker_positions,
                                      int length,
                                      const std::vector<double>& norm_rkl);

// segment_gear with entropy_window_average(entropy, cfg.window_size)
// substituted for raw entropy in both the onset reference and the
// termination comparison.
SegmentationResult segment_entropy_window(const std::vector<double>& norm_rkl,
                                          const std::vector<double>& entropy,
                                          const GearConfig& cfg);

// w[t] = norm_rkl[segment onset] inside a segment, norm_rkl[t] elsewhere.
std::vector<double> piecewise_weights(const std::vector<Segment>& segments,
                                      const std::vector<double>& norm_rkl);

}  // namespace gear
