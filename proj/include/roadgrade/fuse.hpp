#pragma once

#include <span>
#include <vector>

#include "roadgrade/pitch.hpp"
#include "roadgrade/types.hpp"

namespace roadgrade {

/// A per-window line fitted to (gyro - anchor) differences.
struct DriftFit {
  double w0 = 0.0;  // window extent, meters
  double w1 = 0.0;
  double slope_deg_per_m = 0.0;
  double intercept_deg = 0.0;
  int anchor_count = 0;
};

/// Drift-correction window size: max(segment_length / 3, largest gap
/// between consecutive anchors). Throws on an empty gap list.
double drift_window(double segment_length_m, std::span<const double> anchor_gaps_m);

/// Gap list between consecutive anchors, ordered by bin center.
std::vector<double> anchor_gaps(std::span<const AnchorSnapshot> anchors);

/// Ordinary least squares of (gyro(bin_center) - anchor grade) against
/// bin_center over anchors inside [w0, w1). Requires >= 2 anchors.
DriftFit fit_drift(const PitchSeries& gyro, std::span<const AnchorSnapshot> anchors, double w0,
                   double w1);

/**
 * Tiles [0, segment_length) with drift windows and fits each one. Windows
 * with fewer than two anchors merge into the next window (the final short
 * or sparse window merges into its predecessor).
 */
std::vector<DriftFit> fit_drift_windows(const PitchSeries& gyro,
                                        std::span<const AnchorSnapshot> anchors,
                                        double segment_length_m);

struct CorrectOptions {
  double resolution_m = 0.2;
  double blend_m = 10.0;  // linear cross-fade at window joints
};

/// Subtracts each window's drift line from the gyro series, cross-fading at
/// joints, and resamples onto the output grid.
GradeProfile correct_profile(const PitchSeries& gyro, std::span<const DriftFit> fits,
                             const CorrectOptions& opts = {});

/// Shifts the series so it passes through the first anchor: absolute level
/// comes from anchors, never from ground truth.
PitchSeries level_to_first_anchor(PitchSeries gyro, std::span<const AnchorSnapshot> anchors);

}  // namespace roadgrade
