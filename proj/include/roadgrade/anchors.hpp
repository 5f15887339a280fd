#pragma once

#include <span>
#include <vector>

#include "roadgrade/pitch.hpp"
#include "roadgrade/types.hpp"

namespace roadgrade {

struct StabilityThresholds {
  double acc_thresh = 0.7;    // m/s²
  double jerk_thresh = 0.15;  // m/s³
};

/**
 * Marks ticks with stable vehicle dynamics: |a| within acc_thresh and
 * |da/dt| (central difference on the filtered series) within jerk_thresh.
 */
std::vector<uint8_t> stable_mask(std::span<const double> a_lon, double dt,
                                 const StabilityThresholds& th);

/**
 * Averages stable, valid accelerometer grade estimates into distance bins
 * anchored at the segment start (bin k covers [k*w, (k+1)*w)). Empty bins
 * are omitted.
 */
std::vector<AnchorSnapshot> bin_anchors(const PitchSeries& theta_acc,
                                        std::span<const uint8_t> mask, double bin_width_m);

}  // namespace roadgrade
