#include "roadgrade/anchors.hpp"

#include <cmath>
#include <map>

namespace roadgrade {

std::vector<uint8_t> stable_mask(std::span<const double> a_lon, double dt,
                                 const StabilityThresholds& th) {
  if (!(th.acc_thresh > 0.0) || !(th.jerk_thresh > 0.0)) {
    throw std::invalid_argument("stable_mask: thresholds must be positive");
  }
  const std::size_t n = a_lon.size();
  std::vector<double> jerk(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) jerk[i] = (a_lon[i + 1] - a_lon[i - 1]) / (2.0 * dt);
  if (n >= 2) {
    jerk.front() = (a_lon[1] - a_lon[0]) / dt;
    jerk.back() = (a_lon[n - 1] - a_lon[n - 2]) / dt;
  }
  std::vector<uint8_t> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = std::abs(a_lon[i]) <= th.acc_thresh && std::abs(jerk[i]) <= th.jerk_thresh;
  }
  return mask;
}

std::vector<AnchorSnapshot> bin_anchors(const PitchSeries& theta_acc,
                                        std::span<const uint8_t> mask, double bin_width_m) {
  if (!(bin_width_m > 0.0)) throw std::invalid_argument("bin_anchors: bin width must be positive");
  if (mask.size() != theta_acc.size()) {
    throw std::invalid_argument("bin_anchors: mask not tick-aligned");
  }
  std::map<long, std::pair<double, int>> bins;  // bin index -> (sum, count)
  for (std::size_t i = 0; i < theta_acc.size(); ++i) {
    if (!mask[i] || !theta_acc.valid[i]) continue;
    const double s = theta_acc.s_m[i];
    if (s < 0.0) continue;
    const long k = static_cast<long>(std::floor(s / bin_width_m));
    auto& [sum, count] = bins[k];
    sum += theta_acc.theta_deg[i];
    ++count;
  }
  std::vector<AnchorSnapshot> out;
  out.reserve(bins.size());
  for (const auto& [k, agg] : bins) {
    AnchorSnapshot snap;
    snap.segment_id = theta_acc.segment_id;
    snap.trip_id = theta_acc.trip_id;
    snap.bin_center_m = (static_cast<double>(k) + 0.5) * bin_width_m;
    snap.grade_deg = agg.first / agg.second;
    snap.sample_count = agg.second;
    out.push_back(std::move(snap));
  }
  return out;
}

}  // namespace roadgrade
