#include "roadgrade/fuse.hpp"

#include <algorithm>
#include <cmath>

namespace roadgrade {

double drift_window(double segment_length_m, std::span<const double> anchor_gaps_m) {
  if (anchor_gaps_m.empty()) throw ValidationError("drift_window: insufficient anchors");
  if (!(segment_length_m > 0.0)) throw std::invalid_argument("drift_window: bad segment length");
  const double max_gap = *std::max_element(anchor_gaps_m.begin(), anchor_gaps_m.end());
  return std::max(segment_length_m / 3.0, max_gap);
}

std::vector<double> anchor_gaps(std::span<const AnchorSnapshot> anchors) {
  std::vector<double> gaps;
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    gaps.push_back(anchors[i].bin_center_m - anchors[i - 1].bin_center_m);
  }
  return gaps;
}

DriftFit fit_drift(const PitchSeries& gyro, std::span<const AnchorSnapshot> anchors, double w0,
                   double w1) {
  DriftFit fit;
  fit.w0 = w0;
  fit.w1 = w1;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (const auto& a : anchors) {
    if (a.bin_center_m < w0 || a.bin_center_m >= w1) continue;
    const double x = a.bin_center_m;
    const double y = gyro.at(x) - a.grade_deg;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw ValidationError("fit_drift: fewer than 2 anchors in window");
  const double nd = static_cast<double>(n);
  const double denom = nd * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) {
    // All anchors in one bin; treat the mean difference as a pure offset.
    fit.slope_deg_per_m = 0.0;
    fit.intercept_deg = sy / nd;
  } else {
    fit.slope_deg_per_m = (nd * sxy - sx * sy) / denom;
    fit.intercept_deg = (sy - fit.slope_deg_per_m * sx) / nd;
  }
  fit.anchor_count = n;
  return fit;
}

std::vector<DriftFit> fit_drift_windows(const PitchSeries& gyro,
                                        std::span<const AnchorSnapshot> anchors,
                                        double segment_length_m) {
  if (anchors.size() < 2) throw ValidationError("fit_drift_windows: fewer than 2 anchors");
  const auto gaps = anchor_gaps(anchors);
  const double w = drift_window(segment_length_m, gaps);

  // Tile from 0; a trailing remnant shorter than the window merges left.
  std::vector<std::pair<double, double>> windows;
  for (double x0 = 0.0; x0 < segment_length_m - 1e-9; x0 += w) {
    windows.emplace_back(x0, std::min(x0 + w, segment_length_m));
  }
  if (windows.size() > 1 && windows.back().second - windows.back().first < w - 1e-9) {
    windows[windows.size() - 2].second = windows.back().second;
    windows.pop_back();
  }

  auto count_in = [&](const std::pair<double, double>& win) {
    int n = 0;
    for (const auto& a : anchors) {
      if (a.bin_center_m >= win.first && a.bin_center_m < win.second) ++n;
    }
    return n;
  };

  // Sparse windows merge rightward; a sparse final window merges left.
  std::vector<std::pair<double, double>> merged;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    auto win = windows[i];
    while (count_in(win) < 2 && i + 1 < windows.size()) {
      ++i;
      win.second = windows[i].second;
    }
    merged.push_back(win);
  }
  while (merged.size() > 1 && count_in(merged.back()) < 2) {
    merged[merged.size() - 2].second = merged.back().second;
    merged.pop_back();
  }

  std::vector<DriftFit> fits;
  fits.reserve(merged.size());
  for (const auto& win : merged) fits.push_back(fit_drift(gyro, anchors, win.first, win.second));
  return fits;
}

namespace {

double drift_at(const DriftFit& f, double s) { return f.slope_deg_per_m * s + f.intercept_deg; }

double corrected_at(std::span<const DriftFit> fits, const PitchSeries& gyro, double s,
                    double blend_m) {
  // Active window for s.
  std::size_t w = 0;
  while (w + 1 < fits.size() && s >= fits[w].w1) ++w;
  double corr = gyro.at(s) - drift_at(fits[w], s);
  // Cross-fade across the joint ahead of / behind s.
  if (blend_m > 0.0) {
    const double half = blend_m / 2.0;
    if (w + 1 < fits.size() && s > fits[w].w1 - half) {
      const double t = (s - (fits[w].w1 - half)) / blend_m;
      corr = (1.0 - t) * corr + t * (gyro.at(s) - drift_at(fits[w + 1], s));
    } else if (w > 0 && s < fits[w].w0 + half) {
      const double t = ((fits[w].w0 + half) - s) / blend_m;
      corr = (1.0 - t) * corr + t * (gyro.at(s) - drift_at(fits[w - 1], s));
    }
  }
  return corr;
}

}  // namespace

GradeProfile correct_profile(const PitchSeries& gyro, std::span<const DriftFit> fits,
                             const CorrectOptions& opts) {
  if (fits.empty()) throw std::invalid_argument("correct_profile: no drift fits");
  if (gyro.size() < 2) throw std::invalid_argument("correct_profile: gyro series too short");

  GradeProfile out;
  out.segment_id = gyro.segment_id;
  out.resolution_m = opts.resolution_m;
  const double s0 = gyro.s_m.front();
  const double s1 = gyro.s_m.back();
  for (double s = std::ceil(s0 / opts.resolution_m) * opts.resolution_m; s <= s1 + 1e-9;
       s += opts.resolution_m) {
    out.distance_m.push_back(s);
    out.grade_deg.push_back(corrected_at(fits, gyro, s, opts.blend_m));
  }
  return out;
}

PitchSeries level_to_first_anchor(PitchSeries gyro, std::span<const AnchorSnapshot> anchors) {
  if (anchors.empty() || gyro.size() == 0) return gyro;
  const auto& first = anchors.front();
  const double delta = first.grade_deg - gyro.at(first.bin_center_m);
  for (auto& th : gyro.theta_deg) th += delta;
  return gyro;
}

}  // namespace roadgrade
