#include "roadgrade/elevation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

namespace roadgrade {

void ElevationProfile::validate() const {
  if (distance_m.size() != elevation_m.size()) {
    throw ValidationError("elevation profile: distance/elevation length mismatch");
  }
  for (std::size_t i = 1; i < distance_m.size(); ++i) {
    if (!(distance_m[i] > distance_m[i - 1])) {
      throw ValidationError("elevation profile: distances not strictly increasing");
    }
  }
}

GradeProfile ElevationGrade::to_profile(double resolution_m, const std::string& segment_id) const {
  GradeProfile p;
  p.segment_id = segment_id;
  p.resolution_m = resolution_m;
  if (midpoint_m.empty()) return p;
  for (double d = midpoint_m.front(); d <= midpoint_m.back() + 1e-9; d += resolution_m) {
    p.distance_m.push_back(d);
    p.grade_deg.push_back(at(d));
  }
  return p;
}

ElevationGrade grade_from_elevation(const ElevationProfile& profile) {
  profile.validate();
  if (profile.size() < 2) {
    throw ValidationError("grade_from_elevation: need at least 2 elevation samples");
  }
  ElevationGrade g;
  g.midpoint_m.reserve(profile.size() - 1);
  g.grade_deg.reserve(profile.size() - 1);
  g.clamped.reserve(profile.size() - 1);
  for (std::size_t i = 1; i < profile.size(); ++i) {
    const double run = profile.distance_m[i] - profile.distance_m[i - 1];
    if (!(run > 0.0)) throw ValidationError("grade_from_elevation: zero sample spacing");
    const double rise = profile.elevation_m[i] - profile.elevation_m[i - 1];
    const double ratio = rise / run;
    const bool clamp = std::abs(ratio) > 1.0;
    g.midpoint_m.push_back(0.5 * (profile.distance_m[i] + profile.distance_m[i - 1]));
    g.grade_deg.push_back(rad2deg(std::asin(std::clamp(ratio, -1.0, 1.0))));
    g.clamped.push_back(clamp);
  }
  return g;
}

double shape_similarity(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("shape_similarity: length mismatch");
  if (p.size() < 2) throw std::invalid_argument("shape_similarity: need at least 2 samples");
  const std::size_t n = p.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += p[i] - q[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = p[i] - q[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  return std::exp2(-var);
}

std::vector<SimilarityRegion> extract_regions(const ElevationGrade& elev,
                                              const std::vector<PitchSeries>& gyro_route_series,
                                              const RegionOptions& opts) {
  std::vector<SimilarityRegion> out;
  if (elev.size() < 2 || gyro_route_series.empty()) return out;

  const double start = elev.midpoint_m.front();
  const double end = elev.midpoint_m.back();
  if (end - start < opts.d_sim_m) return out;

  const double hop = opts.d_sim_m / 2.0;  // 50% overlap

  struct Window {
    double x0, x1, sim;
    bool pass;
  };
  std::vector<Window> windows;
  for (double x0 = start; x0 + opts.d_sim_m <= end + 1e-9; x0 += hop) {
    const double x1 = x0 + opts.d_sim_m;
    // Elevation grade samples inside the window.
    std::vector<double> pe, xg;
    for (std::size_t i = 0; i < elev.size(); ++i) {
      if (elev.midpoint_m[i] >= x0 && elev.midpoint_m[i] <= x1) {
        pe.push_back(elev.grade_deg[i]);
        xg.push_back(elev.midpoint_m[i]);
      }
    }
    if (pe.size() < 2) continue;

    double sim_sum = 0.0;
    std::size_t sim_n = 0;
    for (const auto& gyro : gyro_route_series) {
      if (gyro.size() < 2) continue;
      if (gyro.s_m.front() > x0 || gyro.s_m.back() < x1) continue;  // trip must cover window
      std::vector<double> q(xg.size());
      for (std::size_t i = 0; i < xg.size(); ++i) q[i] = gyro.at(xg[i]);
      sim_sum += shape_similarity(pe, q);
      ++sim_n;
    }
    if (sim_n == 0) continue;
    const double sim = sim_sum / static_cast<double>(sim_n);
    windows.push_back({x0, x1, sim, sim >= opts.s_thresh});
  }

  // Merge maximal runs of qualifying windows.
  std::size_t i = 0;
  while (i < windows.size()) {
    if (!windows[i].pass) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double sim_sum = 0.0;
    while (j < windows.size() && windows[j].pass) {
      sim_sum += windows[j].sim;
      ++j;
    }
    if (j - i >= static_cast<std::size_t>(std::max(1, opts.min_windows))) {
      SimilarityRegion region;
      region.x_strt = windows[i].x0;
      region.x_end = windows[j - 1].x1;
      region.similarity = sim_sum / static_cast<double>(j - i);
      out.push_back(region);
    }
    i = j;
  }
  return out;
}

std::optional<double> region_offset(std::span<const RouteAnchor> anchors,
                                    const ElevationGrade& elev, const SimilarityRegion& region,
                                    int min_snapshots) {
  double sum = 0.0;
  int n = 0;
  for (const auto& a : anchors) {
    if (a.route_m < region.x_strt || a.route_m > region.x_end) continue;
    sum += a.grade_deg - elev.at(a.route_m);
    ++n;
  }
  if (n < min_snapshots) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<SimilarityRegion> fill_region_offsets(std::span<const RouteAnchor> anchors,
                                                  std::span<const SimilarityRegion> regions,
                                                  const ElevationGrade& elev, int min_snapshots) {
  std::vector<SimilarityRegion> filled(regions.begin(), regions.end());
  for (auto& r : filled) {
    r.offset_deg = region_offset(anchors, elev, r, min_snapshots);
  }
  return filled;
}

namespace {

// Cache key at ~1e-6 degree resolution (about 10 cm).
std::string coord_key(const LatLon& p) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f", p.lat, p.lon);
  return buf;
}

}  // namespace

CachedElevationFetcher::CachedElevationFetcher(ElevationFetcher& upstream, std::string cache_path)
    : upstream_(upstream), cache_path_(std::move(cache_path)) {}

std::vector<double> CachedElevationFetcher::fetch(const std::vector<LatLon>& points) {
  nlohmann::json cache = nlohmann::json::object();
  {
    std::ifstream in(cache_path_);
    if (in) {
      try {
        in >> cache;
      } catch (const nlohmann::json::exception&) {
        cache = nlohmann::json::object();
      }
    }
  }

  std::vector<LatLon> misses;
  for (const auto& p : points) {
    if (!cache.contains(coord_key(p))) misses.push_back(p);
  }
  if (!misses.empty()) {
    const auto fetched = upstream_.fetch(misses);
    if (fetched.size() != misses.size()) {
      throw std::runtime_error("elevation fetcher returned " + std::to_string(fetched.size()) +
                               " values for " + std::to_string(misses.size()) + " points");
    }
    for (std::size_t i = 0; i < misses.size(); ++i) cache[coord_key(misses[i])] = fetched[i];
    std::ofstream out(cache_path_);
    if (!out) throw std::runtime_error("cannot write elevation cache '" + cache_path_ + "'");
    out << cache.dump() << "\n";
  }

  std::vector<double> result;
  result.reserve(points.size());
  for (const auto& p : points) result.push_back(cache.at(coord_key(p)).get<double>());
  return result;
}

OffsetResult apply_offsets(std::span<const RouteAnchor> anchors,
                           std::span<const SimilarityRegion> regions) {
  OffsetResult res;
  res.corrected_grade_deg.reserve(anchors.size());

  std::vector<const SimilarityRegion*> usable;
  for (const auto& r : regions) {
    if (r.offset_deg.has_value()) usable.push_back(&r);
  }
  if (usable.empty()) {
    for (const auto& a : anchors) res.corrected_grade_deg.push_back(a.grade_deg);
    res.corrected = false;
    return res;
  }
  for (const auto& a : anchors) {
    const SimilarityRegion* best = nullptr;
    double best_dist = 0.0;
    for (const auto* r : usable) {
      const double center = 0.5 * (r->x_strt + r->x_end);
      const double d = std::abs(a.route_m - center);
      if (!best || d < best_dist - 1e-12) {  // ties keep the earlier region
        best = r;
        best_dist = d;
      }
    }
    res.corrected_grade_deg.push_back(a.grade_deg - *best->offset_deg);
  }
  res.corrected = true;
  return res;
}

}  // namespace roadgrade
