#pragma once

#include <optional>
#include <span>
#include <vector>

#include "roadgrade/pitch.hpp"
#include "roadgrade/types.hpp"

namespace roadgrade {

/// Sparse elevation samples along the route (~30 m spacing).
struct ElevationProfile {
  std::vector<double> distance_m;   // route distance, strictly increasing
  std::vector<double> elevation_m;

  std::size_t size() const { return distance_m.size(); }
  void validate() const;
};

/**
 * Grade between consecutive elevation samples: arcsin of rise over run,
 * assigned at interval midpoints. Ratios outside [-1, 1] (occlusion
 * artifacts) are clamped to ±90° and flagged.
 */
struct ElevationGrade {
  std::vector<double> midpoint_m;
  std::vector<double> grade_deg;
  std::vector<uint8_t> clamped;

  std::size_t size() const { return midpoint_m.size(); }
  double at(double route_m) const { return interp_clamped(midpoint_m, grade_deg, route_m); }

  /// Linear interpolation onto a uniform grid over the covered extent.
  GradeProfile to_profile(double resolution_m, const std::string& segment_id = "route") const;
};

ElevationGrade grade_from_elevation(const ElevationProfile& profile);

/// Shape similarity s = 1 / 2^var(P-Q); offset-blind, in [0, 1].
double shape_similarity(std::span<const double> p, std::span<const double> q);

struct SimilarityRegion {
  double x_strt = 0.0;  // route distance
  double x_end = 0.0;
  double similarity = 0.0;
  std::optional<double> offset_deg;  // filled per trip before application
};

struct RegionOptions {
  double d_sim_m = 100.0;   // similarity window length
  double s_thresh = 0.7;
  int min_snapshots = 3;    // per region, for a usable offset
  // A run must span at least this many qualifying windows; a lone window
  // holds too few coarse elevation samples for its variance to mean much.
  int min_windows = 2;
};

/**
 * High-similarity regions between the elevation-derived grade and the
 * gyroscope shape. Similarity is evaluated per trip in overlapping windows
 * on the elevation midpoint grid, averaged across trips, thresholded, and
 * adjacent qualifying windows are merged.
 */
std::vector<SimilarityRegion> extract_regions(const ElevationGrade& elev,
                                              const std::vector<PitchSeries>& gyro_route_series,
                                              const RegionOptions& opts = {});

/// Anchor snapshot mapped to route distance, for offset work.
struct RouteAnchor {
  double route_m = 0.0;
  double grade_deg = 0.0;
  std::size_t index = 0;  // position in the trip's snapshot list
};

/// Mean elementwise difference between in-region anchors and the elevation
/// grade at their positions. Empty when fewer than min_snapshots fall inside.
std::optional<double> region_offset(std::span<const RouteAnchor> anchors,
                                    const ElevationGrade& elev, const SimilarityRegion& region,
                                    int min_snapshots = 3);

struct OffsetResult {
  std::vector<double> corrected_grade_deg;  // parallel to the input anchors
  bool corrected = false;                   // false: no usable region, passthrough
};

/**
 * Subtracts from every anchor the offset of the nearest usable region
 * (distance from anchor to region center; ties go to the earlier region).
 * Regions without an offset are ignored; with none usable the grades pass
 * through unchanged and corrected=false.
 */
OffsetResult apply_offsets(std::span<const RouteAnchor> anchors,
                           std::span<const SimilarityRegion> regions);

/// Fills per-trip offsets (mean anchor-minus-elevation difference) into a
/// copy of the shared region list.
std::vector<SimilarityRegion> fill_region_offsets(std::span<const RouteAnchor> anchors,
                                                  std::span<const SimilarityRegion> regions,
                                                  const ElevationGrade& elev,
                                                  int min_snapshots = 3);

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// Client contract for an elevation service. The pipeline never calls this
/// itself (elevation arrives as files); it exists for tooling that wants to
/// populate those files.
class ElevationFetcher {
public:
  virtual ~ElevationFetcher() = default;
  virtual std::vector<double> fetch(const std::vector<LatLon>& points) = 0;
};

/**
 * Disk-caching wrapper around any fetcher. Every coordinate ever resolved is
 * stored in a JSON cache file; only misses reach the wrapped client, so
 * repeated runs need no network at all.
 */
class CachedElevationFetcher : public ElevationFetcher {
public:
  CachedElevationFetcher(ElevationFetcher& upstream, std::string cache_path);
  std::vector<double> fetch(const std::vector<LatLon>& points) override;

private:
  ElevationFetcher& upstream_;
  std::string cache_path_;
};

}  // namespace roadgrade
