#pragma once

#include <optional>
#include <string>
#include <vector>

#include "roadgrade/aggregate.hpp"
#include "roadgrade/anchors.hpp"
#include "roadgrade/elevation.hpp"
#include "roadgrade/eval.hpp"
#include "roadgrade/fuse.hpp"
#include "roadgrade/io.hpp"
#include "roadgrade/pitch.hpp"
#include "roadgrade/preprocess.hpp"
#include "roadgrade/types.hpp"

namespace roadgrade {

struct PipelineConfig {
  // File-mode inputs; unused when running on in-memory inputs.
  std::string trace_dir;
  std::string route_path;
  std::string elevation_path;
  std::string truth_path;
  std::string out_dir;

  StabilityThresholds thresholds;
  double bin_acc_m = 2.0;
  double bin_corr_gyr_m = 0.2;
  double d_sim_m = 100.0;
  double s_thresh = 0.7;
  double cutoff_hz = 2.0;
  AggMethod agg = AggMethod::Crh;
  SpeedSource speed_source = SpeedSource::Obd;
  bool offset_correction = true;
  std::uint64_t seed = 0;

  FilterSpec filter() const { return {2, cutoff_hz, kImuRateHz}; }

  /// Loads a JSON config; fields mirror the CLI flags.
  static PipelineConfig from_json_file(const std::string& path);
};

/// Everything derived from one trace that does not depend on anchor
/// thresholds, so sweeps reuse it.
struct PreparedTrip {
  std::string trip_id;
  SyncResult sync;
  PitchSeries gyro_route;  // whole-route gyro integration, arbitrary level

  struct SegmentData {
    std::string segment_id;
    double route_offset_m = 0.0;
    double length_m = 0.0;
    double dt = kImuDt;
    bool partial = false;
    PitchSeries gyro;        // theta0 = 0; leveled later against anchors
    PitchSeries theta_acc;   // accelerometer grade estimate
    std::vector<double> a_lon;  // filtered speed-derived acceleration
  };
  std::vector<SegmentData> segments;
};

/// Preprocess + align + both pitch estimators for one trace. Throws when
/// the trip offers no alignment opportunity.
PreparedTrip prepare_trip(const SensorTrace& trace, const Route& route,
                          const PipelineConfig& config);

struct TripOutput {
  std::string trip_id;
  std::vector<AnchorSnapshot> anchors;  // offset-corrected (or passthrough)
  bool offset_corrected = false;
  std::vector<SimilarityRegion> regions;  // with this trip's offsets filled
  std::vector<GradeProfile> profile_by_segment;  // drift-corrected, own anchors
  GradeProfile route_profile;                    // concatenated
};

struct PipelineResult {
  Route route;
  std::vector<SimilarityRegion> regions;  // shared shape, no offsets
  double region_coverage_fraction = 0.0;  // of route length
  std::vector<TripOutput> trips;
  std::vector<AnchorSnapshot> aggregated_anchors;        // all segments
  std::vector<GradeProfile> final_by_segment;
  GradeProfile final_route_profile;

  // Populated when ground truth is supplied.
  std::optional<ErrorReport> final_ae;
  std::optional<ErrorReport> final_ge;
  std::vector<ErrorReport> trip_ae;  // parallel to trips

  std::vector<std::string> warnings;
};

struct PipelineInputs {
  Route route;
  ElevationProfile elevation;
  std::vector<SensorTrace> traces;
  std::optional<GradeProfile> truth;  // route-wide
};

/// Threshold-dependent half of the pipeline: anchors, offset correction,
/// drift correction, aggregation, metrics.
PipelineResult estimate_and_aggregate(const std::vector<PreparedTrip>& prepared,
                                      const ElevationProfile& elevation, const Route& route,
                                      const PipelineConfig& config,
                                      const GradeProfile* truth = nullptr);

/// Full in-memory run.
PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config);

/// File-mode run: loads inputs from the config paths, writes artifacts into
/// config.out_dir. Throws with the failing stage named in the message.
PipelineResult run_pipeline_files(const PipelineConfig& config);

/// Writes profiles, anchors, regions, reports and small SVG charts.
void write_artifacts(const PipelineResult& result, const PipelineConfig& config);

struct SweepRow {
  double acc_thresh = 0.0;
  double jerk_thresh = 0.0;
  double anchor_density_per_500m = 0.0;  // mean over trips
  double anchor_mean_ae = 0.0;           // vs truth, all trips pooled
  double final_mean_ae = 0.0;
};

/// Re-runs the threshold-dependent pipeline for each (acc, jerk) pair.
std::vector<SweepRow> threshold_sweep(const std::vector<PreparedTrip>& prepared,
                                      const PipelineInputs& inputs, const PipelineConfig& config,
                                      const std::vector<std::pair<double, double>>& pairs);

}  // namespace roadgrade
