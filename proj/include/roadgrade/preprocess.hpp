#pragma once

#include <span>
#include <vector>

#include "roadgrade/types.hpp"

namespace roadgrade {

struct FilterSpec {
  int order = 2;  // only second order is supported
  double cutoff_hz = 2.0;
  double sample_rate_hz = kImuRateHz;
};

/**
 * Zero-phase (forward-backward) second-order Butterworth low-pass.
 *
 * The signal is extended by odd reflection at both ends and the filter
 * state is initialised to its step steady state, so DC passes exactly and
 * edge transients stay out of the output. Two passes square the magnitude
 * response: -6 dB at the cutoff.
 */
std::vector<double> butterworth_lowpass(std::span<const double> signal, const FilterSpec& spec);

/// Per-tick lowpass of each component of a 3-vector series.
std::vector<Vec3> butterworth_lowpass3(std::span<const Vec3> signal, const FilterSpec& spec);

/// Linear interpolation of speed samples onto a time grid, clamped at the
/// ends. Requires at least two samples.
std::vector<double> resample_speed(const std::vector<SpeedSample>& speeds,
                                   std::span<const double> grid);

struct SyncResult {
  double lag_s = 0.0;      // shift speed timestamps by -lag to align with IMU
  double peak_corr = 0.0;  // normalized cross-correlation at the peak
  bool reliable = false;   // peak_corr >= 0.3
};

/**
 * Estimates the speed-stream clock lag against the IMU stream by
 * cross-correlating |dv/dt| with the magnitude of the horizontal (gravity-
 * removed) acceleration, searched over ±2 s. An unreliable peak (< 0.3)
 * yields lag 0 with reliable=false.
 */
SyncResult synchronize(const SensorTrace& trace, SpeedSource source,
                       const FilterSpec& spec = {});

/// Cumulative arc length: s[0] = 0, s[i] = s[i-1] + v[i]*dt.
std::vector<double> arc_length(std::span<const double> v, double dt);

/**
 * One trip resampled onto the uniform 200 Hz grid: filtered IMU streams,
 * speed interpolated per tick, and arc length from the route start.
 */
struct AlignedTrip {
  std::string trip_id;
  double t0 = 0.0;
  double dt = kImuDt;
  std::vector<double> t;     // absolute seconds
  std::vector<Vec3> accel;   // filtered, phone frame
  std::vector<Vec3> gyro;    // filtered, phone frame
  std::vector<double> v;     // m/s
  std::vector<double> s;     // meters from route start
  TimeWindow stationary_window;
  SyncResult sync;

  std::size_t size() const { return t.size(); }
};

struct PreprocessOptions {
  FilterSpec filter;
  SpeedSource speed_source = SpeedSource::Obd;
  bool synchronize_speed = true;
};

/// Filter, synchronize, resample and integrate arc length for one trace.
AlignedTrip build_aligned_trip(const SensorTrace& trace, const PreprocessOptions& opts = {});

struct SegmentSlice {
  std::string segment_id;
  std::string trip_id;
  double route_offset_m = 0.0;
  double length_m = 0.0;
  double dt = kImuDt;
  std::vector<Vec3> accel;
  std::vector<Vec3> gyro;
  std::vector<double> v;
  std::vector<double> s;  // re-origined to the segment start
  bool partial = false;   // trip did not cover the full segment

  std::size_t size() const { return s.size(); }
  bool empty() const { return s.empty(); }
};

/// Splits a trip into per-segment slices; ticks are assigned to segments
/// half-open on arc length so no tick lands in two slices. Uncovered
/// segments yield empty slices.
std::vector<SegmentSlice> segment_slice(const AlignedTrip& trip, const Route& route);

}  // namespace roadgrade
