#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace roadgrade {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kGravity = 9.81;          // m/s²
inline constexpr double kImuRateHz = 200.0;       // nominal IMU sampling rate
inline constexpr double kImuDt = 1.0 / kImuRateHz;

inline constexpr double deg2rad(double d) { return d * M_PI / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / M_PI; }

/// Malformed input file (bad schema, unparsable field). Message names the
/// file and, where known, the line.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Structurally valid input that violates a domain invariant.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SensorSample {
  double t = 0.0;  // seconds, strictly increasing within a trace
  Vec3 accel = Vec3::Zero();  // m/s², phone frame
  Vec3 gyro = Vec3::Zero();   // rad/s, phone frame
};

enum class SpeedSource { Obd, Gps };

const char* to_string(SpeedSource s);

struct SpeedSample {
  double t = 0.0;
  double v = 0.0;  // m/s, >= 0
};

struct TimeWindow {
  double t0 = 0.0;
  double t1 = 0.0;
  double duration() const { return t1 - t0; }
  bool contains(double t) const { return t >= t0 && t <= t1; }
};

/**
 * One trip's raw sensor recording: 200 Hz IMU samples plus the two speed
 * streams (OBD-style ~10 Hz, GPS-style ~1 Hz) and the stationary window
 * used for calibration.
 */
struct SensorTrace {
  std::string trip_id;
  std::string phone_id;
  std::string vehicle_id;
  std::vector<SensorSample> samples;
  std::vector<SpeedSample> obd_speed;
  std::vector<SpeedSample> gps_speed;
  TimeWindow stationary_window;

  const std::vector<SpeedSample>& speeds(SpeedSource s) const {
    return s == SpeedSource::Obd ? obd_speed : gps_speed;
  }

  /// Throws ValidationError on the first violated invariant.
  void validate() const;

  /// Sampling gaps longer than 3 nominal periods; flagged, not fatal.
  std::size_t count_gaps(double nominal_rate_hz = kImuRateHz) const;
};

struct RoadSegment {
  std::string segment_id;
  double length_m = 0.0;        // > 0
  double route_offset_m = 0.0;  // start position along the route
  double end_m() const { return route_offset_m + length_m; }
};

struct Route {
  std::vector<RoadSegment> segments;  // ordered by route_offset, non-overlapping

  double length() const {
    return segments.empty() ? 0.0 : segments.back().end_m() - segments.front().route_offset_m;
  }
  double extent_end() const { return segments.empty() ? 0.0 : segments.back().end_m(); }
  void validate() const;
};

/**
 * Grade (degrees, uphill positive) sampled at fixed spatial resolution
 * along a segment. Distances are segment-local and strictly increasing.
 */
struct GradeProfile {
  std::string segment_id;
  double resolution_m = 0.0;
  std::vector<double> distance_m;
  std::vector<double> grade_deg;

  std::size_t size() const { return distance_m.size(); }
  bool empty() const { return distance_m.empty(); }

  /// Linear interpolation, clamped at the ends.
  double at(double d) const;

  /// Checks ordering, finiteness and the |grade| < 45° road-sanity bound.
  void validate() const;
};

/// A distance-binned accelerometer grade estimate from one trip.
struct AnchorSnapshot {
  std::string segment_id;
  std::string trip_id;
  double bin_center_m = 0.0;  // segment-local
  double grade_deg = 0.0;
  int sample_count = 0;  // raw estimates averaged into the bin
};

// Shared small helpers used across modules.

/// Linear interpolation of y(x) at xq; x strictly increasing; clamps at ends.
double interp_clamped(const std::vector<double>& x, const std::vector<double>& y, double xq);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);

}  // namespace roadgrade
