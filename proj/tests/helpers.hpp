#pragma once

#include <cmath>
#include <vector>

#include "roadgrade/align.hpp"
#include "roadgrade/preprocess.hpp"
#include "roadgrade/synth.hpp"
#include "roadgrade/types.hpp"

namespace roadgrade::testing {

// Least-squares amplitude of a sine at a known frequency, evaluated over the
// central half of the series so filter edge transients stay out.
inline double sine_amplitude(const std::vector<double>& y, double freq_hz, double dt) {
  const std::size_t n = y.size();
  const std::size_t lo = n / 4, hi = 3 * n / 4;
  double ss = 0.0, sc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double w = 2.0 * M_PI * freq_hz * static_cast<double>(i) * dt;
    ss += y[i] * std::sin(w);
    sc += y[i] * std::cos(w);
  }
  const double m = static_cast<double>(hi - lo) / 2.0;
  return std::sqrt(ss * ss + sc * sc) / m;
}

inline SegmentSlice make_slice(std::vector<double> s, std::vector<Vec3> accel,
                               std::vector<Vec3> gyro, std::vector<double> v,
                               double dt = kImuDt) {
  SegmentSlice slice;
  slice.segment_id = "test";
  slice.trip_id = "test";
  slice.dt = dt;
  slice.length_m = s.empty() ? 0.0 : s.back();
  slice.s = std::move(s);
  slice.accel = std::move(accel);
  slice.gyro = std::move(gyro);
  slice.v = std::move(v);
  return slice;
}

// Constant-speed slice of n ticks with uniform readings.
inline SegmentSlice uniform_slice(std::size_t n, const Vec3& accel, const Vec3& gyro,
                                  double v = 10.0, double dt = kImuDt) {
  std::vector<double> s(n), vv(n, v);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<double>(i) * v * dt;
  return make_slice(std::move(s), std::vector<Vec3>(n, accel), std::vector<Vec3>(n, gyro),
                    std::move(vv), dt);
}

inline AlignedTrip make_trip(std::vector<double> v, std::vector<Vec3> accel,
                             std::vector<Vec3> gyro, TimeWindow stationary,
                             double dt = kImuDt) {
  AlignedTrip trip;
  trip.trip_id = "test";
  trip.dt = dt;
  trip.t.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) trip.t[i] = static_cast<double>(i) * dt;
  trip.s = arc_length(v, dt);
  trip.v = std::move(v);
  trip.accel = std::move(accel);
  trip.gyro = std::move(gyro);
  trip.stationary_window = stationary;
  return trip;
}

// A small flat or shaped world for closed-loop tests.
inline WorldSpec small_world_spec(double length_m, double grade_deg = 0.0) {
  WorldSpec spec;
  spec.seed = 1;
  spec.segment_lengths_m = {length_m};
  spec.lead_in_m = 150.0;
  spec.grade.kind = GradeShape::Kind::Piecewise;
  spec.grade.knot_s_m = {0.0, length_m + 300.0};
  spec.grade.knot_grade_deg = {grade_deg, grade_deg};
  return spec;
}

inline DriverProfile quiet_driver() {
  DriverProfile d;
  d.cruise_speed = 14.0;
  d.launch_accel = 2.0;
  return d;  // no stops, no turns, no wobble
}

}  // namespace roadgrade::testing
