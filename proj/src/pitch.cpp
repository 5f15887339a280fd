#include "roadgrade/pitch.hpp"

#include <cmath>

namespace roadgrade {

PitchSeries pitch_gyro(const SegmentSlice& slice, const RotationMatrix& R, double theta0_deg) {
  PitchSeries out;
  out.trip_id = slice.trip_id;
  out.segment_id = slice.segment_id;
  out.source = PitchSource::Gyro;
  out.s_m = slice.s;
  out.theta_deg.resize(slice.size());
  out.valid.assign(slice.size(), 1);
  double theta = deg2rad(theta0_deg);
  for (std::size_t i = 0; i < slice.size(); ++i) {
    if (i > 0) theta += slice.gyro[i].dot(R.x_u()) * slice.dt;
    out.theta_deg[i] = rad2deg(theta);
  }
  return out;
}

std::vector<double> speed_derived_accel(std::span<const double> v, double dt,
                                        const FilterSpec& filter) {
  std::vector<double> a(v.size(), 0.0);
  if (v.size() < 3) return a;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) a[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
  // One-sided edge differences would inject dt-scale noise spikes; reuse the
  // nearest interior estimate instead.
  a.front() = a[1];
  a.back() = a[a.size() - 2];
  if (a.size() >= 8) a = butterworth_lowpass(a, filter);
  return a;
}

std::vector<Vec3> longitudinal_accel(std::span<const double> v, double dt,
                                     const FilterSpec& filter) {
  const auto a = speed_derived_accel(v, dt, filter);
  std::vector<Vec3> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = Vec3(0.0, a[i], 0.0);
  return out;
}

std::vector<double> yaw_rate(const SegmentSlice& slice, const RotationMatrix& R) {
  std::vector<double> w(slice.size());
  for (std::size_t i = 0; i < slice.size(); ++i) w[i] = slice.gyro[i].dot(R.z_u());
  return w;
}

std::vector<Vec3> lateral_accel(std::span<const double> v, std::span<const double> omega_z) {
  if (v.size() != omega_z.size()) {
    throw std::invalid_argument("lateral_accel: speed / yaw-rate length mismatch");
  }
  std::vector<Vec3> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Centripetal acceleration points toward the turn center: -x for a
    // positive (counter-clockwise) yaw rate.
    out[i] = Vec3(-omega_z[i] * v[i], 0.0, 0.0);
  }
  return out;
}

std::vector<Vec3> estimate_gravity(const SegmentSlice& slice, const RotationMatrix& R,
                                   std::span<const Vec3> a_lon, std::span<const Vec3> a_lat) {
  if (a_lon.size() != slice.size() || a_lat.size() != slice.size()) {
    throw std::invalid_argument("estimate_gravity: inputs not tick-aligned");
  }
  std::vector<Vec3> g(slice.size());
  for (std::size_t i = 0; i < slice.size(); ++i) {
    g[i] = R.to_vehicle(slice.accel[i]) - a_lon[i] - a_lat[i];
  }
  return g;
}

PitchSeries pitch_accel(std::span<const Vec3> gravity, const SegmentSlice& slice,
                        const PitchAccelOptions& opts) {
  if (gravity.size() != slice.size()) {
    throw std::invalid_argument("pitch_accel: gravity series not tick-aligned");
  }
  PitchSeries out;
  out.trip_id = slice.trip_id;
  out.segment_id = slice.segment_id;
  out.source = PitchSource::Accel;
  out.s_m = slice.s;
  out.theta_deg.resize(slice.size());
  out.valid.resize(slice.size());
  for (std::size_t i = 0; i < gravity.size(); ++i) {
    const double mag = gravity[i].norm();
    if (mag < opts.min_gravity) {
      out.theta_deg[i] = 0.0;
      out.valid[i] = 0;
      continue;
    }
    const double c = std::clamp(gravity[i].y() / mag, -1.0, 1.0);
    // angle(G, y_u) = acos(c); grade = 90° - angle, uphill positive.
    out.theta_deg[i] = 90.0 - rad2deg(std::acos(c));
    out.valid[i] = 1;
  }
  return out;
}

}  // namespace roadgrade
