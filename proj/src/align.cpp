#include "roadgrade/align.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace roadgrade {

RotationMatrix RotationMatrix::from_columns(const Vec3& x_u, const Vec3& y_u, const Vec3& z_u) {
  constexpr double tol = 1e-9;
  for (const Vec3* c : {&x_u, &y_u, &z_u}) {
    if (std::abs(c->norm() - 1.0) > tol) {
      throw ValidationError("rotation matrix: column not unit-norm");
    }
  }
  if (std::abs(x_u.dot(y_u)) > tol || std::abs(y_u.dot(z_u)) > tol ||
      std::abs(x_u.dot(z_u)) > tol) {
    throw ValidationError("rotation matrix: columns not orthogonal");
  }
  Mat3 m;
  m.col(0) = x_u;
  m.col(1) = y_u;
  m.col(2) = z_u;
  if (std::abs(m.determinant() - 1.0) > tol) {
    throw ValidationError("rotation matrix: determinant not +1");
  }
  return RotationMatrix(x_u, y_u, z_u);
}

RotationMatrix RotationMatrix::identity() {
  return RotationMatrix(Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ());
}

Mat3 RotationMatrix::matrix() const {
  Mat3 m;
  m.col(0) = x_;
  m.col(1) = y_;
  m.col(2) = z_;
  return m;
}

double RotationMatrix::angle_to(const RotationMatrix& other) const {
  const Mat3 rel = matrix().transpose() * other.matrix();
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  return rad2deg(std::acos(c));
}

Vec3 estimate_z_u(const AlignedTrip& trip) {
  Vec3 mean = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < trip.size(); ++i) {
    if (trip.stationary_window.contains(trip.t[i])) {
      mean += trip.accel[i];
      ++n;
    }
  }
  if (n == 0) throw ValidationError("estimate_z_u: stationary window outside trip");
  mean /= static_cast<double>(n);
  const double mag = mean.norm();
  if (mag < 9.3 || mag > 10.3) {
    throw ValidationError("estimate_z_u: stationary accel magnitude " + std::to_string(mag) +
                          " m/s² — not stationary or accel miscalibrated");
  }
  return mean / mag;
}

EventWindow detect_acceleration_event(const AlignedTrip& trip, const Vec3& z_u,
                                      const EventDetectOptions& opts, std::size_t start_tick) {
  if (trip.size() < 4) throw ValidationError("detect_acceleration_event: trip too short");

  std::vector<double> a(trip.size(), 0.0);
  for (std::size_t i = 1; i + 1 < trip.size(); ++i) {
    a[i] = (trip.v[i + 1] - trip.v[i - 1]) / (2.0 * trip.dt);
  }
  a = butterworth_lowpass(a, opts.filter);

  const auto min_ticks = static_cast<std::size_t>(opts.min_duration_s / trip.dt);
  std::size_t run_start = 0;
  std::size_t run_len = 0;
  for (std::size_t i = start_tick; i < trip.size(); ++i) {
    const double yaw_rate = trip.gyro[i].dot(z_u);
    const bool ok = a[i] > opts.min_accel && std::abs(yaw_rate) < opts.max_yaw_rate;
    if (ok) {
      if (run_len == 0) run_start = i;
      ++run_len;
    } else {
      if (run_len >= min_ticks) return {run_start, run_start + run_len};
      run_len = 0;
    }
  }
  if (run_len >= min_ticks) return {run_start, run_start + run_len};
  throw ValidationError("detect_acceleration_event: no calibration opportunity (no straight " +
                        std::string("acceleration window of ") +
                        std::to_string(opts.min_duration_s) + " s)");
}

RotationMatrix estimate_R_PC(const AlignedTrip& trip, const Vec3& z_u, const EventWindow& window) {
  if (window.end > trip.size() || window.size() == 0) {
    throw std::invalid_argument("estimate_R_PC: bad event window");
  }
  Vec3 mean = Vec3::Zero();
  for (std::size_t i = window.begin; i < window.end; ++i) mean += trip.accel[i];
  mean /= static_cast<double>(window.size());

  const double angle_deg = rad2deg(std::acos(std::clamp(
      std::abs(mean.normalized().dot(z_u)), 0.0, 1.0)));
  if (angle_deg < 5.0) {
    throw ValidationError("estimate_R_PC: event acceleration within 5° of z_u");
  }

  Vec3 y_u = mean - mean.dot(z_u) * z_u;
  const double n = y_u.norm();
  if (n < 1e-6) throw ValidationError("estimate_R_PC: degenerate forward direction");
  y_u /= n;
  const Vec3 x_u = y_u.cross(z_u);
  return RotationMatrix::from_columns(x_u.normalized(), y_u, z_u);
}

}  // namespace roadgrade
