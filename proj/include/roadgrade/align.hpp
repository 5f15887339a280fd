#pragma once

#include "roadgrade/preprocess.hpp"
#include "roadgrade/types.hpp"

namespace roadgrade {

/**
 * Phone-to-vehicle alignment. Columns x_u, y_u, z_u are the vehicle's
 * lateral, forward and up axes expressed in phone coordinates; a phone-frame
 * vector's vehicle components are its dot products with the columns.
 */
class RotationMatrix {
public:
  /// Validates orthonormality (1e-9) and right-handedness (det +1 ± 1e-9).
  static RotationMatrix from_columns(const Vec3& x_u, const Vec3& y_u, const Vec3& z_u);

  static RotationMatrix identity();

  const Vec3& x_u() const { return x_; }
  const Vec3& y_u() const { return y_; }
  const Vec3& z_u() const { return z_; }

  Vec3 to_vehicle(const Vec3& phone) const {
    return {x_.dot(phone), y_.dot(phone), z_.dot(phone)};
  }

  /// Columns stacked as a 3x3 matrix (phone <- vehicle).
  Mat3 matrix() const;

  /// Angle (degrees) of the relative rotation to another alignment.
  double angle_to(const RotationMatrix& other) const;

private:
  RotationMatrix(const Vec3& x, const Vec3& y, const Vec3& z) : x_(x), y_(y), z_(z) {}
  Vec3 x_, y_, z_;
};

/**
 * Gravity direction in the phone frame from the stationary window: the mean
 * filtered acceleration, normalized. The un-normalized magnitude must land
 * in [9.3, 10.3] m/s² or the window is rejected.
 */
Vec3 estimate_z_u(const AlignedTrip& trip);

struct EventWindow {
  std::size_t begin = 0;  // tick indices, half-open
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct EventDetectOptions {
  double min_duration_s = 2.0;
  double min_accel = 1.0;        // m/s², speed-derived, throughout
  double max_yaw_rate = 0.02;    // rad/s, straight-road gate
  FilterSpec filter;
};

/// Earliest window (at or after start_tick) of at least min_duration_s with
/// sustained speed-derived acceleration on a straight stretch. Throws
/// ValidationError when the trip offers no calibration opportunity.
EventWindow detect_acceleration_event(const AlignedTrip& trip, const Vec3& z_u,
                                      const EventDetectOptions& opts = {},
                                      std::size_t start_tick = 0);

/**
 * Full alignment estimate: y_u is the mean acceleration over the event
 * window with its gravity component removed (projection orthogonal to z_u),
 * x_u = y_u x z_u. Throws when the event direction is degenerate (within 5°
 * of z_u).
 */
RotationMatrix estimate_R_PC(const AlignedTrip& trip, const Vec3& z_u, const EventWindow& window);

}  // namespace roadgrade
