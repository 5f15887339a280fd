#pragma once

#include "roadgrade/align.hpp"
#include "roadgrade/preprocess.hpp"
#include "roadgrade/types.hpp"

namespace roadgrade {

enum class PitchSource { Gyro, Accel };

/// A per-tick grade estimate along a segment slice, degrees uphill-positive.
struct PitchSeries {
  std::string trip_id;
  std::string segment_id;
  PitchSource source = PitchSource::Gyro;
  std::vector<double> s_m;        // same grid as the originating slice
  std::vector<double> theta_deg;
  std::vector<uint8_t> valid;     // accel ticks with unreliable gravity are 0

  std::size_t size() const { return s_m.size(); }
  double at(double s) const { return interp_clamped(s_m, theta_deg, s); }
};

/**
 * Grade by integrating the vehicle-frame pitch rate: theta[0] = theta0,
 * theta[i] = theta[i-1] + omega_Xc[i] * dt, reported in degrees.
 */
PitchSeries pitch_gyro(const SegmentSlice& slice, const RotationMatrix& R, double theta0_deg);

/// Speed-derived longitudinal acceleration, central-differenced then
/// low-pass filtered. Scalar series (m/s²).
std::vector<double> speed_derived_accel(std::span<const double> v, double dt,
                                        const FilterSpec& filter);

/// Longitudinal acceleration as vehicle-frame vectors a*ŷ.
std::vector<Vec3> longitudinal_accel(std::span<const double> v, double dt,
                                     const FilterSpec& filter);

/// Vehicle yaw rate per tick: aligned gyro dotted with the up axis.
std::vector<double> yaw_rate(const SegmentSlice& slice, const RotationMatrix& R);

/**
 * Lateral (centripetal) acceleration as sensed by the accelerometer, in
 * vehicle-frame vectors: magnitude omega_Zc * v on the lateral axis, signed
 * so that subtracting it from the measurement cancels the turn dynamics.
 */
std::vector<Vec3> lateral_accel(std::span<const double> v, std::span<const double> omega_z);

/// Gravity estimate per tick (vehicle frame): measured acceleration minus
/// longitudinal and lateral vehicle dynamics.
std::vector<Vec3> estimate_gravity(const SegmentSlice& slice, const RotationMatrix& R,
                                   std::span<const Vec3> a_lon, std::span<const Vec3> a_lat);

struct PitchAccelOptions {
  double min_gravity = 5.0;  // |G| below this marks the tick invalid
};

/// Grade from the gravity direction: 90° minus the angle between G and the
/// forward axis, uphill positive.
PitchSeries pitch_accel(std::span<const Vec3> gravity, const SegmentSlice& slice,
                        const PitchAccelOptions& opts = {});

}  // namespace roadgrade
