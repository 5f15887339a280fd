#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "roadgrade/align.hpp"
#include "roadgrade/pipeline.hpp"
#include "roadgrade/synth.hpp"

using namespace roadgrade;
using namespace roadgrade::testing;

namespace {

AlignedTrip stationary_trip(const Vec3& accel, double duration_s = 14.0) {
  const auto n = static_cast<std::size_t>(duration_s * kImuRateHz) + 1;
  return make_trip(std::vector<double>(n, 0.0), std::vector<Vec3>(n, accel),
                   std::vector<Vec3>(n, Vec3::Zero()), {0.5, duration_s - 0.5});
}

}  // namespace

TEST_CASE("estimate_z_u on a flat phone") {
  const auto trip = stationary_trip(Vec3(0, 0, kGravity));
  const Vec3 z = estimate_z_u(trip);
  CHECK(z.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z.z() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("estimate_z_u on a phone tilted 30 degrees about X") {
  const double s = std::sin(deg2rad(30.0)), c = std::cos(deg2rad(30.0));
  const auto trip = stationary_trip(kGravity * Vec3(0, -s, c));
  const Vec3 z = estimate_z_u(trip);
  CHECK(z.y() == doctest::Approx(-s).epsilon(1e-12));
  CHECK(z.z() == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("estimate_z_u tolerates stationary noise") {
  SynthRng rng(7);
  const std::size_t n = 2801;
  std::vector<Vec3> accel(n);
  for (auto& a : accel) {
    a = Vec3(rng.normal(0.05), rng.normal(0.05), kGravity + rng.normal(0.05));
  }
  auto trip = make_trip(std::vector<double>(n, 0.0), std::move(accel),
                        std::vector<Vec3>(n, Vec3::Zero()), {0.5, 13.5});
  const Vec3 z = estimate_z_u(trip);
  const double angle = rad2deg(std::acos(std::clamp(z.dot(Vec3(0, 0, 1)), -1.0, 1.0)));
  CHECK(angle < 0.2);
}

TEST_CASE("estimate_z_u rejects implausible gravity magnitude") {
  const auto trip = stationary_trip(Vec3(0, 0, 8.0));
  CHECK_THROWS_AS((void)estimate_z_u(trip), ValidationError);
}

namespace {

// Rest, then a straight 2 m/s^2 launch to cruise.
AlignedTrip launch_trip(double yaw_rate_rad_s = 0.0) {
  std::vector<double> v;
  std::vector<Vec3> accel, gyro;
  const double dt = kImuDt;
  for (double t = 0.0; t <= 40.0; t += dt) {
    double speed, a;
    if (t < 14.0) {
      speed = 0.0;
      a = 0.0;
    } else if (t < 21.0) {
      speed = 2.0 * (t - 14.0);
      a = 2.0;
    } else {
      speed = 14.0;
      a = 0.0;
    }
    v.push_back(speed);
    accel.emplace_back(0.0, a, kGravity);
    gyro.emplace_back(0.0, 0.0, t >= 14.0 ? yaw_rate_rad_s : 0.0);
  }
  return make_trip(std::move(v), std::move(accel), std::move(gyro), {0.5, 13.5});
}

}  // namespace

TEST_CASE("detect_acceleration_event finds a straight launch") {
  const auto trip = launch_trip();
  const auto window = detect_acceleration_event(trip, Vec3(0, 0, 1));
  CHECK(window.size() >= static_cast<std::size_t>(2.0 / trip.dt));
  CHECK(trip.t[window.begin] == doctest::Approx(14.0).epsilon(0.1));
}

TEST_CASE("detect_acceleration_event rejects constant-speed trips") {
  const std::size_t n = 6001;
  auto trip = make_trip(std::vector<double>(n, 12.0),
                        std::vector<Vec3>(n, Vec3(0, 0, kGravity)),
                        std::vector<Vec3>(n, Vec3::Zero()), {0.5, 13.5});
  CHECK_THROWS_AS((void)detect_acceleration_event(trip, Vec3(0, 0, 1)), ValidationError);
}

TEST_CASE("detect_acceleration_event rejects launches during a turn") {
  const auto trip = launch_trip(0.1);
  CHECK_THROWS_AS((void)detect_acceleration_event(trip, Vec3(0, 0, 1)), ValidationError);
}

TEST_CASE("estimate_R_PC is identity for an already-aligned phone") {
  const auto trip = launch_trip();
  const Vec3 z = estimate_z_u(trip);
  const auto window = detect_acceleration_event(trip, z);
  const auto r = estimate_R_PC(trip, z, window);
  CHECK(r.angle_to(RotationMatrix::identity()) < 1e-6);
}

TEST_CASE("estimate_R_PC recovers a 90-degree yaw mount") {
  // Phone yawed 90 degrees about vertical: vehicle forward reads on phone +X.
  std::vector<double> v;
  std::vector<Vec3> accel, gyro;
  for (double t = 0.0; t <= 40.0; t += kImuDt) {
    double speed, a;
    if (t < 14.0) {
      speed = 0.0;
      a = 0.0;
    } else if (t < 21.0) {
      speed = 2.0 * (t - 14.0);
      a = 2.0;
    } else {
      speed = 14.0;
      a = 0.0;
    }
    v.push_back(speed);
    accel.emplace_back(a, 0.0, kGravity);
    gyro.emplace_back(Vec3::Zero());
  }
  auto trip = make_trip(std::move(v), std::move(accel), std::move(gyro), {0.5, 13.5});
  const Vec3 z = estimate_z_u(trip);
  const auto r = estimate_R_PC(trip, z, detect_acceleration_event(trip, z));
  CHECK(r.y_u().x() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x_u().y() == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(r.z_u().z() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("alignment recovers random synthetic mountings within 0.5 degrees") {
  const World world = generate_world(small_world_spec(700.0));
  const PipelineConfig config;
  for (std::uint64_t k = 1; k <= 6; ++k) {
    NoiseSpec noise;
    noise.mount_rotation = random_rotation(1000 + k);
    const auto sim = simulate_trip(world, quiet_driver(), noise, "mount", k);

    PreprocessOptions popts;
    popts.filter = config.filter();
    const auto trip = build_aligned_trip(sim.trace, popts);
    const Vec3 z = estimate_z_u(trip);
    const auto r = estimate_R_PC(trip, z, detect_acceleration_event(trip, z));

    const Mat3 t = sim.truth.r_pc;
    const auto truth = RotationMatrix::from_columns(t.col(0), t.col(1), t.col(2));
    CHECK(r.angle_to(truth) < 0.5);

    // Orthonormality invariants hold by construction of the return type.
    const Mat3 m = r.matrix();
    CHECK(std::abs(m.determinant() - 1.0) < 1e-9);
    CHECK((m.transpose() * m - Mat3::Identity()).norm() < 1e-9);

    // The stationary mean maps to straight-up gravity in the vehicle frame.
    Vec3 mean = Vec3::Zero();
    std::size_t count = 0;
    for (std::size_t i = 0; i < trip.size(); ++i) {
      if (trip.stationary_window.contains(trip.t[i])) {
        mean += trip.accel[i];
        ++count;
      }
    }
    mean /= static_cast<double>(count);
    const Vec3 up = r.to_vehicle(mean).normalized();
    CHECK(rad2deg(std::acos(std::clamp(up.z(), -1.0, 1.0))) < 0.5);
  }
}

TEST_CASE("rotation matrix validation rejects bad columns") {
  CHECK_THROWS_AS((void)RotationMatrix::from_columns(Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(0, 0, 1)),
                  ValidationError);
  CHECK_THROWS_AS(
      (void)RotationMatrix::from_columns(Vec3(1, 0, 0), Vec3(1, 0, 0), Vec3(0, 0, 1)),
      ValidationError);
  // Left-handed triad: determinant -1.
  CHECK_THROWS_AS(
      (void)RotationMatrix::from_columns(Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(0, 0, 1)),
      ValidationError);
}
