#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roadgrade/elevation.hpp"
#include "roadgrade/types.hpp"

namespace roadgrade {

/// Road grade as a function of route distance: either a sum of long-wave
/// sinusoids or a piecewise-linear knot sequence.
struct GradeShape {
  enum class Kind { SineMix, Piecewise };
  Kind kind = Kind::SineMix;

  struct SineComponent {
    double amplitude_deg;
    double wavelength_m;
    double phase_rad;
  };
  std::vector<SineComponent> components;  // SineMix

  std::vector<double> knot_s_m;      // Piecewise
  std::vector<double> knot_grade_deg;

  double at(double s) const;
};

/// A stretch where the elevation data diverges from the road (bridge,
/// underpass, occlusion): a smooth terrain excursion plus rough noise.
struct CorruptionRegion {
  double start_m = 0.0;
  double end_m = 0.0;
  double depth_m = -10.0;     // smooth excursion amplitude
  double roughness_m = 2.5;   // per-sample jitter inside the region
};

struct WorldSpec {
  std::uint64_t seed = 0;
  std::vector<double> segment_lengths_m;
  GradeShape grade;
  std::vector<CorruptionRegion> corruption;
  double elevation_spacing_m = 30.0;
  double truth_resolution_m = 0.1;
  // Calibration lot and approach stretch before the first segment; launch
  // transients happen here, off the profiled route.
  double lead_in_m = 150.0;

  static WorldSpec from_json_file(const std::string& path);
  void to_json_file(const std::string& path) const;
};

/// The 9 km, 8-segment world with one bridge corruption region; the grade
/// shape is drawn deterministically from the seed.
WorldSpec default_world_spec(std::uint64_t seed);

struct World {
  WorldSpec spec;
  Route route;
  GradeProfile true_grade;         // route-wide, fine resolution
  ElevationProfile elevation;      // ~30 m samples, corrupted where specified

  double grade_at(double route_m) const { return spec.grade.at(route_m); }
  double route_length() const { return route.extent_end(); }
  GradeProfile true_grade_for_segment(const RoadSegment& seg, double resolution_m) const;
  bool corrupted_at(double route_m) const;
};

World generate_world(const WorldSpec& spec);

struct TurnEvent {
  double start_m = 0.0;
  double end_m = 0.0;
  double yaw_rate_rad_s = 0.0;
};

struct DriverProfile {
  double cruise_speed = 14.0;    // m/s
  double launch_accel = 2.0;     // peak m/s² of the half-sine launch
  double brake_decel = 2.2;
  double stationary_s = 15.0;    // initial calibration rest
  double stop_duration_s = 4.0;
  std::vector<double> stop_positions_m;
  std::vector<TurnEvent> turns;

  struct Wobble {
    double amplitude = 0.0;  // m/s
    double period_s = 1.0;
  };
  std::vector<Wobble> speed_wobble;  // cruise-speed texture; phases drawn per trip

  /// Natural-driving defaults: stops at a few segment boundaries (roads are
  /// segmented at intersections), gentle turns mid-segment, mixed-period
  /// speed wobble.
  static DriverProfile standard(const Route& route);
};

struct NoiseSpec {
  double gyro_bias_dps = 0.0;  // pitch-axis bias; overridden by the schedule
  std::optional<std::vector<double>> gyro_bias_per_segment_dps;
  double gyro_noise_sigma_dps = 0.0;
  double accel_noise_sigma = 0.0;       // m/s², white, per axis
  double accel_dynamics_gain = 0.0;     // error proportional to |a| and |jerk|
  double calib_offset_deg = 0.0;        // expected anchor-grade bias
  double body_pitch_gain_deg = 0.3;     // ° per m/s² of longitudinal accel
  Mat3 mount_rotation = Mat3::Identity();  // phone axes in body coordinates
  double obd_noise_sigma = 0.0;  // m/s
  double gps_noise_sigma = 0.0;
  double sync_lag_s = 0.0;       // speed stream timestamps delayed by this
};

/// Per-trip draw for the heterogeneous-fleet scenarios: per-segment gyro
/// bias in ±0.2 °/s, calibration offset in ±2°, positive dynamics gain,
/// random mounting, mixed speed-sensor quality.
NoiseSpec draw_noise_spec(std::uint64_t seed, std::size_t n_segments);

/// Uniformly random rotation matrix (phone mounting).
Mat3 random_rotation(std::uint64_t seed);

/// Ground-truth introspection recorded alongside the emitted trace.
struct TripTruth {
  std::vector<double> t;
  std::vector<double> s;          // route distance
  std::vector<double> v;
  std::vector<double> pitch_deg;  // vehicle pitch incl. body-pitch term
  Mat3 r_pc;                      // true phone->vehicle alignment columns
  double expected_anchor_offset_deg = 0.0;
  double sync_lag_s = 0.0;
  std::vector<double> gyro_bias_dps_per_segment;
};

struct SimulatedTrip {
  SensorTrace trace;
  TripTruth truth;
};

SimulatedTrip simulate_trip(const World& world, const DriverProfile& driver,
                            const NoiseSpec& noise, const std::string& trip_id,
                            std::uint64_t seed);

// Deterministic RNG helpers shared by the simulator; plain 64-bit state so
// traces are reproducible bit-for-bit across platforms.
class SynthRng {
public:
  explicit SynthRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);
  double normal(double sigma);

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Sub-stream derivation so trips and purposes never share a stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace roadgrade
