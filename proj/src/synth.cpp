#include "roadgrade/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

namespace roadgrade {

using nlohmann::json;

// ---------------------------------------------------------------------------
// RNG

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over seed ^ rotated stream
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t SynthRng::next_u64() {
  // splitmix64 step
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SynthRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SynthRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double SynthRng::normal(double sigma) {
  if (have_spare_) {
    have_spare_ = false;
    return spare_ * sigma;
  }
  // Box-Muller; keeps output independent of the platform's library.
  double u1 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * M_PI * u2) * sigma;
}

Mat3 random_rotation(std::uint64_t seed) {
  SynthRng rng(seed);
  // Uniform quaternion from four normals.
  double q[4];
  double norm = 0.0;
  for (double& c : q) {
    c = rng.normal(1.0);
    norm += c * c;
  }
  norm = std::sqrt(norm);
  const double w = q[0] / norm, x = q[1] / norm, y = q[2] / norm, z = q[3] / norm;
  Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

// ---------------------------------------------------------------------------
// World

double GradeShape::at(double s) const {
  if (kind == Kind::SineMix) {
    double g = 0.0;
    for (const auto& c : components) {
      g += c.amplitude_deg * std::sin(2.0 * M_PI * s / c.wavelength_m + c.phase_rad);
    }
    return g;
  }
  if (knot_s_m.empty()) return 0.0;
  return interp_clamped(knot_s_m, knot_grade_deg, s);
}

WorldSpec default_world_spec(std::uint64_t seed) {
  WorldSpec spec;
  spec.seed = seed;
  spec.segment_lengths_m = {1200, 1100, 900, 1350, 1050, 1150, 1400, 850};  // 9 km

  SynthRng rng(mix_seed(seed, 0x601d));
  GradeShape shape;
  shape.kind = GradeShape::Kind::SineMix;
  shape.components = {
      {rng.uniform(1.8, 2.6), rng.uniform(1800.0, 2600.0), rng.uniform(0.0, 2.0 * M_PI)},
      {rng.uniform(0.8, 1.2), rng.uniform(700.0, 1100.0), rng.uniform(0.0, 2.0 * M_PI)},
      {rng.uniform(0.3, 0.6), rng.uniform(400.0, 600.0), rng.uniform(0.0, 2.0 * M_PI)},
  };
  spec.grade = shape;

  // One long bridge/valley crossing; its 1260 m cover 14% of the route.
  CorruptionRegion bridge;
  bridge.start_m = 3900.0;
  bridge.end_m = 5160.0;
  bridge.depth_m = -12.0;
  bridge.roughness_m = 2.5;
  spec.corruption = {bridge};
  return spec;
}

bool World::corrupted_at(double route_m) const {
  for (const auto& c : spec.corruption) {
    if (route_m >= c.start_m && route_m <= c.end_m) return true;
  }
  return false;
}

GradeProfile World::true_grade_for_segment(const RoadSegment& seg, double resolution_m) const {
  GradeProfile p;
  p.segment_id = seg.segment_id;
  p.resolution_m = resolution_m;
  for (double d = 0.0; d <= seg.length_m + 1e-9; d += resolution_m) {
    p.distance_m.push_back(d);
    p.grade_deg.push_back(grade_at(seg.route_offset_m + d));
  }
  return p;
}

World generate_world(const WorldSpec& spec) {
  if (spec.segment_lengths_m.empty()) throw std::invalid_argument("generate_world: no segments");
  World world;
  world.spec = spec;

  double offset = spec.lead_in_m;
  for (std::size_t i = 0; i < spec.segment_lengths_m.size(); ++i) {
    RoadSegment seg;
    seg.segment_id = "seg-" + std::to_string(i + 1);
    seg.length_m = spec.segment_lengths_m[i];
    seg.route_offset_m = offset;
    offset += seg.length_m;
    world.route.segments.push_back(std::move(seg));
  }
  world.route.validate();
  const double length = world.route.extent_end();

  world.true_grade.segment_id = "route";
  world.true_grade.resolution_m = spec.truth_resolution_m;
  for (double s = 0.0; s <= length + 1e-9; s += spec.truth_resolution_m) {
    world.true_grade.distance_m.push_back(s);
    world.true_grade.grade_deg.push_back(spec.grade.at(s));
  }

  // Elevation = integrated grade, sampled coarsely, then corrupted.
  // Corruption is a terrain excursion plus medium-wavelength roughness: the
  // jagged shape breaks curve similarity in every window, the way occluded
  // or off-road samples do, while a smooth dip alone would leave flanks
  // that differ from the road by little more than an offset.
  SynthRng rng(mix_seed(spec.seed, 0xe1ef));
  struct Wave {
    double amp, wavelength, phase;
  };
  std::vector<std::array<Wave, 3>> waves(spec.corruption.size());
  for (std::size_t ci = 0; ci < spec.corruption.size(); ++ci) {
    const double r = spec.corruption[ci].roughness_m;
    waves[ci] = {Wave{0.25 * r, 47.0, rng.uniform(0.0, 2.0 * M_PI)},
                 Wave{0.35 * r, 83.0, rng.uniform(0.0, 2.0 * M_PI)},
                 Wave{0.50 * r, 151.0, rng.uniform(0.0, 2.0 * M_PI)}};
  }

  const double h = spec.truth_resolution_m;
  double elev = 100.0;
  double next_sample = 0.0;
  double prev_sin = std::sin(deg2rad(spec.grade.at(0.0)));
  for (double s = 0.0; s <= length + 1e-9; s += h) {
    if (s > 0.0) {
      const double cur_sin = std::sin(deg2rad(spec.grade.at(s)));
      elev += 0.5 * (prev_sin + cur_sin) * h;
      prev_sin = cur_sin;
    }
    if (s + 1e-9 >= next_sample) {
      double e = elev;
      for (std::size_t ci = 0; ci < spec.corruption.size(); ++ci) {
        const auto& c = spec.corruption[ci];
        if (s < c.start_m || s > c.end_m) continue;
        const double mid = 0.5 * (c.start_m + c.end_m);
        const double half = 0.5 * (c.end_m - c.start_m);
        const double u = (s - mid) / half;
        const double bump = std::cos(0.5 * M_PI * u);
        e += c.depth_m * bump * bump;
        for (const auto& w : waves[ci]) {
          e += w.amp * std::sin(2.0 * M_PI * s / w.wavelength + w.phase);
        }
        e += 0.4 * c.roughness_m * rng.uniform(-1.0, 1.0);
      }
      world.elevation.distance_m.push_back(s);
      world.elevation.elevation_m.push_back(e);
      next_sample += spec.elevation_spacing_m;
    }
  }
  return world;
}

// ---------------------------------------------------------------------------
// Trip simulation

DriverProfile DriverProfile::standard(const Route& route) {
  DriverProfile d;
  // Stop at every other interior segment boundary, as at intersections.
  for (std::size_t i = 2; i < route.segments.size(); i += 2) {
    d.stop_positions_m.push_back(route.segments[i].route_offset_m);
  }
  const double end = route.extent_end();
  d.turns = {
      {0.28 * end, 0.30 * end, 0.10},
      {0.58 * end, 0.59 * end, -0.08},
      {0.85 * end, 0.87 * end, 0.12},
  };
  d.speed_wobble = {{1.3, 11.0}, {0.9, 5.3}, {0.5, 2.7}};
  return d;
}

NoiseSpec draw_noise_spec(std::uint64_t seed, std::size_t n_segments) {
  SynthRng rng(mix_seed(seed, 0xd01e));
  NoiseSpec n;
  std::vector<double> biases(n_segments);
  for (auto& b : biases) b = rng.uniform(-0.2, 0.2);
  n.gyro_bias_per_segment_dps = biases;
  n.gyro_noise_sigma_dps = rng.uniform(0.02, 0.06);
  n.accel_noise_sigma = rng.uniform(0.03, 0.08);
  n.accel_dynamics_gain = rng.uniform(0.1, 0.25);
  n.calib_offset_deg = rng.uniform(-2.0, 2.0);
  n.mount_rotation = random_rotation(rng.next_u64());
  n.obd_noise_sigma = rng.uniform(0.01, 0.02);
  n.gps_noise_sigma = rng.uniform(0.04, 0.08);
  n.sync_lag_s = rng.uniform(-0.3, 0.3);
  return n;
}

namespace {

double smoothstep01(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

enum class DriveMode { Rest, Drive, Brake, Dwell };

}  // namespace

SimulatedTrip simulate_trip(const World& world, const DriverProfile& driver,
                            const NoiseSpec& noise, const std::string& trip_id,
                            std::uint64_t seed) {
  const double dt = kImuDt;
  const double route_end = world.route_length();
  const double lot_pitch_deg = -noise.calib_offset_deg;
  const double blend_m = 8.0;  // lot-to-road pitch transition distance

  SynthRng wobble_rng(mix_seed(seed, 0x30bb));
  std::vector<double> wobble_phase(driver.speed_wobble.size());
  for (auto& p : wobble_phase) p = wobble_rng.uniform(0.0, 2.0 * M_PI);

  auto wobble_at = [&](double t) {
    double w = 0.0;
    for (std::size_t k = 0; k < driver.speed_wobble.size(); ++k) {
      const auto& c = driver.speed_wobble[k];
      w += c.amplitude * std::sin(2.0 * M_PI * t / c.period_s + wobble_phase[k]);
    }
    return w;
  };

  auto yaw_rate_at = [&](double s) {
    for (const auto& turn : driver.turns) {
      if (s >= turn.start_m && s <= turn.end_m) return turn.yaw_rate_rad_s;
    }
    return 0.0;
  };

  auto gyro_bias_at = [&](double s) {
    if (noise.gyro_bias_per_segment_dps && !noise.gyro_bias_per_segment_dps->empty()) {
      const auto& sched = *noise.gyro_bias_per_segment_dps;
      for (std::size_t i = 0; i < world.route.segments.size() && i < sched.size(); ++i) {
        const auto& seg = world.route.segments[i];
        if (s >= seg.route_offset_m && s < seg.end_m()) return sched[i];
      }
      return sched.back();
    }
    return noise.gyro_bias_dps;
  };

  // --- closed-loop speed/position rollout ---
  const double kp = 0.5;  // speed-tracking gain, 1/s
  std::vector<double> t_arr, v_arr, s_arr, a_cmd_arr;
  {
    DriveMode mode = DriveMode::Rest;
    double v = 0.0, s = 0.0, t = 0.0;
    double mode_until = driver.stationary_s;
    std::size_t next_stop = 0;
    const double t_max = 3600.0;
    while (t < t_max) {
      double a_cmd = 0.0;
      switch (mode) {
        case DriveMode::Rest:
        case DriveMode::Dwell:
          v = 0.0;
          if (t >= mode_until) mode = DriveMode::Drive;
          break;
        case DriveMode::Drive: {
          if (next_stop < driver.stop_positions_m.size()) {
            const double dist = driver.stop_positions_m[next_stop] - s;
            if (dist <= v * v / (2.0 * driver.brake_decel) + 2.0) mode = DriveMode::Brake;
          }
          const double target = driver.cruise_speed + wobble_at(t);
          a_cmd = std::clamp(kp * (target - v), -driver.brake_decel, driver.launch_accel);
          break;
        }
        case DriveMode::Brake: {
          // Constant-deceleration guidance onto the stop point.
          const double dist = driver.stop_positions_m[next_stop] - s;
          if (v < 0.05 || dist < 0.3) {
            v = 0.0;
            a_cmd = 0.0;
            mode = DriveMode::Dwell;
            mode_until = t + driver.stop_duration_s;
            ++next_stop;
          } else {
            a_cmd = std::clamp(-v * v / (2.0 * dist), -1.8 * driver.brake_decel, 0.0);
          }
          break;
        }
      }
      v = std::max(0.0, v + a_cmd * dt);
      s += v * dt;
      t_arr.push_back(t);
      v_arr.push_back(v);
      s_arr.push_back(s);
      a_cmd_arr.push_back(a_cmd);
      if (s >= route_end + 3.0) break;
      t += dt;
    }
  }
  const std::size_t n = t_arr.size();

  // --- vehicle orientation ---
  std::vector<double> pitch_deg(n), yaw_rad(n);
  std::vector<double> a_smooth(n, 0.0);
  {
    const double alpha = dt / 0.3;  // body-pitch response time
    double a_state = 0.0;
    double psi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a_state += alpha * (a_cmd_arr[i] - a_state);
      a_smooth[i] = a_state;
      const double s = s_arr[i];
      const double road = world.grade_at(std::min(s, route_end));
      const double base =
          lot_pitch_deg + (road - lot_pitch_deg) * smoothstep01(s / blend_m);
      pitch_deg[i] = base + noise.body_pitch_gain_deg * a_state;
      if (i > 0) psi += yaw_rate_at(s) * dt;
      yaw_rad[i] = psi;
    }
  }

  // --- sensor emission ---
  SynthRng accel_rng(mix_seed(seed, 0xacce));
  SynthRng gyro_rng(mix_seed(seed, 0x6670));
  SynthRng dyn_rng(mix_seed(seed, 0xd7a0));

  SimulatedTrip out;
  out.trace.trip_id = trip_id;
  out.trace.phone_id = "phone-" + trip_id;
  out.trace.vehicle_id = "vehicle-" + trip_id;
  out.trace.stationary_window = {1.0, driver.stationary_s - 1.0};
  out.trace.samples.resize(n);

  const Mat3& mount = noise.mount_rotation;
  const Mat3 mount_t = mount.transpose();

  Vec3 prev_vel_world = Vec3::Zero();
  double prev_pitch = pitch_deg[0], prev_yaw = yaw_rad[0];
  double dyn_state = 0.0;
  const double dyn_alpha = 0.005;  // ~1 s correlation for the dynamics error

  for (std::size_t i = 0; i < n; ++i) {
    const double theta = deg2rad(pitch_deg[i]);
    const double psi = yaw_rad[i];
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cp = std::cos(psi), sp = std::sin(psi);

    const Vec3 fwd(cp * ct, sp * ct, st);
    const Vec3 up(-cp * st, -sp * st, ct);
    const Vec3 right = fwd.cross(up);

    // Body rates; backward differences keep integration exactly consistent.
    const double dpitch = i == 0 ? 0.0 : deg2rad(pitch_deg[i] - prev_pitch) / dt;
    const double dyaw = i == 0 ? 0.0 : (yaw_rad[i] - prev_yaw) / dt;
    prev_pitch = pitch_deg[i];
    prev_yaw = yaw_rad[i];
    Vec3 omega_body(dpitch + dyaw * 0.0, dyaw * st, dyaw * ct);

    const Vec3 vel_world = v_arr[i] * fwd;
    const Vec3 accel_world = i == 0 ? Vec3::Zero() : Vec3((vel_world - prev_vel_world) / dt);
    prev_vel_world = vel_world;
    const Vec3 specific_world = accel_world + Vec3(0.0, 0.0, kGravity);
    Vec3 f_body(right.dot(specific_world), fwd.dot(specific_world), up.dot(specific_world));

    // Dynamics-correlated accelerometer error along the forward axis.
    if (noise.accel_dynamics_gain > 0.0) {
      dyn_state = 0.995 * dyn_state + 0.1 * dyn_rng.normal(1.0);
      const double jerk = i == 0 ? 0.0 : (a_cmd_arr[i] - a_cmd_arr[i - 1]) / dt;
      f_body.y() += noise.accel_dynamics_gain *
                    (std::abs(a_smooth[i]) + 0.3 * std::min(std::abs(jerk), 3.0)) * dyn_state;
    }

    Vec3 gyro_body = omega_body;
    gyro_body.x() += deg2rad(gyro_bias_at(s_arr[i]));

    Vec3 accel_phone = mount_t * f_body;
    Vec3 gyro_phone = mount_t * gyro_body;
    if (noise.accel_noise_sigma > 0.0) {
      for (int k = 0; k < 3; ++k) accel_phone[k] += accel_rng.normal(noise.accel_noise_sigma);
    }
    if (noise.gyro_noise_sigma_dps > 0.0) {
      for (int k = 0; k < 3; ++k) {
        gyro_phone[k] += deg2rad(gyro_rng.normal(noise.gyro_noise_sigma_dps));
      }
    }

    out.trace.samples[i] = {t_arr[i], accel_phone, gyro_phone};
  }

  // --- speed streams (deadband at rest keeps declared stationarity honest) ---
  SynthRng obd_rng(mix_seed(seed, 0x0bd5));
  SynthRng gps_rng(mix_seed(seed, 0x6754));
  auto emit_speed = [&](double rate_hz, double sigma, SynthRng& rng) {
    std::vector<SpeedSample> samples;
    const double step = 1.0 / rate_hz;
    for (double ts = 0.0; ts <= t_arr.back(); ts += step) {
      const auto idx = std::min<std::size_t>(n - 1, static_cast<std::size_t>(ts / dt + 0.5));
      double v = v_arr[idx];
      v = v < 0.05 ? 0.0 : std::max(0.0, v + rng.normal(sigma));
      samples.push_back({ts + noise.sync_lag_s, v});
    }
    return samples;
  };
  out.trace.obd_speed = emit_speed(10.0, noise.obd_noise_sigma, obd_rng);
  out.trace.gps_speed = emit_speed(1.0, noise.gps_noise_sigma, gps_rng);

  // --- truth record ---
  out.truth.t = std::move(t_arr);
  out.truth.s = std::move(s_arr);
  out.truth.v = std::move(v_arr);
  out.truth.pitch_deg = std::move(pitch_deg);
  out.truth.r_pc = mount_t;
  out.truth.expected_anchor_offset_deg = noise.calib_offset_deg;
  out.truth.sync_lag_s = noise.sync_lag_s;
  if (noise.gyro_bias_per_segment_dps) {
    out.truth.gyro_bias_dps_per_segment = *noise.gyro_bias_per_segment_dps;
  } else {
    out.truth.gyro_bias_dps_per_segment.assign(world.route.segments.size(),
                                               noise.gyro_bias_dps);
  }
  return out;
}

// ---------------------------------------------------------------------------
// WorldSpec JSON

WorldSpec WorldSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open world spec '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("world spec '" + path + "': " + e.what());
  }
  WorldSpec spec;
  spec.seed = j.value("seed", 0ULL);
  spec.segment_lengths_m = j.at("segment_lengths_m").get<std::vector<double>>();
  spec.elevation_spacing_m = j.value("elevation_spacing_m", 30.0);
  spec.truth_resolution_m = j.value("truth_resolution_m", 0.1);
  spec.lead_in_m = j.value("lead_in_m", 150.0);
  if (j.contains("grade")) {
    const auto& g = j["grade"];
    const std::string kind = g.value("kind", "sine_mix");
    if (kind == "sine_mix") {
      spec.grade.kind = GradeShape::Kind::SineMix;
      for (const auto& c : g.value("components", json::array())) {
        spec.grade.components.push_back({c.at("amplitude_deg").get<double>(),
                                         c.at("wavelength_m").get<double>(),
                                         c.value("phase_rad", 0.0)});
      }
    } else if (kind == "piecewise") {
      spec.grade.kind = GradeShape::Kind::Piecewise;
      spec.grade.knot_s_m = g.at("knot_s_m").get<std::vector<double>>();
      spec.grade.knot_grade_deg = g.at("knot_grade_deg").get<std::vector<double>>();
    } else {
      throw ParseError("world spec '" + path + "': unknown grade kind '" + kind + "'");
    }
  } else {
    spec.grade = default_world_spec(spec.seed).grade;
  }
  for (const auto& c : j.value("corruption", json::array())) {
    CorruptionRegion r;
    r.start_m = c.at("start_m").get<double>();
    r.end_m = c.at("end_m").get<double>();
    r.depth_m = c.value("depth_m", -10.0);
    r.roughness_m = c.value("roughness_m", 2.5);
    spec.corruption.push_back(r);
  }
  return spec;
}

void WorldSpec::to_json_file(const std::string& path) const {
  json j;
  j["seed"] = seed;
  j["segment_lengths_m"] = segment_lengths_m;
  j["elevation_spacing_m"] = elevation_spacing_m;
  j["truth_resolution_m"] = truth_resolution_m;
  j["lead_in_m"] = lead_in_m;
  json g;
  if (grade.kind == GradeShape::Kind::SineMix) {
    g["kind"] = "sine_mix";
    json comps = json::array();
    for (const auto& c : grade.components) {
      comps.push_back({{"amplitude_deg", c.amplitude_deg},
                       {"wavelength_m", c.wavelength_m},
                       {"phase_rad", c.phase_rad}});
    }
    g["components"] = comps;
  } else {
    g["kind"] = "piecewise";
    g["knot_s_m"] = grade.knot_s_m;
    g["knot_grade_deg"] = grade.knot_grade_deg;
  }
  j["grade"] = g;
  json corr = json::array();
  for (const auto& c : corruption) {
    corr.push_back({{"start_m", c.start_m},
                    {"end_m", c.end_m},
                    {"depth_m", c.depth_m},
                    {"roughness_m", c.roughness_m}});
  }
  j["corruption"] = corr;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write world spec '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace roadgrade
