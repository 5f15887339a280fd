#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roadgrade/pipeline.hpp"
#include "roadgrade/synth.hpp"

namespace rg = roadgrade;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string trace_dir, route, elevation, truth, out;
  double acc_thresh = -1.0, jerk_thresh = -1.0, s_thresh = -1.0;
  double bin_acc = -1.0, bin_corr_gyr = -1.0, cutoff_hz = -1.0, d_sim = -1.0;
  std::string agg, speed_source;
  bool no_offset_correction = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config; flags override its fields");
  cmd->add_option("--traces", f.trace_dir, "directory of trace CSV/manifest pairs");
  cmd->add_option("--route", f.route, "route JSON file");
  cmd->add_option("--elevation", f.elevation, "elevation CSV file");
  cmd->add_option("--truth", f.truth, "ground-truth grade CSV");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--acc-thresh", f.acc_thresh, "anchor acceleration threshold (m/s^2)");
  cmd->add_option("--jerk-thresh", f.jerk_thresh, "anchor jerk threshold (m/s^3)");
  cmd->add_option("--s-thresh", f.s_thresh, "similarity threshold [0,1]");
  cmd->add_option("--bin-acc", f.bin_acc, "anchor bin width (m)");
  cmd->add_option("--bin-corr-gyr", f.bin_corr_gyr, "profile bin width (m)");
  cmd->add_option("--d-sim", f.d_sim, "similarity window length (m)");
  cmd->add_option("--cutoff-hz", f.cutoff_hz, "low-pass cutoff (Hz)");
  cmd->add_option("--agg", f.agg, "aggregation method: crh|mean");
  cmd->add_option("--speed-source", f.speed_source, "speed stream: obd|gps");
  cmd->add_flag("--no-offset-correction", f.no_offset_correction,
                "skip elevation-based offset correction");
  cmd->add_option("--seed", f.seed, "random seed")->each([&f](const std::string&) {
    f.seed_set = true;
  });
}

rg::PipelineConfig make_config(const CommonFlags& f) {
  rg::PipelineConfig c;
  if (!f.config_path.empty()) c = rg::PipelineConfig::from_json_file(f.config_path);
  if (!f.trace_dir.empty()) c.trace_dir = f.trace_dir;
  if (!f.route.empty()) c.route_path = f.route;
  if (!f.elevation.empty()) c.elevation_path = f.elevation;
  if (!f.truth.empty()) c.truth_path = f.truth;
  if (!f.out.empty()) c.out_dir = f.out;
  if (f.acc_thresh > 0) c.thresholds.acc_thresh = f.acc_thresh;
  if (f.jerk_thresh > 0) c.thresholds.jerk_thresh = f.jerk_thresh;
  if (f.s_thresh >= 0) c.s_thresh = f.s_thresh;
  if (f.bin_acc > 0) c.bin_acc_m = f.bin_acc;
  if (f.bin_corr_gyr > 0) c.bin_corr_gyr_m = f.bin_corr_gyr;
  if (f.d_sim > 0) c.d_sim_m = f.d_sim;
  if (f.cutoff_hz > 0) c.cutoff_hz = f.cutoff_hz;
  if (!f.agg.empty()) c.agg = rg::agg_method_from_string(f.agg);
  if (!f.speed_source.empty()) {
    if (f.speed_source == "obd") {
      c.speed_source = rg::SpeedSource::Obd;
    } else if (f.speed_source == "gps") {
      c.speed_source = rg::SpeedSource::Gps;
    } else {
      throw CLI::ValidationError("--speed-source", "expected obd|gps");
    }
  }
  if (f.no_offset_correction) c.offset_correction = false;
  if (f.seed_set) c.seed = f.seed;
  return c;
}

void print_report(const char* label, const rg::ErrorReport& r) {
  std::printf("%-10s mean %.4f°  p50 %.4f°  p90 %.4f°  (%zu points)\n", label, r.mean, r.p50,
              r.p90, r.size());
}

int cmd_synth(const CommonFlags& flags, const std::string& world_path, int trips) {
  const auto config = make_config(flags);
  if (config.out_dir.empty()) throw CLI::ValidationError("--out", "output directory required");
  rg::fs::create_directories(config.out_dir);
  const rg::fs::path out(config.out_dir);

  rg::WorldSpec spec = world_path.empty() ? rg::default_world_spec(config.seed)
                                          : rg::WorldSpec::from_json_file(world_path);
  if (flags.seed_set) spec.seed = config.seed;
  const rg::World world = rg::generate_world(spec);

  spec.to_json_file((out / "world.json").string());
  rg::save_route(world.route, out / "route.json");
  rg::save_elevation(world.elevation, out / "elevation.csv");
  rg::save_grade_csv(world.true_grade, out / "truth.csv");

  const auto driver = rg::DriverProfile::standard(world.route);
  for (int i = 0; i < trips; ++i) {
    const auto trip_seed = rg::mix_seed(spec.seed, 1000 + static_cast<std::uint64_t>(i));
    const auto noise = rg::draw_noise_spec(trip_seed, world.route.segments.size());
    char name[32];
    std::snprintf(name, sizeof(name), "trip-%02d", i + 1);
    const auto sim = rg::simulate_trip(world, driver, noise, name, trip_seed);
    rg::save_trace(sim.trace, out / (std::string(name) + ".csv"));
  }
  std::printf("synth: %d trips over %.0f m written to %s\n", trips, world.route_length(),
              config.out_dir.c_str());
  return 0;
}

int cmd_preprocess(const CommonFlags& flags) {
  const auto config = make_config(flags);
  if (config.out_dir.empty()) throw CLI::ValidationError("--out", "output directory required");
  rg::fs::create_directories(config.out_dir);
  const rg::Route route = rg::load_route(config.route_path);

  rg::PreprocessOptions popts;
  popts.filter = config.filter();
  popts.speed_source = config.speed_source;

  for (const auto& path : rg::list_trace_files(config.trace_dir)) {
    const auto trace = rg::load_trace(path);
    const auto trip = rg::build_aligned_trip(trace, popts);

    const rg::fs::path out_csv =
        rg::fs::path(config.out_dir) / ("aligned_" + trace.trip_id + ".csv");
    std::ofstream out(out_csv);
    out << "t,ax,ay,az,gx,gy,gz,v,s\n";
    char buf[256];
    for (std::size_t i = 0; i < trip.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", trip.t[i],
                    trip.accel[i].x(), trip.accel[i].y(), trip.accel[i].z(), trip.gyro[i].x(),
                    trip.gyro[i].y(), trip.gyro[i].z(), trip.v[i], trip.s[i]);
      out << buf;
    }

    json info;
    info["trip_id"] = trace.trip_id;
    info["sync_lag_s"] = trip.sync.lag_s;
    info["sync_peak_corr"] = trip.sync.peak_corr;
    info["sync_reliable"] = trip.sync.reliable;
    try {
      const auto z_u = rg::estimate_z_u(trip);
      const auto event = rg::detect_acceleration_event(trip, z_u, {.filter = popts.filter});
      const auto r = rg::estimate_R_PC(trip, z_u, event);
      info["z_u"] = {z_u.x(), z_u.y(), z_u.z()};
      info["event_window_s"] = {trip.t[event.begin], trip.t[event.end - 1]};
      const rg::Mat3 m = r.matrix();
      info["r_pc"] = json::array();
      for (int row = 0; row < 3; ++row) {
        info["r_pc"].push_back({m(row, 0), m(row, 1), m(row, 2)});
      }
    } catch (const rg::ValidationError& e) {
      info["alignment_error"] = e.what();
    }
    std::ofstream jout(rg::fs::path(config.out_dir) / ("align_" + trace.trip_id + ".json"));
    jout << info.dump(2) << "\n";
    std::printf("preprocess: %s (%zu ticks, lag %.3f s)\n", trace.trip_id.c_str(), trip.size(),
                trip.sync.lag_s);
  }
  return 0;
}

int cmd_run(const CommonFlags& flags, bool aggregate_stage) {
  auto config = make_config(flags);
  const auto result = rg::run_pipeline_files(config);
  for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("%zu trips, %zu similarity regions (%.1f%% of route)\n", result.trips.size(),
              result.regions.size(), 100.0 * result.region_coverage_fraction);
  if (!aggregate_stage) {
    std::size_t total = 0;
    for (const auto& t : result.trips) total += t.anchors.size();
    std::printf("per-trip outputs: %zu anchor snapshots across %zu trips\n", total,
                result.trips.size());
  } else {
    std::printf("aggregated anchors: %zu; final profile: %zu points\n",
                result.aggregated_anchors.size(), result.final_route_profile.size());
  }
  if (result.final_ae) print_report("AE", *result.final_ae);
  if (result.final_ge) print_report("GE", *result.final_ge);
  return 0;
}

int cmd_evaluate(const std::string& est_path, const std::string& truth_path,
                 const std::string& out_dir, double ge_step) {
  const auto est = rg::load_grade_csv(est_path);
  const auto truth = rg::load_grade_csv(truth_path);
  const auto ae = rg::absolute_error(est, truth);
  const auto ge = rg::gradient_error(est, truth, ge_step);
  print_report("AE", ae);
  print_report("GE", ge);
  if (!out_dir.empty()) {
    rg::fs::create_directories(out_dir);
    json report;
    report["ae"] = {{"mean_deg", ae.mean}, {"p50_deg", ae.p50}, {"p90_deg", ae.p90}};
    report["ge"] = {{"mean_deg", ge.mean}, {"p50_deg", ge.p50}, {"p90_deg", ge.p90}};
    std::ofstream out(rg::fs::path(out_dir) / "evaluation.json");
    out << report.dump(2) << "\n";
  }
  return 0;
}

int cmd_sweep(const CommonFlags& flags, std::vector<std::string>& pair_specs) {
  auto config = make_config(flags);
  std::vector<std::pair<double, double>> pairs;
  if (pair_specs.empty()) {
    pairs = {{0.5, 0.1}, {0.7, 0.15}, {0.9, 0.2}, {1.3, 0.3}, {2.0, 0.5}};
  } else {
    for (const auto& s : pair_specs) {
      const auto colon = s.find(':');
      if (colon == std::string::npos) {
        throw CLI::ValidationError("--pair", "expected acc:jerk, e.g. 0.7:0.15");
      }
      pairs.emplace_back(std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1)));
    }
  }

  rg::PipelineInputs inputs;
  inputs.route = rg::load_route(config.route_path);
  inputs.elevation = rg::load_elevation(config.elevation_path);
  inputs.truth = rg::load_grade_csv(config.truth_path);
  std::vector<rg::PreparedTrip> prepared;
  for (const auto& path : rg::list_trace_files(config.trace_dir)) {
    prepared.push_back(rg::prepare_trip(rg::load_trace(path), inputs.route, config));
  }

  const auto rows = rg::threshold_sweep(prepared, inputs, config, pairs);
  std::printf("%-12s %-12s %-18s %-16s %-16s\n", "acc_thresh", "jerk_thresh", "density/500m",
              "anchor_mean_ae", "final_mean_ae");
  for (const auto& r : rows) {
    std::printf("%-12.2f %-12.2f %-18.2f %-16.4f %-16.4f\n", r.acc_thresh, r.jerk_thresh,
                r.anchor_density_per_500m, r.anchor_mean_ae, r.final_mean_ae);
  }
  if (!config.out_dir.empty()) {
    rg::fs::create_directories(config.out_dir);
    std::ofstream out(rg::fs::path(config.out_dir) / "sweep.csv");
    out << "acc_thresh,jerk_thresh,density_per_500m,anchor_mean_ae,final_mean_ae\n";
    for (const auto& r : rows) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g\n", r.acc_thresh, r.jerk_thresh,
                    r.anchor_density_per_500m, r.anchor_mean_ae, r.final_mean_ae);
      out << buf;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"road grade estimation from smartphone-style sensor traces"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* synth = app.add_subcommand("synth", "generate a synthetic world and sensor traces");
  std::string world_path;
  int trips = 15;
  synth->add_option("--world", world_path, "world spec JSON (default: built-in 9 km world)");
  synth->add_option("--trips", trips, "number of trips to simulate");
  add_common_flags(synth, flags);

  auto* preprocess =
      app.add_subcommand("preprocess", "filter/synchronize/resample traces; write aligned CSVs");
  add_common_flags(preprocess, flags);

  auto* estimate =
      app.add_subcommand("estimate", "per-trip grade estimation (anchors, offsets, profiles)");
  add_common_flags(estimate, flags);

  auto* aggregate =
      app.add_subcommand("aggregate", "full pipeline incl. cross-trip aggregation");
  add_common_flags(aggregate, flags);

  auto* evaluate = app.add_subcommand("evaluate", "compare a profile CSV against ground truth");
  std::string est_path, truth_path, eval_out;
  double ge_step = 1.0;
  evaluate->add_option("--est", est_path, "estimated profile CSV")->required();
  evaluate->add_option("--truth", truth_path, "ground-truth CSV")->required();
  evaluate->add_option("--out", eval_out, "directory for evaluation.json");
  evaluate->add_option("--ge-step", ge_step, "gradient error step (m)");

  auto* sweep = app.add_subcommand("sweep", "anchor-threshold sweep");
  std::vector<std::string> pair_specs;
  sweep->add_option("--pair", pair_specs, "acc:jerk pair (repeatable)");
  add_common_flags(sweep, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(flags, world_path, trips);
    if (preprocess->parsed()) return cmd_preprocess(flags);
    if (estimate->parsed()) return cmd_run(flags, false);
    if (aggregate->parsed()) return cmd_run(flags, true);
    if (evaluate->parsed()) return cmd_evaluate(est_path, truth_path, eval_out, ge_step);
    if (sweep->parsed()) return cmd_sweep(flags, pair_specs);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
