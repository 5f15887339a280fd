#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "roadgrade/aggregate.hpp"
#include "roadgrade/elevation.hpp"
#include "roadgrade/eval.hpp"
#include "roadgrade/pipeline.hpp"
#include "roadgrade/preprocess.hpp"
#include "roadgrade/synth.hpp"

namespace py = pybind11;
using namespace roadgrade;

namespace {

GradeProfile profile_from_pairs(const std::vector<double>& distance,
                                const std::vector<double>& grade) {
  if (distance.size() != grade.size()) {
    throw std::invalid_argument("distance and grade must have the same length");
  }
  GradeProfile p;
  p.segment_id = "py";
  p.distance_m = distance;
  p.grade_deg = grade;
  if (p.size() >= 2) p.resolution_m = p.distance_m[1] - p.distance_m[0];
  return p;
}

py::dict report_dict(const ErrorReport& r) {
  py::dict d;
  d["mean_deg"] = r.mean;
  d["p50_deg"] = r.p50;
  d["p90_deg"] = r.p90;
  d["points"] = r.size();
  return d;
}

PipelineConfig config_from_kwargs(const py::kwargs& kw) {
  PipelineConfig c;
  for (auto item : kw) {
    const auto key = item.first.cast<std::string>();
    if (key == "trace_dir") c.trace_dir = item.second.cast<std::string>();
    else if (key == "route") c.route_path = item.second.cast<std::string>();
    else if (key == "elevation") c.elevation_path = item.second.cast<std::string>();
    else if (key == "truth") c.truth_path = item.second.cast<std::string>();
    else if (key == "out") c.out_dir = item.second.cast<std::string>();
    else if (key == "acc_thresh") c.thresholds.acc_thresh = item.second.cast<double>();
    else if (key == "jerk_thresh") c.thresholds.jerk_thresh = item.second.cast<double>();
    else if (key == "bin_acc") c.bin_acc_m = item.second.cast<double>();
    else if (key == "bin_corr_gyr") c.bin_corr_gyr_m = item.second.cast<double>();
    else if (key == "s_thresh") c.s_thresh = item.second.cast<double>();
    else if (key == "d_sim") c.d_sim_m = item.second.cast<double>();
    else if (key == "cutoff_hz") c.cutoff_hz = item.second.cast<double>();
    else if (key == "agg") c.agg = agg_method_from_string(item.second.cast<std::string>());
    else if (key == "speed_source") {
      const auto s = item.second.cast<std::string>();
      c.speed_source = s == "gps" ? SpeedSource::Gps : SpeedSource::Obd;
    } else if (key == "offset_correction") {
      c.offset_correction = item.second.cast<bool>();
    } else if (key == "seed") {
      c.seed = item.second.cast<std::uint64_t>();
    } else {
      throw std::invalid_argument("unknown option '" + key + "'");
    }
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "road grade estimation from smartphone-style sensor traces";

  m.def(
      "butterworth_lowpass",
      [](const std::vector<double>& signal, double cutoff_hz, double sample_rate_hz) {
        return butterworth_lowpass(signal, {2, cutoff_hz, sample_rate_hz});
      },
      py::arg("signal"), py::arg("cutoff_hz"), py::arg("sample_rate_hz") = kImuRateHz,
      "Zero-phase second-order Butterworth low-pass.");

  m.def(
      "shape_similarity",
      [](const std::vector<double>& p, const std::vector<double>& q) {
        return shape_similarity(p, q);
      },
      py::arg("p"), py::arg("q"), "Offset-blind curve similarity in [0, 1].");

  m.def(
      "grade_from_elevation",
      [](const std::vector<double>& distance_m, const std::vector<double>& elevation_m) {
        ElevationProfile prof;
        prof.distance_m = distance_m;
        prof.elevation_m = elevation_m;
        const auto g = grade_from_elevation(prof);
        return py::make_tuple(g.midpoint_m, g.grade_deg);
      },
      py::arg("distance_m"), py::arg("elevation_m"),
      "Grade (degrees) between consecutive elevation samples; returns (midpoints, grades).");

  m.def(
      "crh",
      [](const std::vector<std::pair<std::vector<int>, std::vector<double>>>& sources,
         double tol, int max_iter) {
        std::vector<SourceObservations> obs;
        for (std::size_t i = 0; i < sources.size(); ++i) {
          obs.push_back({"source-" + std::to_string(i), sources[i].first, sources[i].second});
        }
        const auto res = crh(obs, {tol, max_iter});
        py::dict d;
        d["bins"] = res.bins;
        d["truths"] = res.truths;
        d["weights"] = res.weights;
        d["iterations"] = res.iterations;
        return d;
      },
      py::arg("sources"), py::arg("tol") = 1e-6, py::arg("max_iter") = 100,
      "Truth discovery over (bins, values) observation lists.");

  m.def(
      "absolute_error",
      [](const std::vector<double>& est_d, const std::vector<double>& est_g,
         const std::vector<double>& tru_d, const std::vector<double>& tru_g) {
        return report_dict(
            absolute_error(profile_from_pairs(est_d, est_g), profile_from_pairs(tru_d, tru_g)));
      },
      py::arg("est_distance_m"), py::arg("est_grade_deg"), py::arg("truth_distance_m"),
      py::arg("truth_grade_deg"));

  m.def(
      "gradient_error",
      [](const std::vector<double>& est_d, const std::vector<double>& est_g,
         const std::vector<double>& tru_d, const std::vector<double>& tru_g, double step_m) {
        return report_dict(gradient_error(profile_from_pairs(est_d, est_g),
                                          profile_from_pairs(tru_d, tru_g), step_m));
      },
      py::arg("est_distance_m"), py::arg("est_grade_deg"), py::arg("truth_distance_m"),
      py::arg("truth_grade_deg"), py::arg("step_m") = 1.0);

  m.def(
      "synth_dataset",
      [](const std::string& out_dir, int trips, std::uint64_t seed) {
        const WorldSpec spec = default_world_spec(seed);
        const World world = generate_world(spec);
        fs::create_directories(out_dir);
        const fs::path out(out_dir);
        spec.to_json_file((out / "world.json").string());
        save_route(world.route, out / "route.json");
        save_elevation(world.elevation, out / "elevation.csv");
        save_grade_csv(world.true_grade, out / "truth.csv");
        const auto driver = DriverProfile::standard(world.route);
        for (int i = 0; i < trips; ++i) {
          const auto trip_seed = mix_seed(seed, 1000 + static_cast<std::uint64_t>(i));
          const auto noise = draw_noise_spec(trip_seed, world.route.segments.size());
          char name[32];
          std::snprintf(name, sizeof(name), "trip-%02d", i + 1);
          const auto sim = simulate_trip(world, driver, noise, name, trip_seed);
          save_trace(sim.trace, out / (std::string(name) + ".csv"));
        }
      },
      py::arg("out_dir"), py::arg("trips") = 3, py::arg("seed") = 1,
      "Write a synthetic world (route, elevation, truth) and simulated traces.");

  m.def(
      "run_pipeline",
      [](const py::kwargs& kw) {
        PipelineConfig config = config_from_kwargs(kw);
        if (config.trace_dir.empty()) {
          throw std::invalid_argument("run_pipeline: trace_dir is required");
        }
        const auto res = run_pipeline_files(config);
        py::dict d;
        d["trips"] = res.trips.size();
        d["regions"] = res.regions.size();
        d["region_coverage_fraction"] = res.region_coverage_fraction;
        d["final_profile_points"] = res.final_route_profile.size();
        d["warnings"] = res.warnings;
        if (res.final_ae) d["final_ae"] = report_dict(*res.final_ae);
        if (res.final_ge) d["final_ge"] = report_dict(*res.final_ge);
        return d;
      },
      "Full pipeline over a trace directory; accepts the CLI flags as keywords.");
}
