#include "roadgrade/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <optional>

#include <nlohmann/json.hpp>

namespace roadgrade {

using nlohmann::json;

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
  PipelineConfig c;
  c.trace_dir = j.value("trace_dir", "");
  c.route_path = j.value("route", "");
  c.elevation_path = j.value("elevation", "");
  c.truth_path = j.value("truth", "");
  c.out_dir = j.value("out", "");
  c.thresholds.acc_thresh = j.value("acc_thresh", c.thresholds.acc_thresh);
  c.thresholds.jerk_thresh = j.value("jerk_thresh", c.thresholds.jerk_thresh);
  c.bin_acc_m = j.value("bin_acc", c.bin_acc_m);
  c.bin_corr_gyr_m = j.value("bin_corr_gyr", c.bin_corr_gyr_m);
  c.d_sim_m = j.value("d_sim", c.d_sim_m);
  c.s_thresh = j.value("s_thresh", c.s_thresh);
  c.cutoff_hz = j.value("cutoff_hz", c.cutoff_hz);
  if (j.contains("agg")) c.agg = agg_method_from_string(j["agg"].get<std::string>());
  if (j.contains("speed_source")) {
    const auto s = j["speed_source"].get<std::string>();
    if (s == "obd") {
      c.speed_source = SpeedSource::Obd;
    } else if (s == "gps") {
      c.speed_source = SpeedSource::Gps;
    } else {
      throw ParseError("config '" + path + "': bad speed_source '" + s + "'");
    }
  }
  c.offset_correction = j.value("offset_correction", true);
  c.seed = j.value("seed", 0ULL);
  return c;
}

PreparedTrip prepare_trip(const SensorTrace& trace, const Route& route,
                          const PipelineConfig& config) {
  PreprocessOptions popts;
  popts.filter = config.filter();
  popts.speed_source = config.speed_source;
  const AlignedTrip trip = build_aligned_trip(trace, popts);

  const Vec3 z_u = estimate_z_u(trip);
  EventDetectOptions eopts;
  eopts.filter = popts.filter;

  // Alignment happens at the first event that yields a valid forward
  // direction; later candidates are tried when one is degenerate.
  std::optional<RotationMatrix> r;
  std::size_t search_from = 0;
  std::string last_error = "no acceleration event";
  for (int attempt = 0; attempt < 8 && !r; ++attempt) {
    EventWindow event;
    try {
      event = detect_acceleration_event(trip, z_u, eopts, search_from);
    } catch (const ValidationError& e) {
      throw ValidationError("trip " + trace.trip_id + ": " + e.what() +
                            (attempt > 0 ? " (after rejecting " + std::to_string(attempt) +
                                               " candidate event(s): " + last_error + ")"
                                         : ""));
    }
    search_from = event.end;
    try {
      r = estimate_R_PC(trip, z_u, event);
    } catch (const ValidationError& e) {
      last_error = e.what();
    }
  }
  if (!r) {
    throw ValidationError("trip " + trace.trip_id + ": no valid alignment event (" + last_error +
                          ")");
  }
  const RotationMatrix r_pc = *r;

  PreparedTrip out;
  out.trip_id = trace.trip_id;
  out.sync = trip.sync;

  // Whole-route gyro series for elevation shape matching.
  {
    SegmentSlice whole;
    whole.segment_id = "route";
    whole.trip_id = trace.trip_id;
    whole.dt = trip.dt;
    whole.accel = trip.accel;
    whole.gyro = trip.gyro;
    whole.v = trip.v;
    whole.s = trip.s;
    out.gyro_route = pitch_gyro(whole, r_pc, 0.0);
  }

  const auto min_ticks = static_cast<std::size_t>(1.0 / trip.dt);  // >= 1 s of data
  for (auto& slice : segment_slice(trip, route)) {
    if (slice.size() < min_ticks) continue;
    PreparedTrip::SegmentData seg;
    seg.segment_id = slice.segment_id;
    seg.route_offset_m = slice.route_offset_m;
    seg.length_m = slice.length_m;
    seg.dt = slice.dt;
    seg.partial = slice.partial;
    seg.gyro = pitch_gyro(slice, r_pc, 0.0);
    seg.a_lon = speed_derived_accel(slice.v, slice.dt, config.filter());
    const auto lon = longitudinal_accel(slice.v, slice.dt, config.filter());
    const auto omega_z = yaw_rate(slice, r_pc);
    const auto lat = lateral_accel(slice.v, omega_z);
    const auto gravity = estimate_gravity(slice, r_pc, lon, lat);
    seg.theta_acc = pitch_accel(gravity, slice);
    out.segments.push_back(std::move(seg));
  }
  return out;
}

namespace {

GradeProfile concat_route_profile(const Route& route,
                                  const std::vector<GradeProfile>& by_segment,
                                  double resolution_m) {
  GradeProfile out;
  out.segment_id = "route";
  out.resolution_m = resolution_m;
  std::map<std::string, double> offsets;
  for (const auto& seg : route.segments) offsets[seg.segment_id] = seg.route_offset_m;
  for (const auto& p : by_segment) {
    const double off = offsets.at(p.segment_id);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = p.distance_m[i] + off;
      if (!out.distance_m.empty() && d <= out.distance_m.back() + resolution_m / 2.0) continue;
      out.distance_m.push_back(d);
      out.grade_deg.push_back(p.grade_deg[i]);
    }
  }
  return out;
}

std::vector<RouteAnchor> to_route_anchors(const std::vector<AnchorSnapshot>& anchors,
                                          const Route& route) {
  std::map<std::string, double> offsets;
  for (const auto& seg : route.segments) offsets[seg.segment_id] = seg.route_offset_m;
  std::vector<RouteAnchor> out;
  out.reserve(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    out.push_back({offsets.at(anchors[i].segment_id) + anchors[i].bin_center_m,
                   anchors[i].grade_deg, i});
  }
  return out;
}

}  // namespace

PipelineResult estimate_and_aggregate(const std::vector<PreparedTrip>& prepared,
                                      const ElevationProfile& elevation, const Route& route,
                                      const PipelineConfig& config, const GradeProfile* truth) {
  PipelineResult res;
  res.route = route;

  const ElevationGrade elev_grade = grade_from_elevation(elevation);

  // Shared similarity regions from all trips' gyro shapes.
  {
    std::vector<PitchSeries> gyro_routes;
    gyro_routes.reserve(prepared.size());
    for (const auto& p : prepared) gyro_routes.push_back(p.gyro_route);
    RegionOptions ropts;
    ropts.d_sim_m = config.d_sim_m;
    ropts.s_thresh = config.s_thresh;
    res.regions = extract_regions(elev_grade, gyro_routes, ropts);
    double covered = 0.0;
    for (const auto& r : res.regions) covered += r.x_end - r.x_strt;
    const double len = route.length();
    res.region_coverage_fraction = len > 0.0 ? covered / len : 0.0;
  }

  // Per-trip anchors with offset correction.
  CorrectOptions copts;
  copts.resolution_m = config.bin_corr_gyr_m;
  for (const auto& trip : prepared) {
    TripOutput out;
    out.trip_id = trip.trip_id;

    std::vector<AnchorSnapshot> raw;
    for (const auto& seg : trip.segments) {
      const auto mask = stable_mask(seg.a_lon, seg.dt, config.thresholds);
      auto snaps = bin_anchors(seg.theta_acc, mask, config.bin_acc_m);
      raw.insert(raw.end(), snaps.begin(), snaps.end());
    }

    if (config.offset_correction && !res.regions.empty()) {
      const auto route_anchors = to_route_anchors(raw, route);
      out.regions = fill_region_offsets(route_anchors, res.regions, elev_grade);
      const auto corrected = apply_offsets(route_anchors, out.regions);
      out.anchors = raw;
      for (std::size_t i = 0; i < raw.size(); ++i) {
        out.anchors[i].grade_deg = corrected.corrected_grade_deg[i];
      }
      out.offset_corrected = corrected.corrected;
    } else {
      out.anchors = raw;
      out.offset_corrected = false;
    }
    if (!out.offset_corrected) {
      res.warnings.push_back("trip " + trip.trip_id + ": anchors not offset-corrected");
    }

    // Drift-correct each segment against the trip's own anchors.
    for (const auto& seg : trip.segments) {
      std::vector<AnchorSnapshot> seg_anchors;
      for (const auto& a : out.anchors) {
        if (a.segment_id == seg.segment_id) seg_anchors.push_back(a);
      }
      if (seg_anchors.size() < 2) {
        res.warnings.push_back("trip " + trip.trip_id + " segment " + seg.segment_id +
                               ": too few anchors for drift correction");
        continue;
      }
      const auto gyro = level_to_first_anchor(seg.gyro, seg_anchors);
      const auto fits = fit_drift_windows(gyro, seg_anchors, seg.length_m);
      out.profile_by_segment.push_back(correct_profile(gyro, fits, copts));
    }
    out.route_profile = concat_route_profile(route, out.profile_by_segment, copts.resolution_m);
    res.trips.push_back(std::move(out));
  }

  // Aggregate anchors per segment, then drift-correct every trip against the
  // aggregated anchors and aggregate the resulting profiles.
  for (const auto& seg : route.segments) {
    std::vector<std::vector<AnchorSnapshot>> per_trip;
    for (const auto& trip : res.trips) {
      std::vector<AnchorSnapshot> seg_anchors;
      for (const auto& a : trip.anchors) {
        if (a.segment_id == seg.segment_id) seg_anchors.push_back(a);
      }
      if (!seg_anchors.empty()) per_trip.push_back(std::move(seg_anchors));
    }
    if (per_trip.empty()) {
      res.warnings.push_back("segment " + seg.segment_id + ": no anchors from any trip");
      continue;
    }
    auto agg_anchors =
        aggregate_anchors(per_trip, config.bin_acc_m, seg.segment_id, config.agg);
    if (agg_anchors.size() < 2) {
      res.warnings.push_back("segment " + seg.segment_id + ": too few aggregated anchors");
      continue;
    }

    std::vector<GradeProfile> corrected;
    for (const auto& trip : prepared) {
      for (const auto& sd : trip.segments) {
        if (sd.segment_id != seg.segment_id) continue;
        const auto gyro = level_to_first_anchor(sd.gyro, agg_anchors);
        const auto fits = fit_drift_windows(gyro, agg_anchors, sd.length_m);
        corrected.push_back(correct_profile(gyro, fits, copts));
      }
    }
    res.aggregated_anchors.insert(res.aggregated_anchors.end(), agg_anchors.begin(),
                                  agg_anchors.end());
    if (!corrected.empty()) {
      auto final_profile = aggregate_profiles(corrected, config.bin_corr_gyr_m, config.agg);
      final_profile.segment_id = seg.segment_id;
      res.final_by_segment.push_back(std::move(final_profile));
    }
  }
  res.final_route_profile =
      concat_route_profile(route, res.final_by_segment, config.bin_corr_gyr_m);

  if (truth != nullptr) {
    res.final_ae = absolute_error(res.final_route_profile, *truth);
    res.final_ge = gradient_error(res.final_route_profile, *truth);
    for (const auto& trip : res.trips) {
      if (!trip.route_profile.empty()) {
        res.trip_ae.push_back(absolute_error(trip.route_profile, *truth));
      } else {
        res.trip_ae.emplace_back();
      }
    }
  }
  return res;
}

PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config) {
  inputs.route.validate();
  std::vector<PreparedTrip> prepared;
  prepared.reserve(inputs.traces.size());
  std::vector<std::string> skipped;
  for (const auto& trace : inputs.traces) {
    if (const auto gaps = trace.count_gaps(); gaps > 0) {
      skipped.push_back("trip " + trace.trip_id + ": " + std::to_string(gaps) +
                        " sampling gap(s) longer than 3 nominal periods");
    }
    try {
      prepared.push_back(prepare_trip(trace, inputs.route, config));
    } catch (const ValidationError& e) {
      skipped.push_back("trip " + trace.trip_id + " skipped: " + e.what());
    }
  }
  if (prepared.empty()) throw ValidationError("run_pipeline: no usable trips");
  auto res = estimate_and_aggregate(prepared, inputs.elevation, inputs.route, config,
                                    inputs.truth ? &*inputs.truth : nullptr);
  res.warnings.insert(res.warnings.begin(), skipped.begin(), skipped.end());
  return res;
}

namespace {

void write_csv_line(std::ofstream& out, std::initializer_list<double> vals) {
  char buf[48];
  bool first = true;
  for (double v : vals) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    if (!first) out << ',';
    out << buf;
    first = false;
  }
  out << '\n';
}

void write_anchors_csv(const std::vector<AnchorSnapshot>& anchors, bool corrected,
                       const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << "segment_id,trip_id,bin_center_m,grade_deg,sample_count,offset_corrected\n";
  for (const auto& a : anchors) {
    out << a.segment_id << ',' << a.trip_id << ',';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%d,%d\n", a.bin_center_m, a.grade_deg,
                  a.sample_count, corrected ? 1 : 0);
    out << buf;
  }
}

// Minimal static polyline chart; all plot data also lands in CSV.
void write_svg_lines(const fs::path& path, const std::vector<const GradeProfile*>& profiles,
                     const std::vector<std::string>& labels) {
  const int w = 960, h = 320, margin = 40;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto* p : profiles) {
    if (p->empty()) continue;
    x0 = std::min(x0, p->distance_m.front());
    x1 = std::max(x1, p->distance_m.back());
    for (double g : p->grade_deg) {
      y0 = std::min(y0, g);
      y1 = std::max(y1, g);
    }
  }
  if (!(x1 > x0)) return;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  auto sx = [&](double x) { return margin + (x - x0) / (x1 - x0) * (w - 2 * margin); };
  auto sy = [&](double y) { return h - margin - (y - y0) / (y1 - y0) * (h - 2 * margin); };
  out << "<line x1='" << margin << "' y1='" << h - margin << "' x2='" << w - margin << "' y2='"
      << h - margin << "' stroke='black'/>\n";
  out << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
      << h - margin << "' stroke='black'/>\n";
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    const auto* p = profiles[k];
    // Thin to at most ~2000 points per polyline.
    const std::size_t stride = std::max<std::size_t>(1, p->size() / 2000);
    out << "<polyline fill='none' stroke='" << colors[k % 4] << "' stroke-width='1' points='";
    for (std::size_t i = 0; i < p->size(); i += stride) {
      out << sx(p->distance_m[i]) << ',' << sy(p->grade_deg[i]) << ' ';
    }
    out << "'/>\n";
    out << "<text x='" << w - margin - 150 << "' y='" << margin + 16 * (k + 1) << "' fill='"
        << colors[k % 4] << "' font-size='13'>" << labels[k] << "</text>\n";
  }
  out << "<text x='" << w / 2 << "' y='" << h - 8
      << "' font-size='12' text-anchor='middle'>route distance (m)</text>\n";
  out << "<text x='12' y='" << h / 2 << "' font-size='12' transform='rotate(-90 12 " << h / 2
      << ")' text-anchor='middle'>grade (deg)</text>\n";
  out << "</svg>\n";
}

void write_error_cdf(const ErrorReport& report, const fs::path& csv_path,
                     const fs::path& svg_path) {
  std::vector<double> sorted = report.error_deg;
  std::sort(sorted.begin(), sorted.end());
  {
    std::ofstream out(csv_path);
    if (!out) throw ParseError("cannot write '" + csv_path.string() + "'");
    out << "error_deg,cdf\n";
    const std::size_t stride = std::max<std::size_t>(1, sorted.size() / 4000);
    for (std::size_t i = 0; i < sorted.size(); i += stride) {
      write_csv_line(out, {sorted[i], static_cast<double>(i + 1) /
                                          static_cast<double>(sorted.size())});
    }
  }
  GradeProfile cdf;  // reuse the polyline writer: x = error, y = cdf
  cdf.segment_id = "cdf";
  const std::size_t stride = std::max<std::size_t>(1, sorted.size() / 2000);
  for (std::size_t i = 0; i < sorted.size(); i += stride) {
    cdf.distance_m.push_back(sorted[i]);
    cdf.grade_deg.push_back(static_cast<double>(i + 1) / static_cast<double>(sorted.size()));
  }
  // Guard against duplicate abscissae breaking nothing here; SVG only.
  for (std::size_t i = 1; i < cdf.distance_m.size(); ++i) {
    if (cdf.distance_m[i] <= cdf.distance_m[i - 1]) {
      cdf.distance_m[i] = cdf.distance_m[i - 1] + 1e-9;
    }
  }
  write_svg_lines(svg_path, {&cdf}, {"error CDF"});
}

json report_json(const ErrorReport& r) {
  return {{"mean_deg", r.mean}, {"p50_deg", r.p50}, {"p90_deg", r.p90}, {"points", r.size()}};
}

}  // namespace

void write_artifacts(const PipelineResult& result, const PipelineConfig& config) {
  if (config.out_dir.empty()) return;
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);

  save_grade_csv(result.final_route_profile, out_dir / "final_profile.csv");
  write_anchors_csv(result.aggregated_anchors, true, out_dir / "agg_anchors.csv");

  for (const auto& trip : result.trips) {
    if (!trip.route_profile.empty()) {
      save_grade_csv(trip.route_profile, out_dir / ("indiv_profile_" + trip.trip_id + ".csv"));
    }
    write_anchors_csv(trip.anchors, trip.offset_corrected,
                      out_dir / ("indiv_anchors_" + trip.trip_id + ".csv"));
  }

  {
    std::ofstream out(out_dir / "regions.csv");
    out << "x_strt_m,x_end_m,similarity\n";
    for (const auto& r : result.regions) {
      write_csv_line(out, {r.x_strt, r.x_end, r.similarity});
    }
  }

  json report;
  report["trips"] = result.trips.size();
  report["region_coverage_fraction"] = result.region_coverage_fraction;
  report["warnings"] = result.warnings;
  if (result.final_ae) report["final_ae"] = report_json(*result.final_ae);
  if (result.final_ge) report["final_ge"] = report_json(*result.final_ge);
  if (!result.trip_ae.empty()) {
    json per_trip = json::array();
    for (std::size_t i = 0; i < result.trip_ae.size(); ++i) {
      if (result.trip_ae[i].size() == 0) continue;
      json t = report_json(result.trip_ae[i]);
      t["trip_id"] = result.trips[i].trip_id;
      per_trip.push_back(t);
    }
    report["indiv_ae"] = per_trip;
  }
  {
    std::ofstream out(out_dir / "report.json");
    out << report.dump(2) << "\n";
  }

  std::vector<const GradeProfile*> profiles{&result.final_route_profile};
  std::vector<std::string> labels{"estimated"};
  GradeProfile truth;
  if (!config.truth_path.empty()) {
    truth = load_grade_csv(config.truth_path);
    profiles.push_back(&truth);
    labels.push_back("ground truth");
  }
  write_svg_lines(out_dir / "profile.svg", profiles, labels);
  if (result.final_ae) {
    write_error_cdf(*result.final_ae, out_dir / "error_cdf.csv", out_dir / "error_cdf.svg");
  }
}

PipelineResult run_pipeline_files(const PipelineConfig& config) {
  std::string stage = "load-inputs";
  try {
    PipelineInputs inputs;
    inputs.route = load_route(config.route_path);
    inputs.elevation = load_elevation(config.elevation_path);
    if (!config.truth_path.empty()) inputs.truth = load_grade_csv(config.truth_path);
    for (const auto& path : list_trace_files(config.trace_dir)) {
      inputs.traces.push_back(load_trace(path));
    }
    if (inputs.traces.empty()) {
      throw ValidationError("no traces found in '" + config.trace_dir + "'");
    }
    stage = "estimate";
    auto result = run_pipeline(inputs, config);
    stage = "write-artifacts";
    write_artifacts(result, config);
    return result;
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + stage + ": " + e.what());
  }
}

std::vector<SweepRow> threshold_sweep(const std::vector<PreparedTrip>& prepared,
                                      const PipelineInputs& inputs, const PipelineConfig& config,
                                      const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 2) throw std::invalid_argument("threshold_sweep: need >= 2 pairs");
  if (!inputs.truth) throw std::invalid_argument("threshold_sweep: ground truth required");
  std::vector<SweepRow> rows;
  for (const auto& [acc, jerk] : pairs) {
    PipelineConfig c = config;
    c.thresholds = {acc, jerk};
    const auto res = estimate_and_aggregate(prepared, inputs.elevation, inputs.route, c,
                                            &*inputs.truth);
    SweepRow row;
    row.acc_thresh = acc;
    row.jerk_thresh = jerk;

    double covered = 0.0;
    for (const auto& trip : prepared) {
      for (const auto& seg : trip.segments) covered += seg.length_m;
    }
    std::size_t snapshots = 0;
    double err_sum = 0.0;
    std::size_t err_n = 0;
    // Pooled anchor error vs truth at the anchors' route positions.
    for (const auto& trip : res.trips) {
      snapshots += trip.anchors.size();
      const auto route_anchors = to_route_anchors(trip.anchors, inputs.route);
      for (const auto& a : route_anchors) {
        err_sum += std::abs(a.grade_deg - inputs.truth->at(a.route_m));
        ++err_n;
      }
    }
    row.anchor_density_per_500m =
        covered > 0.0 ? static_cast<double>(snapshots) / (covered / 500.0) : 0.0;
    row.anchor_mean_ae = err_n > 0 ? err_sum / static_cast<double>(err_n) : 0.0;
    row.final_mean_ae = res.final_ae ? res.final_ae->mean : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace roadgrade
