#include "roadgrade/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace roadgrade {

using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Splits a CSV body into rows of doubles, validating the expected header.
// Line numbers in errors are 1-based and include the header.
std::vector<std::vector<double>> parse_csv(const fs::path& path, const std::string& header,
                                           std::size_t n_cols) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::size_t len = eol - pos;
    if (len > 0 && text[pos + len - 1] == '\r') --len;
    ++line_no;
    const std::string_view line(text.data() + pos, len);
    pos = eol + 1;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != header) {
        throw ParseError("'" + path.string() + "' line 1: expected header '" + header + "', got '" +
                         std::string(line) + "'");
      }
      continue;
    }
    std::vector<double> row;
    row.reserve(n_cols);
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      char* next = nullptr;
      const double v = std::strtod(p, &next);
      if (next == p) {
        throw ParseError("'" + path.string() + "' line " + std::to_string(line_no) +
                         ": cannot parse number in '" + std::string(line) + "'");
      }
      row.push_back(v);
      p = next;
      if (p < end && *p == ',') ++p;
    }
    if (row.size() != n_cols) {
      throw ParseError("'" + path.string() + "' line " + std::to_string(line_no) + ": expected " +
                       std::to_string(n_cols) + " fields, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SpeedSample> load_speed_csv(const fs::path& path) {
  std::vector<SpeedSample> out;
  for (const auto& row : parse_csv(path, "t,v", 2)) out.push_back({row[0], row[1]});
  return out;
}

void save_speed_csv(const std::vector<SpeedSample>& speeds, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << "t,v\n";
  char buf[80];
  for (const auto& s : speeds) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", s.t, s.v);
    out << buf;
  }
}

fs::path manifest_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

}  // namespace

SensorTrace load_trace(const fs::path& csv_path) {
  SensorTrace trace;

  const fs::path mpath = manifest_path(csv_path);
  json manifest;
  try {
    manifest = json::parse(read_file(mpath));
  } catch (const json::exception& e) {
    throw ParseError("manifest '" + mpath.string() + "': " + e.what());
  }
  try {
    trace.trip_id = manifest.at("trip_id").get<std::string>();
    trace.phone_id = manifest.value("phone_id", "");
    trace.vehicle_id = manifest.value("vehicle_id", "");
    const auto win = manifest.at("stationary_window");
    trace.stationary_window = {win.at(0).get<double>(), win.at(1).get<double>()};
    const auto& files = manifest.at("speed_files");
    const fs::path base = mpath.parent_path();
    trace.obd_speed = load_speed_csv(base / files.at("obd").get<std::string>());
    trace.gps_speed = load_speed_csv(base / files.at("gps").get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError("manifest '" + mpath.string() + "': missing or bad field: " + e.what());
  }

  const auto rows = parse_csv(csv_path, "t,ax,ay,az,gx,gy,gz", 7);
  trace.samples.reserve(rows.size());
  for (const auto& r : rows) {
    trace.samples.push_back({r[0], Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6])});
  }
  trace.validate();
  return trace;
}

void save_trace(const SensorTrace& trace, const fs::path& csv_path) {
  {
    std::ofstream out(csv_path);
    if (!out) throw ParseError("cannot write '" + csv_path.string() + "'");
    out << "t,ax,ay,az,gx,gy,gz\n";
    char buf[256];
    for (const auto& s : trace.samples) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.t, s.accel.x(),
                    s.accel.y(), s.accel.z(), s.gyro.x(), s.gyro.y(), s.gyro.z());
      out << buf;
    }
  }
  const fs::path stem = csv_path.stem();
  const fs::path obd = csv_path.parent_path() / (stem.string() + "_obd.csv");
  const fs::path gps = csv_path.parent_path() / (stem.string() + "_gps.csv");
  save_speed_csv(trace.obd_speed, obd);
  save_speed_csv(trace.gps_speed, gps);

  json manifest;
  manifest["trip_id"] = trace.trip_id;
  manifest["phone_id"] = trace.phone_id;
  manifest["vehicle_id"] = trace.vehicle_id;
  manifest["stationary_window"] = {trace.stationary_window.t0, trace.stationary_window.t1};
  manifest["speed_files"] = {{"obd", obd.filename().string()}, {"gps", gps.filename().string()}};
  std::ofstream out(manifest_path(csv_path));
  if (!out) throw ParseError("cannot write '" + manifest_path(csv_path).string() + "'");
  out << manifest.dump(2) << "\n";
}

Route load_route(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError("route '" + path.string() + "': " + e.what());
  }
  Route route;
  try {
    for (const auto& item : j) {
      RoadSegment seg;
      seg.segment_id = item.at("segment_id").get<std::string>();
      seg.length_m = item.at("length_m").get<double>();
      seg.route_offset_m = item.at("route_offset_m").get<double>();
      route.segments.push_back(std::move(seg));
    }
  } catch (const json::exception& e) {
    throw ParseError("route '" + path.string() + "': missing or bad field: " + e.what());
  }
  route.validate();
  return route;
}

void save_route(const Route& route, const fs::path& path) {
  json j = json::array();
  for (const auto& seg : route.segments) {
    j.push_back({{"segment_id", seg.segment_id},
                 {"length_m", seg.length_m},
                 {"route_offset_m", seg.route_offset_m}});
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

ElevationProfile load_elevation(const fs::path& path) {
  ElevationProfile profile;
  for (const auto& row : parse_csv(path, "route_distance_m,elevation_m", 2)) {
    profile.distance_m.push_back(row[0]);
    profile.elevation_m.push_back(row[1]);
  }
  profile.validate();
  return profile;
}

void save_elevation(const ElevationProfile& profile, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << "route_distance_m,elevation_m\n";
  char buf[80];
  for (std::size_t i = 0; i < profile.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", profile.distance_m[i], profile.elevation_m[i]);
    out << buf;
  }
}

GradeProfile load_grade_csv(const fs::path& path) {
  GradeProfile p;
  p.segment_id = path.stem().string();
  for (const auto& row : parse_csv(path, "route_distance_m,grade_deg", 2)) {
    p.distance_m.push_back(row[0]);
    p.grade_deg.push_back(row[1]);
  }
  if (p.size() >= 2) p.resolution_m = p.distance_m[1] - p.distance_m[0];
  return p;
}

void save_grade_csv(const GradeProfile& profile, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << "route_distance_m,grade_deg\n";
  char buf[80];
  for (std::size_t i = 0; i < profile.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", profile.distance_m[i], profile.grade_deg[i]);
    out << buf;
  }
}

std::vector<fs::path> list_trace_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw ParseError("trace dir '" + dir.string() + "' not found");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const auto name = entry.path().stem().string();
    if (name.ends_with("_obd") || name.ends_with("_gps")) continue;
    if (fs::exists(manifest_path(entry.path()))) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace roadgrade
