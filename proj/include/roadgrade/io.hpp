#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "roadgrade/elevation.hpp"
#include "roadgrade/types.hpp"

namespace roadgrade {

namespace fs = std::filesystem;

/**
 * Trace storage: `<name>.csv` with header t,ax,ay,az,gx,gy,gz plus a sidecar
 * manifest `<name>.json` naming the trip and its speed files (paths relative
 * to the manifest). Speed files are CSV with header t,v.
 */
SensorTrace load_trace(const fs::path& csv_path);
void save_trace(const SensorTrace& trace, const fs::path& csv_path);

/// Route file: JSON array of {segment_id, length_m, route_offset_m}.
Route load_route(const fs::path& path);
void save_route(const Route& route, const fs::path& path);

/// Elevation file: CSV route_distance_m,elevation_m.
ElevationProfile load_elevation(const fs::path& path);
void save_elevation(const ElevationProfile& profile, const fs::path& path);

/// Ground truth / profile files: CSV route_distance_m,grade_deg.
GradeProfile load_grade_csv(const fs::path& path);
void save_grade_csv(const GradeProfile& profile, const fs::path& path);

/// All trace CSVs in a directory (files with a sidecar manifest), sorted.
std::vector<fs::path> list_trace_files(const fs::path& dir);

}  // namespace roadgrade
