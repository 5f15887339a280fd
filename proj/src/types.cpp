#include "roadgrade/types.hpp"

#include <algorithm>
#include <cmath>

namespace roadgrade {

const char* to_string(SpeedSource s) { return s == SpeedSource::Obd ? "obd" : "gps"; }

void SensorTrace::validate() const {
  if (samples.empty()) throw ValidationError("trace '" + trip_id + "': no sensor samples");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) {
      throw ValidationError("trace '" + trip_id + "': non-monotone timestamp at sample " +
                            std::to_string(i));
    }
  }
  for (const auto& s : samples) {
    if (!s.accel.allFinite() || !s.gyro.allFinite() || !std::isfinite(s.t)) {
      throw ValidationError("trace '" + trip_id + "': non-finite sample value");
    }
  }
  auto check_speeds = [&](const std::vector<SpeedSample>& sp, const char* name) {
    for (std::size_t i = 0; i < sp.size(); ++i) {
      if (!std::isfinite(sp[i].v) || sp[i].v < 0.0) {
        throw ValidationError("trace '" + trip_id + "': bad " + std::string(name) +
                              " speed at index " + std::to_string(i));
      }
      if (i > 0 && !(sp[i].t > sp[i - 1].t)) {
        throw ValidationError("trace '" + trip_id + "': non-monotone " + std::string(name) +
                              " timestamps at index " + std::to_string(i));
      }
    }
  };
  check_speeds(obd_speed, "obd");
  check_speeds(gps_speed, "gps");
  if (stationary_window.duration() < 10.0) {
    throw ValidationError("trace '" + trip_id + "': stationary window shorter than 10 s");
  }
  // Vehicle must actually be at rest during the declared window.
  for (const auto& sp : obd_speed) {
    if (stationary_window.contains(sp.t) && sp.v >= 0.1) {
      throw ValidationError("trace '" + trip_id + "': speed " + std::to_string(sp.v) +
                            " m/s inside stationary window");
    }
  }
}

std::size_t SensorTrace::count_gaps(double nominal_rate_hz) const {
  const double limit = 3.0 / nominal_rate_hz;
  std::size_t gaps = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].t - samples[i - 1].t > limit) ++gaps;
  }
  return gaps;
}

void Route::validate() const {
  if (segments.empty()) throw ValidationError("route: empty segment list");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (!(seg.length_m > 0.0)) {
      throw ValidationError("route: segment '" + seg.segment_id + "' has non-positive length");
    }
    if (i > 0) {
      const auto& prev = segments[i - 1];
      if (!(seg.route_offset_m > prev.route_offset_m)) {
        throw ValidationError("route: segments '" + prev.segment_id + "' and '" + seg.segment_id +
                              "' not ordered by route_offset");
      }
      if (seg.route_offset_m < prev.end_m() - 1e-9) {
        throw ValidationError("route: segments '" + prev.segment_id + "' and '" + seg.segment_id +
                              "' overlap");
      }
    }
  }
}

double GradeProfile::at(double d) const { return interp_clamped(distance_m, grade_deg, d); }

void GradeProfile::validate() const {
  if (distance_m.size() != grade_deg.size()) {
    throw ValidationError("profile '" + segment_id + "': distance/grade length mismatch");
  }
  for (std::size_t i = 0; i < distance_m.size(); ++i) {
    if (!std::isfinite(grade_deg[i]) || !std::isfinite(distance_m[i])) {
      throw ValidationError("profile '" + segment_id + "': non-finite value");
    }
    if (std::abs(grade_deg[i]) >= 45.0) {
      throw ValidationError("profile '" + segment_id + "': grade " +
                            std::to_string(grade_deg[i]) + "° outside road sanity bound");
    }
    if (i > 0 && !(distance_m[i] > distance_m[i - 1])) {
      throw ValidationError("profile '" + segment_id + "': distances not strictly increasing");
    }
  }
}

double interp_clamped(const std::vector<double>& x, const std::vector<double>& y, double xq) {
  if (x.empty()) throw std::invalid_argument("interp_clamped: empty input");
  if (xq <= x.front()) return y.front();
  if (xq >= x.back()) return y.back();
  auto it = std::upper_bound(x.begin(), x.end(), xq);
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  const double dx = x[i] - x[i - 1];
  if (dx <= 0.0) return y[i];  // repeated abscissa (e.g. arc length while stopped)
  const double t = (xq - x[i - 1]) / dx;
  return y[i - 1] + t * (y[i] - y[i - 1]);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace roadgrade
