#include "roadgrade/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace roadgrade {
namespace {

struct Biquad {
  double b0, b1, b2, a1, a2;
};

// Bilinear-transform design of the analog prototype 1/(s² + √2·s + 1).
Biquad design_butterworth2(double cutoff_hz, double sample_rate_hz) {
  const double k = std::tan(M_PI * cutoff_hz / sample_rate_hz);
  const double k2 = k * k;
  const double norm = 1.0 + std::numbers::sqrt2 * k + k2;
  Biquad q{};
  q.b0 = k2 / norm;
  q.b1 = 2.0 * k2 / norm;
  q.b2 = k2 / norm;
  q.a1 = 2.0 * (k2 - 1.0) / norm;
  q.a2 = (1.0 - std::numbers::sqrt2 * k + k2) / norm;
  return q;
}

// Direct form II transposed with caller-provided initial state.
void run_biquad(const Biquad& q, std::span<const double> in, std::vector<double>& out, double z1,
                double z2) {
  out.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double x = in[i];
    const double y = q.b0 * x + z1;
    z1 = q.b1 * x - q.a1 * y + z2;
    z2 = q.b2 * x - q.a2 * y;
    out[i] = y;
  }
}

// Steady-state filter state for a unit step, scaled by x0 on use.
void step_state(const Biquad& q, double& z1, double& z2) {
  const double dc = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
  z2 = q.b2 - q.a2 * dc;
  z1 = q.b1 - q.a1 * dc + z2;
}

}  // namespace

std::vector<double> butterworth_lowpass(std::span<const double> signal, const FilterSpec& spec) {
  if (spec.order != 2) throw std::invalid_argument("butterworth_lowpass: only order 2 supported");
  if (!(spec.cutoff_hz > 0.0) || !(spec.cutoff_hz < spec.sample_rate_hz / 2.0)) {
    throw std::invalid_argument("butterworth_lowpass: cutoff must lie in (0, nyquist)");
  }
  const std::size_t min_len = static_cast<std::size_t>(4 * spec.order);
  if (signal.size() < min_len) {
    throw std::invalid_argument("butterworth_lowpass: series shorter than 4x filter order");
  }

  const Biquad q = design_butterworth2(spec.cutoff_hz, spec.sample_rate_hz);

  // Mirror padding covering the filter's settling time. Mirroring (rather
  // than point reflection) keeps noisy endpoint samples from anchoring the
  // output level at the edges.
  const auto settle = static_cast<std::size_t>(3.0 * spec.sample_rate_hz / spec.cutoff_hz);
  const std::size_t pad =
      std::min<std::size_t>(signal.size() - 1, std::max<std::size_t>(9, settle));
  std::vector<double> ext;
  ext.reserve(signal.size() + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(signal[i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(signal[signal.size() - 1 - i]);

  double z1 = 0.0, z2 = 0.0;
  step_state(q, z1, z2);

  std::vector<double> fwd;
  run_biquad(q, ext, fwd, z1 * ext.front(), z2 * ext.front());
  std::reverse(fwd.begin(), fwd.end());
  std::vector<double> bwd;
  run_biquad(q, fwd, bwd, z1 * fwd.front(), z2 * fwd.front());
  std::reverse(bwd.begin(), bwd.end());

  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
          bwd.begin() + static_cast<std::ptrdiff_t>(pad + signal.size())};
}

std::vector<Vec3> butterworth_lowpass3(std::span<const Vec3> signal, const FilterSpec& spec) {
  std::vector<double> comp(signal.size());
  std::vector<Vec3> out(signal.size());
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < signal.size(); ++i) comp[i] = signal[i][axis];
    const auto f = butterworth_lowpass(comp, spec);
    for (std::size_t i = 0; i < signal.size(); ++i) out[i][axis] = f[i];
  }
  return out;
}

std::vector<double> resample_speed(const std::vector<SpeedSample>& speeds,
                                   std::span<const double> grid) {
  if (speeds.size() < 2) throw std::invalid_argument("resample_speed: fewer than 2 speed samples");
  std::vector<double> out(grid.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    if (t <= speeds.front().t) {
      out[i] = speeds.front().v;
      continue;
    }
    if (t >= speeds.back().t) {
      out[i] = speeds.back().v;
      continue;
    }
    while (j + 1 < speeds.size() && speeds[j + 1].t < t) ++j;
    const auto& a = speeds[j];
    const auto& b = speeds[j + 1];
    const double f = (t - a.t) / (b.t - a.t);
    out[i] = std::max(0.0, a.v + f * (b.v - a.v));
  }
  return out;
}

std::vector<double> arc_length(std::span<const double> v, double dt) {
  std::vector<double> s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0) throw std::invalid_argument("arc_length: negative speed");
    s[i] = i == 0 ? 0.0 : s[i - 1] + v[i] * dt;
  }
  return s;
}

namespace {

std::vector<double> central_difference(std::span<const double> y, double dt) {
  std::vector<double> d(y.size(), 0.0);
  if (y.size() < 3) return d;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt);
  d.front() = d[1];
  d.back() = d[d.size() - 2];
  return d;
}

double normalized_corr(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xa = a[i] - ma;
    const double xb = b[i] - mb;
    num += xa * xb;
    da += xa * xa;
    db += xb * xb;
  }
  if (da <= 0.0 || db <= 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = t0 + static_cast<double>(i) * dt;
  return g;
}

// Linear resampling of sorted (x, y) onto a sorted grid; two-pointer scan.
std::vector<double> resample_linear(const std::vector<double>& x, const std::vector<double>& y,
                                    std::span<const double> grid) {
  std::vector<double> out(grid.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double q = grid[i];
    if (q <= x.front()) {
      out[i] = y.front();
      continue;
    }
    if (q >= x.back()) {
      out[i] = y.back();
      continue;
    }
    while (j + 1 < x.size() && x[j + 1] < q) ++j;
    const double dx = x[j + 1] - x[j];
    out[i] = dx > 0.0 ? y[j] + (q - x[j]) / dx * (y[j + 1] - y[j]) : y[j + 1];
  }
  return out;
}

std::vector<double> decimate(std::span<const double> v, std::size_t stride) {
  std::vector<double> out;
  out.reserve(v.size() / stride + 1);
  for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
  return out;
}

// Best normalized-correlation shift of b against a over +-max_shift.
std::pair<int, double> best_shift(std::span<const double> a, std::span<const double> b,
                                  int min_shift, int max_shift) {
  double best = -2.0;
  int best_k = 0;
  const std::size_t n = std::min(a.size(), b.size());
  for (int k = min_shift; k <= max_shift; ++k) {
    if (static_cast<std::size_t>(std::abs(k)) + 2 >= n) continue;
    std::span<const double> sa, sb;
    if (k >= 0) {
      sa = a.subspan(0, n - static_cast<std::size_t>(k));
      sb = b.subspan(static_cast<std::size_t>(k), n - static_cast<std::size_t>(k));
    } else {
      sa = a.subspan(static_cast<std::size_t>(-k), n - static_cast<std::size_t>(-k));
      sb = b.subspan(0, n - static_cast<std::size_t>(-k));
    }
    const double c = normalized_corr(sa, sb);
    if (c > best) {
      best = c;
      best_k = k;
    }
  }
  return {best_k, best};
}

}  // namespace

SyncResult synchronize(const SensorTrace& trace, SpeedSource source, const FilterSpec& spec) {
  SyncResult res;
  const auto& speeds = trace.speeds(source);
  if (speeds.size() < 2 || trace.samples.size() < 16) return res;

  const double dt = 1.0 / spec.sample_rate_hz;
  const auto grid = uniform_grid(trace.samples.front().t, trace.samples.back().t, dt);

  // Gravity direction from the stationary window; the dynamic part of the
  // measured acceleration is what correlates with dv/dt.
  Vec3 gravity = Vec3::Zero();
  std::size_t n_stat = 0;
  for (const auto& smp : trace.samples) {
    if (trace.stationary_window.contains(smp.t)) {
      gravity += smp.accel;
      ++n_stat;
    }
  }
  if (n_stat > 0) gravity /= static_cast<double>(n_stat);

  std::vector<Vec3> accel(grid.size());
  {
    std::vector<double> ts(trace.samples.size());
    std::vector<double> comp(trace.samples.size());
    for (std::size_t i = 0; i < trace.samples.size(); ++i) ts[i] = trace.samples[i].t;
    for (int axis = 0; axis < 3; ++axis) {
      for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        comp[i] = trace.samples[i].accel[axis];
      }
      const auto r = resample_linear(ts, comp, grid);
      for (std::size_t i = 0; i < grid.size(); ++i) accel[i][axis] = r[i];
    }
  }
  std::vector<double> dyn(grid.size());
  const Vec3 g_dir = gravity.norm() > 1e-6 ? Vec3(gravity.normalized()) : Vec3(0, 0, 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 d = accel[i] - accel[i].dot(g_dir) * g_dir;
    dyn[i] = d.norm();
  }
  dyn = butterworth_lowpass(dyn, spec);

  const auto v = resample_speed(speeds, grid);
  auto dvdt = central_difference(v, dt);
  dvdt = butterworth_lowpass(dvdt, spec);
  for (auto& x : dvdt) x = std::abs(x);

  double max_abs_dv = 0.0;
  for (double x : dvdt) max_abs_dv = std::max(max_abs_dv, x);
  if (max_abs_dv < 1.0) return res;  // no acceleration event to lock onto

  // Coarse pass on a decimated grid, fine pass at full rate around the peak.
  // Positive shift: speed events appear later than IMU events.
  const int max_shift = static_cast<int>(std::round(2.0 / dt));
  const std::size_t stride = 4;
  const auto dyn_c = decimate(dyn, stride);
  const auto dvdt_c = decimate(dvdt, stride);
  const int coarse = best_shift(dyn_c, dvdt_c, -max_shift / static_cast<int>(stride),
                                max_shift / static_cast<int>(stride))
                         .first;
  const int center = coarse * static_cast<int>(stride);
  const auto [best_k, best] =
      best_shift(dyn, dvdt, std::max(-max_shift, center - 2 * static_cast<int>(stride)),
                 std::min(max_shift, center + 2 * static_cast<int>(stride)));

  res.peak_corr = best;
  if (best >= 0.3) {
    res.lag_s = static_cast<double>(best_k) * dt;
    res.reliable = true;
  }
  return res;
}

AlignedTrip build_aligned_trip(const SensorTrace& trace, const PreprocessOptions& opts) {
  trace.validate();

  AlignedTrip trip;
  trip.trip_id = trace.trip_id;
  trip.dt = 1.0 / opts.filter.sample_rate_hz;
  trip.t0 = trace.samples.front().t;
  trip.stationary_window = trace.stationary_window;
  trip.t = uniform_grid(trace.samples.front().t, trace.samples.back().t, trip.dt);

  // Resample the IMU onto the uniform grid, then filter.
  std::vector<double> ts(trace.samples.size());
  for (std::size_t i = 0; i < trace.samples.size(); ++i) ts[i] = trace.samples[i].t;
  std::vector<Vec3> accel(trip.t.size()), gyro(trip.t.size());
  std::vector<double> comp(trace.samples.size());
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < trace.samples.size(); ++i) comp[i] = trace.samples[i].accel[axis];
    auto r = resample_linear(ts, comp, trip.t);
    for (std::size_t i = 0; i < trip.t.size(); ++i) accel[i][axis] = r[i];
    for (std::size_t i = 0; i < trace.samples.size(); ++i) comp[i] = trace.samples[i].gyro[axis];
    r = resample_linear(ts, comp, trip.t);
    for (std::size_t i = 0; i < trip.t.size(); ++i) gyro[i][axis] = r[i];
  }
  trip.accel = butterworth_lowpass3(accel, opts.filter);
  trip.gyro = butterworth_lowpass3(gyro, opts.filter);

  auto speeds = trace.speeds(opts.speed_source);
  if (opts.synchronize_speed) {
    trip.sync = synchronize(trace, opts.speed_source, opts.filter);
    for (auto& sp : speeds) sp.t -= trip.sync.lag_s;
  }
  trip.v = resample_speed(speeds, trip.t);
  trip.s = arc_length(trip.v, trip.dt);
  return trip;
}

std::vector<SegmentSlice> segment_slice(const AlignedTrip& trip, const Route& route) {
  route.validate();
  std::vector<SegmentSlice> slices;
  slices.reserve(route.segments.size());
  for (const auto& seg : route.segments) {
    SegmentSlice slice;
    slice.segment_id = seg.segment_id;
    slice.trip_id = trip.trip_id;
    slice.route_offset_m = seg.route_offset_m;
    slice.length_m = seg.length_m;
    slice.dt = trip.dt;
    for (std::size_t i = 0; i < trip.size(); ++i) {
      if (trip.s[i] >= seg.route_offset_m && trip.s[i] < seg.end_m()) {
        slice.accel.push_back(trip.accel[i]);
        slice.gyro.push_back(trip.gyro[i]);
        slice.v.push_back(trip.v[i]);
        slice.s.push_back(trip.s[i] - seg.route_offset_m);
      }
    }
    if (!slice.empty()) {
      // Covered less than the segment (minus one nominal travel step) -> partial.
      const double step = std::max(1.0, slice.v.back() * slice.dt * 4.0);
      slice.partial = slice.s.front() > step || slice.s.back() < seg.length_m - step;
    } else {
      slice.partial = true;
    }
    slices.push_back(std::move(slice));
  }
  return slices;
}

}  // namespace roadgrade
