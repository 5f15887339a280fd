#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "roadgrade/anchors.hpp"
#include "roadgrade/synth.hpp"

using namespace roadgrade;
using namespace roadgrade::testing;

namespace {

PitchSeries flat_series(std::size_t n, double grade_deg, double spacing_m = 0.07) {
  PitchSeries p;
  p.trip_id = "t";
  p.segment_id = "s";
  p.source = PitchSource::Accel;
  p.s_m.resize(n);
  p.theta_deg.assign(n, grade_deg);
  p.valid.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) p.s_m[i] = static_cast<double>(i) * spacing_m;
  return p;
}

// Stop-and-go longitudinal acceleration texture.
std::vector<double> wobble_accel(std::size_t n) {
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * kImuDt;
    a[i] = 0.9 * std::sin(2.0 * M_PI * t / 9.0) + 0.5 * std::sin(2.0 * M_PI * t / 3.1 + 0.7);
  }
  return a;
}

}  // namespace

TEST_CASE("stable_mask thresholds") {
  const StabilityThresholds th{0.7, 0.15};
  SUBCASE("zero acceleration is always stable") {
    std::vector<double> a(100, 0.0);
    for (auto m : stable_mask(a, kImuDt, th)) CHECK(m == 1);
  }
  SUBCASE("acceleration above the threshold is never stable") {
    std::vector<double> a(100, 1.0);
    for (auto m : stable_mask(a, kImuDt, th)) CHECK(m == 0);
  }
  SUBCASE("thresholds must be positive") {
    std::vector<double> a(10, 0.0);
    CHECK_THROWS_AS((void)stable_mask(a, kImuDt, {0.0, 0.1}), std::invalid_argument);
  }
}

TEST_CASE("stable fraction shrinks as thresholds tighten") {
  const auto a = wobble_accel(20000);
  const std::vector<StabilityThresholds> pairs{
      {2.0, 0.5}, {1.3, 0.3}, {0.9, 0.2}, {0.7, 0.15}, {0.5, 0.1}};
  std::size_t prev = a.size() + 1;
  for (const auto& th : pairs) {
    const auto mask = stable_mask(a, kImuDt, th);
    const auto count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    CHECK(count < prev);
    prev = count;
  }
}

TEST_CASE("enlarging thresholds never shrinks the stable set") {
  const auto a = wobble_accel(5000);
  SynthRng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const double acc1 = rng.uniform(0.2, 1.5);
    const double jerk1 = rng.uniform(0.05, 0.4);
    const StabilityThresholds small{acc1, jerk1};
    const StabilityThresholds big{acc1 + rng.uniform(0.0, 1.0), jerk1 + rng.uniform(0.0, 0.3)};
    const auto m1 = stable_mask(a, kImuDt, small);
    const auto m2 = stable_mask(a, kImuDt, big);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (m1[i]) CHECK(m2[i]);
    }
  }
}

TEST_CASE("bin_anchors averages stable ticks into 2 m bins") {
  SUBCASE("constant grade fills every covered bin") {
    const auto series = flat_series(3000, 2.0);
    const std::vector<uint8_t> mask(series.size(), 1);
    const auto snaps = bin_anchors(series, mask, 2.0);
    const auto expected_bins = static_cast<std::size_t>(series.s_m.back() / 2.0) + 1;
    CHECK(snaps.size() == expected_bins);
    for (const auto& s : snaps) {
      CHECK(s.grade_deg == doctest::Approx(2.0));
      CHECK(s.sample_count >= 1);
      CHECK(std::abs(std::remainder(s.bin_center_m - 1.0, 2.0)) < 1e-9);
    }
  }
  SUBCASE("no stable ticks yields no snapshots") {
    const auto series = flat_series(500, 2.0);
    const std::vector<uint8_t> mask(series.size(), 0);
    CHECK(bin_anchors(series, mask, 2.0).empty());
  }
  SUBCASE("looser thresholds yield strictly more snapshots") {
    auto series = flat_series(20000, 1.0);
    const auto a = wobble_accel(series.size());
    const auto tight = stable_mask(a, kImuDt, {0.7, 0.15});
    const auto loose = stable_mask(a, kImuDt, {2.0, 0.5});
    CHECK(bin_anchors(series, loose, 2.0).size() > bin_anchors(series, tight, 2.0).size());
  }
}

TEST_CASE("snapshot grades stay within the member tick range") {
  SynthRng rng(17);
  auto series = flat_series(4000, 0.0);
  for (auto& th : series.theta_deg) th = rng.uniform(-3.0, 3.0);
  const auto a = wobble_accel(series.size());
  const auto mask = stable_mask(a, kImuDt, {0.9, 0.2});
  for (const auto& snap : bin_anchors(series, mask, 2.0)) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (!mask[i]) continue;
      if (series.s_m[i] >= snap.bin_center_m - 1.0 && series.s_m[i] < snap.bin_center_m + 1.0) {
        lo = std::min(lo, series.theta_deg[i]);
        hi = std::max(hi, series.theta_deg[i]);
      }
    }
    CHECK(snap.grade_deg >= lo - 1e-12);
    CHECK(snap.grade_deg <= hi + 1e-12);
  }
}

TEST_CASE("anchor error shrinks as thresholds tighten under |a|-scaled noise") {
  // Accelerometer error proportional to |a|. The error carrier is slow
  // (second-scale), as dynamics-induced errors are, so bin averaging cannot
  // hide it.
  SynthRng rng(23);
  auto series = flat_series(40000, 0.0);
  const auto a = wobble_accel(series.size());
  double carrier = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    carrier = 0.995 * carrier + 0.1 * rng.normal(1.0);
    series.theta_deg[i] = 1.2 * std::abs(a[i]) * carrier;
  }
  const std::vector<StabilityThresholds> pairs{
      {0.5, 0.1}, {0.7, 0.15}, {0.9, 0.2}, {1.3, 0.3}, {2.0, 0.5}};
  double prev = 0.0;
  for (const auto& th : pairs) {
    const auto mask = stable_mask(a, kImuDt, th);
    const auto snaps = bin_anchors(series, mask, 2.0);
    REQUIRE_FALSE(snaps.empty());
    double mean_ae = 0.0;
    for (const auto& s : snaps) mean_ae += std::abs(s.grade_deg);
    mean_ae /= static_cast<double>(snaps.size());
    CHECK(mean_ae >= prev);
    prev = mean_ae;
  }
}
