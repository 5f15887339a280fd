#include <doctest.h>

#include <cmath>
#include <functional>

#include "helpers.hpp"
#include "roadgrade/fuse.hpp"
#include "roadgrade/synth.hpp"

using namespace roadgrade;
using namespace roadgrade::testing;

namespace {

PitchSeries gyro_series(double length_m, double step_m,
                        const std::function<double(double)>& theta) {
  PitchSeries p;
  p.trip_id = "t";
  p.segment_id = "seg";
  p.source = PitchSource::Gyro;
  for (double s = 0.0; s <= length_m + 1e-9; s += step_m) {
    p.s_m.push_back(s);
    p.theta_deg.push_back(theta(s));
  }
  p.valid.assign(p.s_m.size(), 1);
  return p;
}

std::vector<AnchorSnapshot> anchors_from(const std::function<double(double)>& grade,
                                         double length_m, double spacing_m,
                                         double start_m = 1.0) {
  std::vector<AnchorSnapshot> out;
  for (double s = start_m; s < length_m; s += spacing_m) {
    out.push_back({"seg", "t", s, grade(s), 1});
  }
  return out;
}

}  // namespace

TEST_CASE("drift_window arithmetic") {
  const std::vector<double> gaps1{250.0, 100.0};
  CHECK(drift_window(900.0, gaps1) == doctest::Approx(300.0));
  const std::vector<double> gaps2{150.0};
  CHECK(drift_window(300.0, gaps2) == doctest::Approx(150.0));
  const std::vector<double> gaps3{400.0};
  CHECK(drift_window(900.0, gaps3) == doctest::Approx(400.0));
  CHECK_THROWS_AS((void)drift_window(900.0, std::vector<double>{}), ValidationError);
}

TEST_CASE("fit_drift is exact on exact inputs") {
  auto truth = [](double s) { return 2.0 * std::sin(2.0 * M_PI * s / 400.0); };
  SUBCASE("anchors equal to the gyro give a zero fit") {
    const auto gyro = gyro_series(600.0, 0.5, truth);
    const auto anchors = anchors_from(truth, 600.0, 10.0);
    const auto fit = fit_drift(gyro, anchors, 0.0, 600.0);
    CHECK(fit.slope_deg_per_m == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(fit.intercept_deg == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("an exact linear drift is recovered to 1e-9") {
    const auto gyro =
        gyro_series(600.0, 0.5, [&](double s) { return truth(s) + 0.01 * s + 0.3; });
    const auto anchors = anchors_from(truth, 600.0, 10.0);
    const auto fit = fit_drift(gyro, anchors, 0.0, 600.0);
    CHECK(fit.slope_deg_per_m == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(fit.intercept_deg == doctest::Approx(0.3).epsilon(1e-7));
  }
  SUBCASE("fewer than two anchors in the window throws") {
    const auto gyro = gyro_series(600.0, 0.5, truth);
    const auto anchors = anchors_from(truth, 600.0, 500.0);
    CHECK_THROWS_AS((void)fit_drift(gyro, anchors, 0.0, 300.0), ValidationError);
  }
}

TEST_CASE("fit_drift tolerates anchor noise per the OLS variance") {
  auto truth = [](double) { return 1.0; };
  const auto gyro = gyro_series(300.0, 0.5, [&](double s) { return truth(s) + 0.01 * s; });
  SynthRng rng(41);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<AnchorSnapshot> anchors;
    for (int k = 0; k < 10; ++k) {
      const double s = 15.0 + 30.0 * k;
      anchors.push_back({"seg", "t", s, truth(s) + rng.normal(0.3), 1});
    }
    const auto fit = fit_drift(gyro, anchors, 0.0, 300.0);
    worst = std::max(worst, std::abs(fit.slope_deg_per_m - 0.01));
  }
  CHECK(worst < 0.004);
}

TEST_CASE("correct_profile with zero fits reproduces the gyro series") {
  auto truth = [](double s) { return 1.5 * std::sin(2.0 * M_PI * s / 300.0); };
  const auto gyro = gyro_series(500.0, 0.25, truth);
  const std::vector<DriftFit> fits{{0.0, 500.0, 0.0, 0.0, 2}};
  const auto profile = correct_profile(gyro, fits, {0.25, 10.0});
  for (std::size_t i = 0; i < profile.size(); ++i) {
    CHECK(profile.grade_deg[i] ==
          doctest::Approx(truth(profile.distance_m[i])).epsilon(1e-9));
  }
}

TEST_CASE("windowed correction removes a constant-bias drift") {
  // -0.2 deg/s at 10 m/s is -0.02 deg/m of distance drift.
  auto truth = [](double s) { return 2.0 * std::sin(2.0 * M_PI * s / 500.0); };
  auto drift = [](double s) { return -0.02 * s; };
  const auto gyro = gyro_series(900.0, 0.25, [&](double s) { return truth(s) + drift(s); });
  const auto anchors = anchors_from(truth, 900.0, 2.0);
  const auto fits = fit_drift_windows(gyro, anchors, 900.0);
  const auto profile = correct_profile(gyro, fits, {0.25, 10.0});
  double max_err = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    max_err = std::max(max_err, std::abs(profile.grade_deg[i] - truth(profile.distance_m[i])));
  }
  CHECK(max_err < 0.1);
}

TEST_CASE("windowed correction bounds sign-changing drift where one line cannot") {
  const double length = 1350.0;  // windows of 450 m
  auto truth = [](double s) { return 1.0 * std::sin(2.0 * M_PI * s / 450.0); };
  // Drift slope flips sign a third of the way in (at a correction-window
  // joint; a flip inside a window leaves the window's line-fit residual).
  auto drift = [](double s) { return s < 450.0 ? 0.02 * s : 9.0 - 0.02 * (s - 450.0); };
  const auto gyro = gyro_series(length, 0.25, [&](double s) { return truth(s) + drift(s); });
  const auto anchors = anchors_from(truth, length, 2.0);

  const auto fits = fit_drift_windows(gyro, anchors, length);
  const auto windowed = correct_profile(gyro, fits, {0.25, 10.0});
  double windowed_err = 0.0;
  for (std::size_t i = 0; i < windowed.size(); ++i) {
    windowed_err =
        std::max(windowed_err, std::abs(windowed.grade_deg[i] - truth(windowed.distance_m[i])));
  }

  // Whole-segment single line for comparison.
  const auto single = fit_drift(gyro, anchors, 0.0, length);
  double single_err = 0.0;
  for (double s = 0.0; s <= length; s += 1.0) {
    const double corrected = gyro.at(s) - (single.slope_deg_per_m * s + single.intercept_deg);
    single_err = std::max(single_err, std::abs(corrected - truth(s)));
  }

  // Reference: the same windowed pipeline on a pure constant-bias drift.
  const auto gyro_const =
      gyro_series(length, 0.25, [&](double s) { return truth(s) + 0.02 * s; });
  const auto fits_const = fit_drift_windows(gyro_const, anchors, length);
  const auto profile_const = correct_profile(gyro_const, fits_const, {0.25, 10.0});
  double const_err = 0.0;
  for (std::size_t i = 0; i < profile_const.size(); ++i) {
    const_err = std::max(
        const_err, std::abs(profile_const.grade_deg[i] - truth(profile_const.distance_m[i])));
  }

  CHECK(windowed_err < 2.0 * std::max(const_err, 0.05));
  CHECK(single_err > 4.0 * windowed_err);
}

TEST_CASE("correcting against anchors sampled from the series is a fixed point") {
  auto shape = [](double s) { return 1.2 * std::sin(2.0 * M_PI * s / 350.0) + 0.01 * s; };
  const auto gyro = gyro_series(700.0, 0.25, shape);
  const auto anchors = anchors_from(shape, 700.0, 4.0);
  const auto fits = fit_drift_windows(gyro, anchors, 700.0);
  const auto profile = correct_profile(gyro, fits, {0.25, 10.0});
  for (std::size_t i = 0; i < profile.size(); ++i) {
    CHECK(profile.grade_deg[i] == doctest::Approx(shape(profile.distance_m[i])).epsilon(1e-6));
  }
}

TEST_CASE("corrected residuals at anchors shrink versus the uncorrected series") {
  auto truth = [](double s) { return std::sin(2.0 * M_PI * s / 300.0); };
  SynthRng rng(51);
  const auto gyro =
      gyro_series(600.0, 0.25, [&](double s) { return truth(s) + 0.015 * s - 1.0; });
  std::vector<AnchorSnapshot> anchors;
  for (double s = 1.0; s < 600.0; s += 6.0) {
    anchors.push_back({"seg", "t", s, truth(s) + rng.normal(0.2), 1});
  }
  const auto fits = fit_drift_windows(gyro, anchors, 600.0);
  const auto profile = correct_profile(gyro, fits, {0.25, 10.0});
  double res_corr = 0.0, res_raw = 0.0;
  for (const auto& a : anchors) {
    res_corr += profile.at(a.bin_center_m) - a.grade_deg;
    res_raw += gyro.at(a.bin_center_m) - a.grade_deg;
  }
  CHECK(std::abs(res_corr) < std::abs(res_raw));
}

TEST_CASE("corrected profiles are spatially continuous") {
  auto truth = [](double s) { return 1.5 * std::sin(2.0 * M_PI * s / 400.0); };
  auto drift = [](double s) { return s < 300.0 ? 0.015 * s : 4.5 - 0.02 * (s - 300.0); };
  const auto gyro = gyro_series(900.0, 0.25, [&](double s) { return truth(s) + drift(s); });
  SynthRng rng(61);
  std::vector<AnchorSnapshot> anchors;
  for (double s = 1.0; s < 900.0; s += 8.0) {
    anchors.push_back({"seg", "t", s, truth(s) + rng.normal(0.25), 1});
  }
  const auto fits = fit_drift_windows(gyro, anchors, 900.0);
  const auto profile = correct_profile(gyro, fits, {0.2, 10.0});
  for (std::size_t i = 1; i < profile.size(); ++i) {
    CHECK(std::abs(profile.grade_deg[i] - profile.grade_deg[i - 1]) < 0.5);
  }
}

TEST_CASE("level_to_first_anchor pins the series level to the anchors") {
  auto truth = [](double s) { return 0.5 + 0.002 * s; };
  auto gyro = gyro_series(200.0, 0.5, [&](double s) { return truth(s) - 3.0; });
  const auto anchors = anchors_from(truth, 200.0, 10.0);
  const auto leveled = level_to_first_anchor(std::move(gyro), anchors);
  CHECK(leveled.at(anchors.front().bin_center_m) ==
        doctest::Approx(anchors.front().grade_deg).epsilon(1e-9));
}
