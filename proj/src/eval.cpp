#include "roadgrade/eval.hpp"

#include <cmath>

namespace roadgrade {

namespace {

void summarize(ErrorReport& r) {
  if (r.error_deg.empty()) throw std::invalid_argument("error report: no overlapping points");
  double sum = 0.0;
  for (double e : r.error_deg) sum += e;
  r.mean = sum / static_cast<double>(r.error_deg.size());
  r.p50 = quantile(r.error_deg, 0.5);
  r.p90 = quantile(r.error_deg, 0.9);
}

void check_coverage(const GradeProfile& est, const GradeProfile& truth) {
  if (est.empty() || truth.size() < 2) {
    throw std::invalid_argument("error metrics: empty profile");
  }
  if (truth.distance_m.front() > est.distance_m.front() + 1e-6 ||
      truth.distance_m.back() < est.distance_m.back() - 1e-6) {
    throw std::invalid_argument("error metrics: truth does not cover the estimate's extent");
  }
}

}  // namespace

ErrorReport absolute_error(const GradeProfile& est, const GradeProfile& truth) {
  check_coverage(est, truth);
  ErrorReport r;
  r.distance_m = est.distance_m;
  r.error_deg.reserve(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    r.error_deg.push_back(std::abs(est.grade_deg[i] - truth.at(est.distance_m[i])));
  }
  summarize(r);
  return r;
}

ErrorReport gradient_error(const GradeProfile& est, const GradeProfile& truth, double step_m) {
  check_coverage(est, truth);
  if (!(step_m > 0.0)) throw std::invalid_argument("gradient_error: bad step");
  ErrorReport r;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double s = est.distance_m[i];
    if (s - step_m < est.distance_m.front() - 1e-9 || s + step_m > est.distance_m.back() + 1e-9) {
      continue;
    }
    const double g_est = (est.at(s + step_m) - est.at(s - step_m)) / (2.0 * step_m);
    const double g_tru = (truth.at(s + step_m) - truth.at(s - step_m)) / (2.0 * step_m);
    r.distance_m.push_back(s);
    r.error_deg.push_back(std::abs(g_est - g_tru));
  }
  summarize(r);
  return r;
}

}  // namespace roadgrade
