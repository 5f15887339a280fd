#pragma once

#include <vector>

#include "roadgrade/types.hpp"

namespace roadgrade {

/// Error distribution summary over the pointwise series.
struct ErrorReport {
  std::vector<double> distance_m;
  std::vector<double> error_deg;  // |est - truth| pointwise, >= 0
  double mean = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;

  std::size_t size() const { return error_deg.size(); }
};

/// Pointwise absolute grade error on the estimate's grid; the truth must
/// cover the estimate's extent.
ErrorReport absolute_error(const GradeProfile& est, const GradeProfile& truth);

/// Absolute error of the grade's spatial derivative (degrees per meter
/// basis), central differences at the given step. Offset-blind.
ErrorReport gradient_error(const GradeProfile& est, const GradeProfile& truth,
                           double step_m = 1.0);

}  // namespace roadgrade
