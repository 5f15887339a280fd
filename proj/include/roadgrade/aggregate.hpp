#pragma once

#include <span>
#include <string>
#include <vector>

#include "roadgrade/types.hpp"

namespace roadgrade {

/// One source's (trip's) observations on a shared bin grid. Missing bins
/// are simply absent from the index list.
struct SourceObservations {
  std::string source_id;
  std::vector<int> bins;       // strictly increasing bin ids
  std::vector<double> values;  // degrees, parallel to bins
};

struct CrhOptions {
  double tol = 1e-6;
  int max_iter = 100;
};

struct CrhResult {
  std::vector<int> bins;        // union of observed bins, ascending
  std::vector<double> truths;   // parallel to bins
  std::vector<double> weights;  // per source, positive
  int iterations = 0;
  std::vector<double> objective;  // weighted total loss after each iteration
};

/**
 * Conflict-resolution truth discovery for continuous observations.
 *
 * Alternates per-bin weighted means (truths) with the log-ratio weight
 * update w_s = log(sum_s' loss_s' / loss_s), where a source's loss is its
 * squared deviation from the truths, each bin normalized by the spread of
 * observations in that bin. Converges when no truth moves more than tol.
 */
CrhResult crh(const std::vector<SourceObservations>& sources, const CrhOptions& opts = {});

enum class AggMethod { Crh, Mean };

AggMethod agg_method_from_string(const std::string& name);
const char* to_string(AggMethod m);

/// Cross-trip anchor aggregation on a fixed bin grid; the output bin set is
/// the union of the inputs' bins.
std::vector<AnchorSnapshot> aggregate_anchors(
    const std::vector<std::vector<AnchorSnapshot>>& per_trip, double bin_width_m,
    const std::string& segment_id, AggMethod method = AggMethod::Crh);

/// Cross-trip profile aggregation on a fine uniform grid covering the
/// intersection of the inputs' extents.
GradeProfile aggregate_profiles(const std::vector<GradeProfile>& per_trip, double bin_width_m,
                                AggMethod method = AggMethod::Crh);

}  // namespace roadgrade
