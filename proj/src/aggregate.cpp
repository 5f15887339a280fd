#include "roadgrade/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace roadgrade {

namespace {

constexpr double kLossFloor = 1e-12;

struct BinTable {
  std::vector<int> bins;                      // sorted union
  std::vector<std::vector<double>> values;    // [bin][source-observation]
  std::vector<std::vector<std::size_t>> who;  // [bin][source index]
};

BinTable build_table(const std::vector<SourceObservations>& sources) {
  std::set<int> bin_set;
  for (const auto& src : sources) {
    if (src.bins.size() != src.values.size()) {
      throw std::invalid_argument("crh: bins/values length mismatch for source " + src.source_id);
    }
    bin_set.insert(src.bins.begin(), src.bins.end());
  }
  BinTable t;
  t.bins.assign(bin_set.begin(), bin_set.end());
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < t.bins.size(); ++i) index[t.bins[i]] = i;
  t.values.resize(t.bins.size());
  t.who.resize(t.bins.size());
  for (std::size_t s = 0; s < sources.size(); ++s) {
    for (std::size_t k = 0; k < sources[s].bins.size(); ++k) {
      const std::size_t b = index[sources[s].bins[k]];
      t.values[b].push_back(sources[s].values[k]);
      t.who[b].push_back(s);
    }
  }
  return t;
}

// Per-bin spread used to normalize squared losses. Single-observation bins
// fall back to the global spread over all multi-observation bins.
std::vector<double> bin_sigmas(const BinTable& t) {
  std::vector<double> sigma(t.bins.size(), 0.0);
  double global_sq = 0.0;
  std::size_t global_n = 0;
  for (std::size_t b = 0; b < t.bins.size(); ++b) {
    const auto& v = t.values[b];
    if (v.size() < 2) continue;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sigma[b] = std::sqrt(ss / static_cast<double>(v.size()));
    global_sq += ss;
    global_n += v.size();
  }
  const double global = global_n > 0 ? std::sqrt(global_sq / static_cast<double>(global_n)) : 1.0;
  const double floor_sigma = std::max(1e-6, global * 1e-3);
  for (auto& s : sigma) {
    if (s <= floor_sigma) s = std::max(global, floor_sigma);
  }
  return sigma;
}

}  // namespace

CrhResult crh(const std::vector<SourceObservations>& sources, const CrhOptions& opts) {
  if (sources.empty()) throw std::invalid_argument("crh: no sources");
  const std::size_t ns = sources.size();

  BinTable table = build_table(sources);
  const std::size_t nb = table.bins.size();
  if (nb == 0) throw std::invalid_argument("crh: no observations");

  CrhResult res;
  res.bins = table.bins;
  res.truths.assign(nb, 0.0);
  res.weights.assign(ns, 1.0);

  if (ns == 1) {
    for (std::size_t b = 0; b < nb; ++b) res.truths[b] = table.values[b].front();
    res.iterations = 1;
    return res;
  }

  const auto sigma = bin_sigmas(table);

  std::vector<double> losses(ns, 0.0);
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    // Truth update: per-bin weighted mean.
    double max_change = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < table.values[b].size(); ++k) {
        const double w = res.weights[table.who[b][k]];
        num += w * table.values[b][k];
        den += w;
      }
      const double truth = num / den;
      max_change = std::max(max_change, std::abs(truth - res.truths[b]));
      res.truths[b] = truth;
    }

    // Normalized squared loss per source.
    std::fill(losses.begin(), losses.end(), 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t k = 0; k < table.values[b].size(); ++k) {
        const double d = (table.values[b][k] - res.truths[b]) / sigma[b];
        losses[table.who[b][k]] += d * d;
      }
    }
    double total = 0.0;
    for (double l : losses) total += l;

    if (total <= kLossFloor) {
      // All sources agree with the truths exactly; weights stay uniform.
      std::fill(res.weights.begin(), res.weights.end(), 1.0);
      res.iterations = iter;
      res.objective.push_back(0.0);
      break;
    }

    for (std::size_t s = 0; s < ns; ++s) {
      res.weights[s] = std::max(1e-6, std::log(total / std::max(losses[s], kLossFloor)));
    }

    double objective = 0.0;
    for (std::size_t s = 0; s < ns; ++s) objective += res.weights[s] * losses[s];
    res.objective.push_back(objective);

    res.iterations = iter;
    if (iter > 1 && max_change < opts.tol) break;
  }
  return res;
}

AggMethod agg_method_from_string(const std::string& name) {
  if (name == "crh") return AggMethod::Crh;
  if (name == "mean") return AggMethod::Mean;
  throw std::invalid_argument("unknown aggregation method '" + name + "' (expected crh|mean)");
}

const char* to_string(AggMethod m) { return m == AggMethod::Crh ? "crh" : "mean"; }

namespace {

CrhResult plain_mean(const std::vector<SourceObservations>& sources) {
  BinTable table = build_table(sources);
  CrhResult res;
  res.bins = table.bins;
  res.truths.resize(table.bins.size());
  res.weights.assign(sources.size(), 1.0);
  res.iterations = 1;
  for (std::size_t b = 0; b < table.bins.size(); ++b) {
    double sum = 0.0;
    for (double v : table.values[b]) sum += v;
    res.truths[b] = sum / static_cast<double>(table.values[b].size());
  }
  return res;
}

CrhResult aggregate(const std::vector<SourceObservations>& sources, AggMethod method) {
  return method == AggMethod::Crh ? crh(sources) : plain_mean(sources);
}

}  // namespace

std::vector<AnchorSnapshot> aggregate_anchors(
    const std::vector<std::vector<AnchorSnapshot>>& per_trip, double bin_width_m,
    const std::string& segment_id, AggMethod method) {
  if (!(bin_width_m > 0.0)) throw std::invalid_argument("aggregate_anchors: bad bin width");

  std::vector<SourceObservations> sources;
  for (const auto& trip : per_trip) {
    if (trip.empty()) continue;
    // Re-bin onto the aggregation grid (usually identical to the anchor grid).
    std::map<int, std::pair<double, int>> bins;
    for (const auto& a : trip) {
      const int k = static_cast<int>(std::floor(a.bin_center_m / bin_width_m));
      auto& [sum, count] = bins[k];
      sum += a.grade_deg;
      ++count;
    }
    SourceObservations src;
    src.source_id = trip.front().trip_id;
    for (const auto& [k, agg] : bins) {
      src.bins.push_back(k);
      src.values.push_back(agg.first / agg.second);
    }
    sources.push_back(std::move(src));
  }
  if (sources.empty()) return {};

  const CrhResult res = aggregate(sources, method);

  // Count contributing trips per bin.
  std::map<int, int> counts;
  for (const auto& src : sources) {
    for (int b : src.bins) counts[b] += 1;
  }
  std::vector<AnchorSnapshot> out;
  out.reserve(res.bins.size());
  for (std::size_t i = 0; i < res.bins.size(); ++i) {
    AnchorSnapshot snap;
    snap.segment_id = segment_id;
    snap.trip_id = "aggregated";
    snap.bin_center_m = (static_cast<double>(res.bins[i]) + 0.5) * bin_width_m;
    snap.grade_deg = res.truths[i];
    snap.sample_count = counts[res.bins[i]];
    out.push_back(std::move(snap));
  }
  return out;
}

GradeProfile aggregate_profiles(const std::vector<GradeProfile>& per_trip, double bin_width_m,
                                AggMethod method) {
  if (per_trip.empty()) throw std::invalid_argument("aggregate_profiles: no profiles");
  if (!(bin_width_m > 0.0)) throw std::invalid_argument("aggregate_profiles: bad bin width");

  // Union coverage: each profile contributes only bins inside its own
  // extent, so partial trips still add what they saw.
  std::vector<SourceObservations> sources;
  sources.reserve(per_trip.size());
  for (const auto& p : per_trip) {
    if (p.empty()) throw std::invalid_argument("aggregate_profiles: empty profile");
    SourceObservations src;
    src.source_id = p.segment_id;
    const int b0 = static_cast<int>(std::ceil(p.distance_m.front() / bin_width_m - 1e-9));
    const int b1 = static_cast<int>(std::floor(p.distance_m.back() / bin_width_m + 1e-9));
    for (int b = b0; b <= b1; ++b) {
      const double s = static_cast<double>(b) * bin_width_m;
      src.bins.push_back(b);
      src.values.push_back(p.at(s));
    }
    sources.push_back(std::move(src));
  }

  const CrhResult res = aggregate(sources, method);
  GradeProfile out;
  out.segment_id = per_trip.front().segment_id;
  out.resolution_m = bin_width_m;
  out.distance_m.reserve(res.bins.size());
  out.grade_deg.reserve(res.bins.size());
  for (std::size_t i = 0; i < res.bins.size(); ++i) {
    out.distance_m.push_back(static_cast<double>(res.bins[i]) * bin_width_m);
    out.grade_deg.push_back(res.truths[i]);
  }
  return out;
}

}  // namespace roadgrade
