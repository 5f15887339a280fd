#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "roadgrade/elevation.hpp"
#include "roadgrade/io.hpp"
#include "roadgrade/synth.hpp"

using namespace roadgrade;
using namespace roadgrade::testing;

namespace {

ElevationProfile profile_from(std::vector<double> d, std::vector<double> e) {
  ElevationProfile p;
  p.distance_m = std::move(d);
  p.elevation_m = std::move(e);
  return p;
}

PitchSeries series_on(const std::vector<double>& s, const std::vector<double>& theta) {
  PitchSeries p;
  p.trip_id = "t";
  p.source = PitchSource::Gyro;
  p.s_m = s;
  p.theta_deg = theta;
  p.valid.assign(s.size(), 1);
  return p;
}

}  // namespace

TEST_CASE("grade_from_elevation arithmetic") {
  SUBCASE("flat samples give zero grade") {
    const auto g = grade_from_elevation(profile_from({0, 30, 60}, {100, 100, 100}));
    for (double v : g.grade_deg) CHECK(v == 0.0);
  }
  SUBCASE("one meter over thirty") {
    const auto g = grade_from_elevation(profile_from({0, 30}, {100, 101}));
    REQUIRE(g.size() == 1);
    CHECK(g.grade_deg[0] == doctest::Approx(rad2deg(std::asin(1.0 / 30.0))).epsilon(1e-6));
    CHECK(g.grade_deg[0] == doctest::Approx(1.91021).epsilon(1e-4 / 1.91));
    CHECK(g.midpoint_m[0] == doctest::Approx(15.0));
    CHECK_FALSE(g.clamped[0]);
  }
  SUBCASE("impossible rise clamps to 90 degrees and flags") {
    const auto g = grade_from_elevation(profile_from({0, 30}, {100, 135}));
    REQUIRE(g.size() == 1);
    CHECK(g.grade_deg[0] == doctest::Approx(90.0));
    CHECK(g.clamped[0] == 1);
  }
  SUBCASE("zero spacing is rejected") {
    CHECK_THROWS_AS((void)grade_from_elevation(profile_from({0, 0, 30}, {100, 101, 102})),
                    ValidationError);
  }
  SUBCASE("fewer than two samples is rejected") {
    CHECK_THROWS_AS((void)grade_from_elevation(profile_from({0}, {100})), ValidationError);
  }
}

TEST_CASE("shape_similarity fixed points") {
  const std::vector<double> p{1.0, 2.0, 1.5, 0.5};
  SUBCASE("identical curves") { CHECK(shape_similarity(p, p) == doctest::Approx(1.0)); }
  SUBCASE("constant offset is invisible") {
    std::vector<double> q(p);
    for (auto& x : q) x += 2.3;
    CHECK(shape_similarity(p, q) == doctest::Approx(1.0));
  }
  SUBCASE("unit variance halves the score") {
    const std::vector<double> a{1.0, -1.0, 1.0, -1.0};
    const std::vector<double> b{0.0, 0.0, 0.0, 0.0};
    CHECK(shape_similarity(a, b) == doctest::Approx(0.5));
  }
  SUBCASE("length mismatch throws") {
    const std::vector<double> shorter{1.0, 2.0};
    CHECK_THROWS_AS((void)shape_similarity(p, shorter), std::invalid_argument);
  }
}

TEST_CASE("shape_similarity invariances") {
  SynthRng rng(5);
  std::vector<double> p(40), q(40);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = rng.uniform(-3, 3);
    q[i] = rng.uniform(-3, 3);
  }
  SUBCASE("symmetric in its arguments") {
    CHECK(shape_similarity(p, q) == shape_similarity(q, p));
  }
  SUBCASE("invariant under adding constants to either side") {
    std::vector<double> pc(p), qc(q);
    for (auto& x : pc) x += 7.7;
    for (auto& x : qc) x -= 4.2;
    CHECK(shape_similarity(pc, q) == doctest::Approx(shape_similarity(p, q)).epsilon(1e-12));
    CHECK(shape_similarity(p, qc) == doctest::Approx(shape_similarity(p, q)).epsilon(1e-12));
  }
}

namespace {

// Elevation whose grade equals the given shape on clean stretches and is
// jagged elsewhere.
struct SimWorld {
  ElevationGrade elev;
  PitchSeries gyro;
};

SimWorld similarity_world(double length_m, double clean_lo, double clean_hi,
                          std::uint64_t seed = 3) {
  SynthRng rng(seed);
  std::vector<double> d, e;
  double elev = 100.0;
  const double spacing = 30.0;
  auto true_grade = [](double s) { return 1.5 * std::sin(2.0 * M_PI * s / 600.0); };
  for (double s = 0.0; s <= length_m; s += spacing) {
    d.push_back(s);
    e.push_back(elev);
    double g = true_grade(s + spacing / 2.0);
    if (s + spacing / 2.0 < clean_lo || s + spacing / 2.0 > clean_hi) {
      g += rng.uniform(-8.0, 8.0);  // occluded / off-road samples
    }
    elev += std::sin(deg2rad(g)) * spacing;
  }
  SimWorld w;
  w.elev = grade_from_elevation(profile_from(std::move(d), std::move(e)));

  std::vector<double> s, th;
  for (double x = 0.0; x <= length_m; x += 5.0) {
    s.push_back(x);
    th.push_back(true_grade(x));
  }
  w.gyro = series_on(s, th);
  return w;
}

}  // namespace

TEST_CASE("extract_regions finds the clean stretch") {
  const auto w = similarity_world(1500.0, 300.0, 800.0);
  const auto regions = extract_regions(w.elev, {w.gyro}, {});
  REQUIRE(regions.size() == 1);
  CHECK(regions[0].x_strt >= 200.0);
  CHECK(regions[0].x_strt <= 400.0);
  CHECK(regions[0].x_end >= 700.0);
  CHECK(regions[0].x_end <= 900.0);
  CHECK(regions[0].similarity >= 0.7);
}

TEST_CASE("extract_regions returns nothing for fully corrupted elevation") {
  const auto w = similarity_world(1500.0, -1.0, -1.0);
  CHECK(extract_regions(w.elev, {w.gyro}, {}).empty());
}

TEST_CASE("extract_regions spans the route when elevation matches everywhere") {
  const auto w = similarity_world(1500.0, -1.0, 2000.0);
  const auto regions = extract_regions(w.elev, {w.gyro}, {});
  REQUIRE(regions.size() == 1);
  CHECK(regions[0].x_end - regions[0].x_strt > 0.85 * 1500.0);
}

TEST_CASE("region coverage near 14% when the world is built that way") {
  // Clean on [1000, 2260] out of 9 km: the usable fraction from the study
  // this mirrors.
  const auto w = similarity_world(9000.0, 1000.0, 2260.0, 11);
  const auto regions = extract_regions(w.elev, {w.gyro}, {});
  double covered = 0.0;
  for (const auto& r : regions) covered += r.x_end - r.x_strt;
  CHECK(covered / 9000.0 == doctest::Approx(0.14).epsilon(0.05 / 0.14));
}

TEST_CASE("region_offset recovers anchor-vs-elevation offsets") {
  const auto w = similarity_world(1500.0, 0.0, 1500.0);
  const SimilarityRegion region{200.0, 900.0, 1.0, std::nullopt};

  std::vector<RouteAnchor> anchors;
  for (double s = 250.0; s <= 850.0; s += 30.0) {
    anchors.push_back({s, w.elev.at(s) + 2.0, anchors.size()});
  }
  SUBCASE("constant 2 degree offset is exact") {
    const auto off = region_offset(anchors, w.elev, region);
    REQUIRE(off.has_value());
    CHECK(*off == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("zero offset is exact") {
    auto zero = anchors;
    for (auto& a : zero) a.grade_deg -= 2.0;
    const auto off = region_offset(zero, w.elev, region);
    REQUIRE(off.has_value());
    CHECK(*off == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("noisy anchors average out") {
    SynthRng rng(8);
    std::vector<RouteAnchor> noisy;
    for (double s = 250.0; s <= 820.0; s += 30.0) {  // 20 anchors
      noisy.push_back({s, w.elev.at(s) + 2.0 + rng.normal(0.3), noisy.size()});
    }
    REQUIRE(noisy.size() == 20);
    const auto off = region_offset(noisy, w.elev, region);
    REQUIRE(off.has_value());
    CHECK(*off == doctest::Approx(2.0).epsilon(0.15 / 2.0));
  }
  SUBCASE("too few in-region anchors is unusable") {
    const std::vector<RouteAnchor> two{{300.0, 1.0, 0}, {400.0, 1.0, 1}};
    CHECK_FALSE(region_offset(two, w.elev, region).has_value());
  }
}

namespace {

class FakeFetcher : public ElevationFetcher {
public:
  int calls = 0;
  std::vector<double> fetch(const std::vector<LatLon>& points) override {
    ++calls;
    std::vector<double> out;
    for (const auto& p : points) out.push_back(100.0 + p.lat + p.lon);
    return out;
  }
};

}  // namespace

TEST_CASE("the caching fetcher only asks upstream for misses") {
  const auto cache = fs::temp_directory_path() / "roadgrade_elev_cache.json";
  fs::remove(cache);
  FakeFetcher upstream;
  CachedElevationFetcher fetcher(upstream, cache.string());

  const std::vector<LatLon> pts{{42.1, -78.5}, {42.2, -78.6}};
  const auto first = fetcher.fetch(pts);
  CHECK(upstream.calls == 1);
  CHECK(first[0] == doctest::Approx(100.0 + 42.1 - 78.5));

  // Same points again: served from disk, upstream untouched.
  const auto second = fetcher.fetch(pts);
  CHECK(upstream.calls == 1);
  CHECK(second == first);

  // A fresh fetcher over the same cache file still needs no upstream.
  FakeFetcher upstream2;
  CachedElevationFetcher fetcher2(upstream2, cache.string());
  (void)fetcher2.fetch(pts);
  CHECK(upstream2.calls == 0);

  // A new point triggers exactly one upstream call for the miss.
  std::vector<LatLon> more = pts;
  more.push_back({42.3, -78.7});
  (void)fetcher2.fetch(more);
  CHECK(upstream2.calls == 1);
  fs::remove(cache);
}

TEST_CASE("apply_offsets corrects by the nearest usable region") {
  std::vector<SimilarityRegion> regions{
      {100.0, 300.0, 0.9, 1.0},   // center 200
      {700.0, 900.0, 0.9, 3.0},   // center 800
  };
  SUBCASE("single region applies everywhere") {
    const std::vector<SimilarityRegion> one{{100.0, 300.0, 0.9, 2.0}};
    const std::vector<RouteAnchor> anchors{{50.0, 5.0, 0}, {950.0, 1.0, 1}};
    const auto res = apply_offsets(anchors, one);
    CHECK(res.corrected);
    CHECK(res.corrected_grade_deg[0] == doctest::Approx(3.0));
    CHECK(res.corrected_grade_deg[1] == doctest::Approx(-1.0));
  }
  SUBCASE("nearest region wins") {
    const std::vector<RouteAnchor> anchors{{650.0, 10.0, 0}};
    const auto res = apply_offsets(anchors, regions);
    CHECK(res.corrected_grade_deg[0] == doctest::Approx(7.0));  // region 2 offset 3
  }
  SUBCASE("no usable regions passes through flagged") {
    std::vector<SimilarityRegion> unusable(regions);
    for (auto& r : unusable) r.offset_deg.reset();
    const std::vector<RouteAnchor> anchors{{650.0, 10.0, 0}};
    const auto res = apply_offsets(anchors, unusable);
    CHECK_FALSE(res.corrected);
    CHECK(res.corrected_grade_deg[0] == doctest::Approx(10.0));
  }
  SUBCASE("apply then un-apply is the identity") {
    SynthRng rng(14);
    std::vector<RouteAnchor> anchors;
    for (double s = 0.0; s <= 1000.0; s += 40.0) {
      anchors.push_back({s, rng.uniform(-4, 4), anchors.size()});
    }
    const auto res = apply_offsets(anchors, regions);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const double center1 = 200.0, center2 = 800.0;
      const double off = std::abs(anchors[i].route_m - center1) <=
                                 std::abs(anchors[i].route_m - center2)
                             ? 1.0
                             : 3.0;
      CHECK(res.corrected_grade_deg[i] + off ==
            doctest::Approx(anchors[i].grade_deg).epsilon(1e-12));
    }
  }
}
