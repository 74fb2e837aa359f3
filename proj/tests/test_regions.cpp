#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "safecomp/error.hpp"
#include "safecomp/regions.hpp"
#include "support/fixtures.hpp"

using namespace safecomp;

namespace {

double wcss(const std::vector<std::vector<double>>& pts, const std::vector<std::size_t>& assign,
            std::size_t k) {
  double total = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> m(pts[0].size(), 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (assign[i] == c) {
        ++n;
        for (std::size_t d = 0; d < m.size(); ++d) m[d] += pts[i][d];
      }
    if (!n) continue;
    for (auto& v : m) v /= n;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (assign[i] == c)
        for (std::size_t d = 0; d < m.size(); ++d) total += (pts[i][d] - m[d]) * (pts[i][d] - m[d]);
  }
  return total;
}

LabeledDataset two_blobs(std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset data;
  data.attributes = {"a", "b"};
  for (std::size_t l = 0; l < 2; ++l)
    for (int k = 0; k < 30; ++k) {
      data.points.push_back({(l ? 5.0 : 0.0) + 0.3 * rng.normal(), 0.3 * rng.normal()});
      data.labels.push_back(l);
    }
  return data;
}

void check_region_invariants(const LabeledDataset& data, const DiscoveryResult& res,
                             bool separating) {
  std::set<std::size_t> seen;
  for (const auto& r : res.regions) {
    CHECK(r.radius > 0.0);
    CHECK(r.member_count == r.member_indices.size());
    for (auto i : r.member_indices) {
      CHECK(data.labels[i] == r.expected_label);
      CHECK(region_membership(r, data.points[i]));
      CHECK(seen.insert(i).second);
    }
    if (separating)
      for (std::size_t i = 0; i < data.size(); ++i)
        if (data.labels[i] != r.expected_label) CHECK_FALSE(region_membership(r, data.points[i]));
  }
}

} // namespace

TEST_CASE("dist") {
  std::vector<double> a{0, 0}, b{0.5, 0.4};
  for (auto m : {Metric::L1, Metric::L2, Metric::Linf}) CHECK(dist(m, a, a) == 0.0);
  CHECK(dist(Metric::L1, a, b) == doctest::Approx(0.9));
  CHECK(dist(Metric::Linf, a, b) == 0.5);
  CHECK(dist(Metric::L2, a, b) == doctest::Approx(std::sqrt(0.41)));
  CHECK_THROWS_AS(dist(Metric::L1, a, std::vector<double>{1.0}), DimensionError);

  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(4), q(4);
    for (auto& v : p) v = rng.normal();
    for (auto& v : q) v = rng.normal();
    for (auto m : {Metric::L1, Metric::L2, Metric::Linf})
      CHECK(dist(m, p, q) == doctest::Approx(fixtures::reference_dist(m, p, q)).epsilon(1e-14));
  }
}

TEST_CASE("region membership is boundary inclusive") {
  Region coc{"coc1", {0.19, 0.31, 0.28, 0.33, 0.33}, 0.28, Metric::L1, 0, 0, {}};
  CHECK(region_membership(coc, coc.centroid));

  Region r{"r", {0, 0}, 1.0, Metric::L1, 0, 0, {}};
  CHECK(region_membership(r, std::vector<double>{0.5, 0.4}));
  CHECK_FALSE(region_membership(r, std::vector<double>{0.6, 0.5}));
  CHECK(region_membership(r, std::vector<double>{0.25, 0.75}));
  CHECK(region_membership(r, std::vector<double>{-1.0, 0.0}));
  CHECK_THROWS_AS(region_membership(r, std::vector<double>{0.0}), DimensionError);
}

TEST_CASE("kmeans") {
  SUBCASE("k = 1 gives the mean") {
    std::vector<std::vector<double>> pts{{0, 0}, {2, 0}, {1, 3}};
    auto res = kmeans(pts, 1, 1);
    CHECK(res.centroids[0][0] == doctest::Approx(1.0));
    CHECK(res.centroids[0][1] == doctest::Approx(1.0));
  }
  SUBCASE("k = n puts every point in its own cluster") {
    std::vector<std::vector<double>> pts{{0, 0}, {2, 0}, {1, 3}, {5, 5}};
    auto res = kmeans(pts, 4, 9);
    std::set<std::size_t> used(res.assignment.begin(), res.assignment.end());
    CHECK(used.size() == 4);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(res.centroids[res.assignment[i]] == pts[i]);
  }
  SUBCASE("two separated blobs") {
    auto data = two_blobs(17);
    auto res = kmeans(data.points, 2, 3);
    for (std::size_t i = 0; i < data.size(); ++i)
      CHECK(res.assignment[i] == res.assignment[data.labels[i] == 0 ? 0 : 30]);
    CHECK(res.assignment[0] != res.assignment[30]);
    CHECK(wcss(data.points, res.assignment, 2) <= wcss(data.points, data.labels, 2) + 1e-9);
  }
  SUBCASE("centroids are member means") {
    auto data = fixtures::blob_dataset(4, 3, 3, 20, 0.2);
    auto res = kmeans(data.points, 5, 12);
    for (std::size_t c = 0; c < 5; ++c) {
      std::vector<double> m(3, 0.0);
      std::size_t n = 0;
      for (std::size_t i = 0; i < data.size(); ++i)
        if (res.assignment[i] == c) {
          ++n;
          for (int d = 0; d < 3; ++d) m[d] += data.points[i][d];
        }
      REQUIRE(n > 0);
      for (int d = 0; d < 3; ++d) CHECK(res.centroids[c][d] == doctest::Approx(m[d] / n));
    }
  }
  SUBCASE("k larger than n is an error") {
    std::vector<std::vector<double>> pts{{0.0}};
    CHECK_THROWS_AS(kmeans(pts, 2, 0), Error);
  }
}

TEST_CASE("compute_radius") {
  LabeledDataset data;
  data.attributes = {"a", "b"};
  data.points = {{0.1, 0.0}, {0.0, 0.3}, {0.4, 0.0}};
  data.labels = {0, 0, 1};
  std::vector<double> c{0, 0};

  std::vector<std::vector<double>> single{{0, 0}};
  CHECK(compute_radius(single, c, Metric::L1, data, 0, RadiusStrategy::tight) == 0.0);

  std::vector<std::vector<double>> members{data.points[0], data.points[1]};
  CHECK(compute_radius(members, c, Metric::L1, data, 0, RadiusStrategy::tight) == doctest::Approx(0.3));
  // Foreign point at L1 distance 0.4: min(0.3, 0.2).
  CHECK(compute_radius(members, c, Metric::L1, data, 0, RadiusStrategy::separating) ==
        doctest::Approx(0.2));
}

TEST_CASE("discover_regions") {
  SUBCASE("single label yields one region with every point") {
    auto data = fixtures::blob_dataset(2, 2, 1, 25, 0.1);
    auto res = discover_regions(data, Metric::L2);
    REQUIRE(res.regions.size() == 1);
    CHECK(res.regions[0].member_count == 25);
  }
  SUBCASE("two blobs give pure regions covering the data") {
    auto data = two_blobs(5);
    for (auto m : {Metric::L1, Metric::L2, Metric::Linf}) {
      auto res = discover_regions(data, m);
      CHECK(res.regions.size() >= 2);
      check_region_invariants(data, res, true);
      std::size_t covered = 0;
      for (const auto& r : res.regions) covered += r.member_count;
      std::size_t dropped = res.singletons.size();
      for (const auto& d : res.dropped_clusters) dropped += d.size();
      CHECK(covered + dropped <= data.size());
      CHECK(covered >= data.size() - dropped - 10);
    }
  }
  SUBCASE("interleaved XOR labels terminate with pure regions and singletons") {
    LabeledDataset data;
    data.attributes = {"a", "b"};
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) {
        data.points.push_back({i * 0.1, j * 0.1});
        data.labels.push_back(static_cast<std::size_t>((i + j) % 2));
      }
    DiscoveryConfig cfg;
    cfg.radius = RadiusStrategy::tight;
    auto res = discover_regions(data, Metric::L2, cfg);
    check_region_invariants(data, res, false);
    CHECK(res.singletons.size() > 0);
  }
  SUBCASE("coincident points with conflicting labels") {
    LabeledDataset data;
    data.attributes = {"a"};
    data.points = {{1.0}, {1.0}, {1.0}, {1.0}, {3.0}, {3.1}, {3.2}};
    data.labels = {0, 1, 0, 1, 0, 0, 0};
    auto res = discover_regions(data, Metric::L1);
    check_region_invariants(data, res, true);
    for (const auto& r : res.regions)
      for (auto i : r.member_indices) CHECK(i >= 4);
  }
  SUBCASE("determinism") {
    auto data = fixtures::blob_dataset(9, 3, 3, 40, 0.15);
    auto a = discover_regions(data, Metric::L1);
    auto b = discover_regions(data, Metric::L1);
    CHECK(a.regions == b.regions);
  }
  SUBCASE("empty dataset") {
    LabeledDataset data;
    CHECK_THROWS_AS(discover_regions(data, Metric::L2), Error);
  }
}

TEST_CASE("dataset csv") {
  std::vector<std::string> labels{"red", "green"};
  auto data = parse_dataset_csv("rho,theta,label\n0.5,1,red\n\n-2,3e-3,green\n", labels);
  CHECK(data.attributes == std::vector<std::string>{"rho", "theta"});
  CHECK(data.labels == std::vector<std::size_t>{0, 1});
  auto back = parse_dataset_csv(render_dataset_csv(data, labels), labels);
  CHECK(back.points == data.points);
  CHECK(back.labels == data.labels);
  CHECK_THROWS_AS(parse_dataset_csv("a,label\n1,blue\n", labels), ParseError);
  CHECK_THROWS_AS(parse_dataset_csv("a,label\n1,2,red\n", labels), ParseError);
}
