#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace safecomp {

struct Network;

enum class Metric { L1, L2, Linf };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s); // accepts L1/l1, L2/l2, Linf/linf

double dist(Metric metric, std::span<const double> a, std::span<const double> b);

// Labeled inputs, already in the network's normalized space.
struct LabeledDataset {
  std::vector<std::string> attributes;
  std::vector<std::vector<double>> points;
  std::vector<std::size_t> labels;

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return attributes.size(); }
};

// Throws Error when points/labels disagree in count or dimension.
void validate(const LabeledDataset& data);

// CSV with header `a1,...,an,label`; the label column is resolved by name
// against `label_names`.
LabeledDataset parse_dataset_csv(std::string_view csv, std::span<const std::string> label_names);
std::string render_dataset_csv(const LabeledDataset& data, std::span<const std::string> label_names);

// Centroid/radius ball in normalized input space. Boundary is inclusive.
struct Region {
  std::string id;
  std::vector<double> centroid;
  double radius = 0.0;
  Metric metric = Metric::L2;
  std::size_t expected_label = 0;
  std::size_t member_count = 0;
  std::vector<std::size_t> member_indices;

  bool operator==(const Region&) const = default;
};

bool region_membership(const Region& region, std::span<const double> x);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  std::vector<std::vector<double>> centroids;
  int iterations = 0;
};

// Lloyd iteration on squared L2 with seeded k-means++ initialization.
KMeansResult kmeans(std::span<const std::vector<double>> points, std::size_t k,
                    std::uint64_t seed, int max_iter = 100);

enum class RadiusStrategy { tight, separating };

std::string_view to_string(RadiusStrategy s);
RadiusStrategy parse_radius_strategy(std::string_view s);

// `tight`: largest member distance to the centroid. `separating`: also at
// most half the distance from the centroid to the nearest dataset point whose
// label differs from `label`.
double compute_radius(std::span<const std::vector<double>> members,
                      std::span<const double> centroid, Metric metric,
                      const LabeledDataset& data, std::size_t label, RadiusStrategy strategy);

struct DiscoveryConfig {
  std::uint64_t seed = 42;
  std::size_t min_members = 3;
  RadiusStrategy radius = RadiusStrategy::separating;
  int max_iter = 100;
};

struct DiscoveryResult {
  std::vector<Region> regions;
  // Indices of points that ended up alone in a cluster.
  std::vector<std::size_t> singletons;
  // Pure clusters that were not emitted: too few members, or zero radius.
  std::vector<std::vector<std::size_t>> dropped_clusters;
};

DiscoveryResult discover_regions(const LabeledDataset& data, Metric metric,
                                 const DiscoveryConfig& cfg = {});

} // namespace safecomp
