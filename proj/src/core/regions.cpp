#include "safecomp/regions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <set>
#include <sstream>

#include "safecomp/error.hpp"
#include "safecomp/rng.hpp"
#include "safecomp/text.hpp"

namespace safecomp {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::L1: return "L1";
    case Metric::L2: return "L2";
    case Metric::Linf: return "Linf";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  if (s == "L1" || s == "l1") return Metric::L1;
  if (s == "L2" || s == "l2") return Metric::L2;
  if (s == "Linf" || s == "linf" || s == "LINF") return Metric::Linf;
  throw Error("unknown metric '" + std::string(s) + "' (expected L1, L2 or Linf)");
}

std::string_view to_string(RadiusStrategy s) {
  return s == RadiusStrategy::tight ? "tight" : "separating";
}

RadiusStrategy parse_radius_strategy(std::string_view s) {
  if (s == "tight") return RadiusStrategy::tight;
  if (s == "separating") return RadiusStrategy::separating;
  throw Error("unknown radius strategy '" + std::string(s) + "'");
}

double dist(Metric metric, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dist", a.size(), b.size());
  double acc = 0.0;
  switch (metric) {
    case Metric::L1:
      for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
      return acc;
    case Metric::L2:
      for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(acc);
    case Metric::Linf:
      for (std::size_t i = 0; i < a.size(); ++i) acc = std::max(acc, std::abs(a[i] - b[i]));
      return acc;
  }
  return acc;
}

bool region_membership(const Region& region, std::span<const double> x) {
  if (x.size() != region.centroid.size())
    throw DimensionError("region_membership", region.centroid.size(), x.size());
  return dist(region.metric, x, region.centroid) <= region.radius;
}

void validate(const LabeledDataset& data) {
  if (data.points.size() != data.labels.size())
    throw DimensionError("dataset labels", data.points.size(), data.labels.size());
  for (const auto& p : data.points)
    if (p.size() != data.dim()) throw DimensionError("dataset point", data.dim(), p.size());
}

LabeledDataset parse_dataset_csv(std::string_view csv, std::span<const std::string> label_names) {
  LabeledDataset data;
  auto lines = text::split(csv, '\n');
  bool have_header = false;
  std::size_t ncols = 0;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    auto line = text::trim(lines[ln]);
    if (line.empty()) continue;
    auto cells = text::split(line, ',');
    if (!have_header) {
      if (cells.size() < 2) throw ParseError(ln + 1, 0, "header needs at least one attribute and a label column");
      for (std::size_t c = 0; c + 1 < cells.size(); ++c)
        data.attributes.emplace_back(text::trim(cells[c]));
      ncols = cells.size();
      have_header = true;
      continue;
    }
    if (cells.size() != ncols)
      throw ParseError(ln + 1, 0, "expected " + std::to_string(ncols) + " columns, got " +
                                      std::to_string(cells.size()));
    std::vector<double> p;
    p.reserve(ncols - 1);
    for (std::size_t c = 0; c + 1 < ncols; ++c) {
      auto v = text::parse_double(cells[c]);
      if (!v) throw ParseError(ln + 1, c + 1, "malformed number '" + std::string(text::trim(cells[c])) + "'");
      p.push_back(*v);
    }
    auto name = text::trim(cells.back());
    auto it = std::find(label_names.begin(), label_names.end(), name);
    if (it == label_names.end())
      throw ParseError(ln + 1, ncols, "unknown label '" + std::string(name) + "'");
    data.points.push_back(std::move(p));
    data.labels.push_back(static_cast<std::size_t>(it - label_names.begin()));
  }
  if (!have_header) throw ParseError(1, 0, "empty dataset file");
  return data;
}

std::string render_dataset_csv(const LabeledDataset& data, std::span<const std::string> label_names) {
  std::ostringstream os;
  for (const auto& a : data.attributes) os << a << ',';
  os << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    os << text::join_doubles(data.points[i]) << ',' << label_names[data.labels[i]] << '\n';
  return os.str();
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

std::size_t nearest(std::span<const std::vector<double>> centroids, std::span<const double> p,
                    double* best_d = nullptr) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(centroids[c], p);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  if (best_d) *best_d = bd;
  return best;
}

std::vector<double> mean_of(std::span<const std::vector<double>> points,
                            std::span<const std::size_t> idx) {
  std::vector<double> m(points[idx.front()].size(), 0.0);
  for (auto i : idx)
    for (std::size_t d = 0; d < m.size(); ++d) m[d] += points[i][d];
  for (auto& v : m) v /= static_cast<double>(idx.size());
  return m;
}

} // namespace

KMeansResult kmeans(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed,
                    int max_iter) {
  const std::size_t n = points.size();
  if (k == 0) throw Error("kmeans: k must be at least 1");
  if (k > n)
    throw Error("kmeans: k (" + std::to_string(k) + ") exceeds number of points (" +
                std::to_string(n) + ")");

  Rng rng(seed);
  KMeansResult res;

  // k-means++ seeding.
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.below(n);
  res.centroids.push_back(points[first]);
  chosen[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points[i], points[first]);
  while (res.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += d2[i];
    std::size_t pick = n;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        if (r < d2[i]) break;
        r -= d2[i];
      }
    } else {
      // Every remaining point coincides with a chosen centroid.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) free.push_back(i);
      pick = free[rng.below(free.size())];
    }
    chosen[pick] = true;
    res.centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points[i], points[pick]));
  }

  res.assignment.assign(n, 0);
  std::vector<std::size_t> prev(n, k);
  for (int it = 0; it < std::max(max_iter, 1); ++it) {
    res.iterations = it + 1;
    std::vector<double> own_d(n);
    for (std::size_t i = 0; i < n; ++i) res.assignment[i] = nearest(res.centroids, points[i], &own_d[i]);

    // Re-seed empty clusters from the point farthest from its centroid.
    std::vector<std::size_t> counts(k, 0);
    for (auto a : res.assignment) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double fd = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[res.assignment[i]] > 1 && own_d[i] > fd) {
          fd = own_d[i];
          far = i;
        }
      }
      if (far == n) continue;
      --counts[res.assignment[far]];
      res.assignment[far] = c;
      own_d[far] = 0.0;
      counts[c] = 1;
    }

    for (std::size_t c = 0; c < k; ++c) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n; ++i)
        if (res.assignment[i] == c) idx.push_back(i);
      if (!idx.empty()) res.centroids[c] = mean_of(points, idx);
    }
    if (res.assignment == prev) break;
    prev = res.assignment;
  }
  return res;
}

double compute_radius(std::span<const std::vector<double>> members,
                      std::span<const double> centroid, Metric metric,
                      const LabeledDataset& data, std::size_t label, RadiusStrategy strategy) {
  double tight = 0.0;
  for (const auto& m : members) tight = std::max(tight, dist(metric, m, centroid));
  if (strategy == RadiusStrategy::tight) return tight;
  double foreign = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.labels[i] != label) foreign = std::min(foreign, dist(metric, data.points[i], centroid));
  return std::min(tight, 0.5 * foreign);
}

DiscoveryResult discover_regions(const LabeledDataset& data, Metric metric,
                                 const DiscoveryConfig& cfg) {
  validate(data);
  if (data.size() == 0) throw Error("discover_regions: empty dataset");

  DiscoveryResult result;
  std::uint64_t split_counter = 0;
  auto next_seed = [&] { return mix_seed(cfg.seed, split_counter++); };

  auto subset = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::vector<double>> pts;
    pts.reserve(idx.size());
    for (auto i : idx) pts.push_back(data.points[i]);
    return pts;
  };

  auto split = [&](const std::vector<std::size_t>& idx, std::size_t k) {
    auto pts = subset(idx);
    auto km = kmeans(pts, k, next_seed(), cfg.max_iter);
    std::vector<std::vector<std::size_t>> parts(k);
    for (std::size_t j = 0; j < idx.size(); ++j) parts[km.assignment[j]].push_back(idx[j]);
    return parts;
  };

  std::deque<std::vector<std::size_t>> work;
  {
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const std::size_t distinct = std::set<std::size_t>(data.labels.begin(), data.labels.end()).size();
    const std::size_t k0 = std::min(distinct, all.size());
    if (k0 <= 1) work.push_back(std::move(all));
    else
      for (auto& p : split(all, k0)) work.push_back(std::move(p));
  }

  while (!work.empty()) {
    auto idx = std::move(work.front());
    work.pop_front();
    if (idx.empty()) continue;

    const std::size_t label = data.labels[idx.front()];
    const bool pure = std::all_of(idx.begin(), idx.end(),
                                  [&](std::size_t i) { return data.labels[i] == label; });
    if (!pure) {
      // Re-seeding keeps both halves non-empty, so sizes strictly shrink.
      auto parts = split(idx, 2);
      work.push_back(std::move(parts[0]));
      work.push_back(std::move(parts[1]));
      continue;
    }

    if (idx.size() == 1) {
      result.singletons.push_back(idx.front());
      continue;
    }
    if (idx.size() < cfg.min_members) {
      result.dropped_clusters.push_back(std::move(idx));
      continue;
    }

    auto pts = subset(idx);
    std::vector<std::size_t> all_local(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) all_local[j] = j;
    auto centroid = mean_of(pts, all_local);
    const double r = compute_radius(pts, centroid, metric, data, label, cfg.radius);

    std::vector<std::size_t> inside;
    for (auto i : idx)
      if (dist(metric, data.points[i], centroid) <= r) inside.push_back(i);
    if (!(r > 0.0) || inside.size() < cfg.min_members) {
      result.dropped_clusters.push_back(std::move(idx));
      continue;
    }

    Region region;
    char buf[32];
    std::snprintf(buf, sizeof buf, "R%05zu", result.regions.size() + 1);
    region.id = buf;
    region.centroid = std::move(centroid);
    region.radius = r;
    region.metric = metric;
    region.expected_label = label;
    region.member_count = inside.size();
    region.member_indices = std::move(inside);
    result.regions.push_back(std::move(region));
  }
  return result;
}

} // namespace safecomp
