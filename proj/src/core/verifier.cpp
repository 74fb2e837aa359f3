#include "safecomp/verifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "safecomp/error.hpp"
#include "safecomp/rng.hpp"

namespace safecomp {

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Safe: return "Safe";
    case Status::Unsafe: return "Unsafe";
    case Status::Unknown: return "Unknown";
  }
  return "?";
}

std::string_view to_string(UnknownReason r) {
  switch (r) {
    case UnknownReason::none: return "none";
    case UnknownReason::budget: return "budget";
    case UnknownReason::min_box: return "min_box";
  }
  return "?";
}

Status parse_status(std::string_view s) {
  if (s == "Safe") return Status::Safe;
  if (s == "Unsafe") return Status::Unsafe;
  if (s == "Unknown") return Status::Unknown;
  throw Error("unknown verdict status '" + std::string(s) + "'");
}

UnknownReason parse_unknown_reason(std::string_view s) {
  if (s == "none") return UnknownReason::none;
  if (s == "budget") return UnknownReason::budget;
  if (s == "min_box") return UnknownReason::min_box;
  throw Error("unknown reason '" + std::string(s) + "'");
}

std::string_view to_string(SafetySummary s) {
  switch (s) {
    case SafetySummary::FullySafe: return "FullySafe";
    case SafetySummary::TargetedSafe: return "TargetedSafe";
    case SafetySummary::NotSafe: return "NotSafe";
    case SafetySummary::Inconclusive: return "Inconclusive";
  }
  return "?";
}

SafetySummary parse_safety_summary(std::string_view s) {
  if (s == "FullySafe") return SafetySummary::FullySafe;
  if (s == "TargetedSafe") return SafetySummary::TargetedSafe;
  if (s == "NotSafe") return SafetySummary::NotSafe;
  if (s == "Inconclusive") return SafetySummary::Inconclusive;
  throw Error("unknown safety summary '" + std::string(s) + "'");
}

bool Box::empty() const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) return true;
  return false;
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

std::size_t Box::widest_dim() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < lo.size(); ++i)
    if (width(i) > width(best)) best = i;
  return best;
}

std::vector<double> Box::center() const {
  std::vector<double> c(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

double min_dist_to_box(Metric metric, const Box& box, std::span<const double> c) {
  double acc = 0.0;
  for (std::size_t i = 0; i < box.dim(); ++i) {
    const double g = std::max({box.lo[i] - c[i], 0.0, c[i] - box.hi[i]});
    switch (metric) {
      case Metric::L1: acc += g; break;
      case Metric::L2: acc += g * g; break;
      case Metric::Linf: acc = std::max(acc, g); break;
    }
  }
  return metric == Metric::L2 ? std::sqrt(acc) : acc;
}

double Affine::eval(std::span<const double> x) const {
  double v = offset;
  for (std::size_t i = 0; i < coeff.size(); ++i) v += coeff[i] * x[i];
  return v;
}

double Affine::min_over(const Box& box) const {
  double v = offset;
  for (std::size_t i = 0; i < coeff.size(); ++i)
    v += coeff[i] * (coeff[i] >= 0.0 ? box.lo[i] : box.hi[i]);
  return v;
}

double Affine::max_over(const Box& box) const {
  double v = offset;
  for (std::size_t i = 0; i < coeff.size(); ++i)
    v += coeff[i] * (coeff[i] >= 0.0 ? box.hi[i] : box.lo[i]);
  return v;
}

namespace {

// Norm dual to the region metric, used for the exact minimum of an affine
// function over the ball: min a.x = a.c - r * ||a||_dual.
double dual_norm(Metric metric, std::span<const double> a) {
  double acc = 0.0;
  switch (metric) {
    case Metric::L1:
      for (double v : a) acc = std::max(acc, std::abs(v));
      return acc;
    case Metric::L2:
      for (double v : a) acc += v * v;
      return std::sqrt(acc);
    case Metric::Linf:
      for (double v : a) acc += std::abs(v);
      return acc;
  }
  return acc;
}

} // namespace

double Affine::min_over(const Box& box, const Region* region) const {
  double v = min_over(box);
  if (region) v = std::max(v, eval(region->centroid) - region->radius * dual_norm(region->metric, coeff));
  return v;
}

double Affine::max_over(const Box& box, const Region* region) const {
  double v = max_over(box);
  if (region) v = std::min(v, eval(region->centroid) + region->radius * dual_norm(region->metric, coeff));
  return v;
}

Box enclosing_box(const Region& region) {
  Box b;
  b.lo.resize(region.centroid.size());
  b.hi.resize(region.centroid.size());
  for (std::size_t i = 0; i < region.centroid.size(); ++i) {
    b.lo[i] = region.centroid[i] - region.radius;
    b.hi[i] = region.centroid[i] + region.radius;
  }
  return b;
}

Box enclosing_box(const Region& region, const Network& net) {
  if (region.centroid.size() != net.input_dim)
    throw DimensionError("enclosing_box", net.input_dim, region.centroid.size());
  Box b = enclosing_box(region);
  const auto dmin = net.normalized_min();
  const auto dmax = net.normalized_max();
  for (std::size_t i = 0; i < b.dim(); ++i) {
    b.lo[i] = std::max(b.lo[i], dmin[i]);
    b.hi[i] = std::min(b.hi[i], dmax[i]);
  }
  return b;
}

LinearBounds propagate_bounds(const Network& net, const Box& box, const Region* clip) {
  if (box.dim() != net.input_dim) throw DimensionError("propagate_bounds", net.input_dim, box.dim());
  const std::size_t d = net.input_dim;

  std::vector<Affine> lower(d), upper(d);
  for (std::size_t i = 0; i < d; ++i) {
    lower[i].coeff.assign(d, 0.0);
    lower[i].coeff[i] = 1.0;
    upper[i] = lower[i];
  }

  LinearBounds out;
  for (const Layer& layer : net.layers) {
    std::vector<Affine> nl(layer.out), nu(layer.out);
    std::vector<Interval> intervals(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      Affine& L = nl[o];
      Affine& U = nu[o];
      L.coeff.assign(d, 0.0);
      U.coeff.assign(d, 0.0);
      L.offset = U.offset = layer.bias[o];
      for (std::size_t j = 0; j < layer.in; ++j) {
        const double w = layer.weight(o, j);
        if (w == 0.0) continue;
        const Affine& lo_src = w > 0.0 ? lower[j] : upper[j];
        const Affine& hi_src = w > 0.0 ? upper[j] : lower[j];
        for (std::size_t k = 0; k < d; ++k) {
          L.coeff[k] += w * lo_src.coeff[k];
          U.coeff[k] += w * hi_src.coeff[k];
        }
        L.offset += w * lo_src.offset;
        U.offset += w * hi_src.offset;
      }
      const double l = L.min_over(box, clip);
      const double u = U.max_over(box, clip);

      if (layer.activation == Activation::relu) {
        if (u <= 0.0) {
          std::fill(L.coeff.begin(), L.coeff.end(), 0.0);
          std::fill(U.coeff.begin(), U.coeff.end(), 0.0);
          L.offset = U.offset = 0.0;
          intervals[o] = {0.0, 0.0};
        } else if (l >= 0.0) {
          intervals[o] = {l, u};
        } else {
          // Upper: chord through (l, 0) and (u, u). Lower: 0 or identity,
          // whichever has the smaller worst-case gap.
          const double slope = u / (u - l);
          for (auto& c : U.coeff) c *= slope;
          U.offset = slope * (U.offset - l);
          if (u < -l) {
            std::fill(L.coeff.begin(), L.coeff.end(), 0.0);
            L.offset = 0.0;
          }
          intervals[o] = {0.0, u};
        }
      } else {
        intervals[o] = {l, u};
      }
    }
    lower = std::move(nl);
    upper = std::move(nu);
    out.layer_intervals.push_back(std::move(intervals));
  }
  out.lower = std::move(lower);
  out.upper = std::move(upper);
  return out;
}

double score_gap_bound(const LinearBounds& bounds, const Box& box, std::size_t true_label,
                       std::size_t target, ScoreOrder order, const Region* clip) {
  if (true_label == target) throw Error("score_gap_bound: labels must differ");
  // margin >= winner_lower - loser_upper, where `winner` must stay ahead.
  const Affine& a = order == ScoreOrder::min_best ? bounds.lower[target] : bounds.lower[true_label];
  const Affine& b = order == ScoreOrder::min_best ? bounds.upper[true_label] : bounds.upper[target];
  Affine diff;
  diff.coeff.resize(a.coeff.size());
  for (std::size_t i = 0; i < a.coeff.size(); ++i) diff.coeff[i] = a.coeff[i] - b.coeff[i];
  diff.offset = a.offset - b.offset;
  return diff.min_over(box, clip);
}

namespace {

// How far `target` is ahead of its best competitor; > 0 means it wins.
double advantage(std::span<const double> scores, std::size_t target, ScoreOrder order) {
  double best_other = order == ScoreOrder::min_best ? std::numeric_limits<double>::infinity()
                                                    : -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == target) continue;
    best_other = order == ScoreOrder::min_best ? std::min(best_other, scores[j])
                                               : std::max(best_other, scores[j]);
  }
  return order == ScoreOrder::min_best ? best_other - scores[target] : scores[target] - best_other;
}

// Pull x into the region along the ray to the centroid, then into the box.
// Returns false when the result is still outside either set.
bool make_feasible(std::vector<double>& x, const Region& region, const Box& box) {
  const double d = dist(region.metric, x, region.centroid);
  if (d > region.radius) {
    const double s = region.radius / d * (1.0 - 1e-12);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = region.centroid[i] + (x[i] - region.centroid[i]) * s;
  }
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], box.lo[i], box.hi[i]);
  return region_membership(region, x);
}

} // namespace

std::optional<Counterexample> find_counterexample(const Network& net, const Region& region,
                                                  const Box& box, std::size_t target, int effort,
                                                  std::uint64_t seed) {
  if (effort <= 0 || box.empty()) return std::nullopt;
  Rng rng(seed);
  const std::size_t d = box.dim();

  auto accept = [&](const std::vector<double>& x,
                    std::vector<double>& scores) -> std::optional<Counterexample> {
    if (!region_membership(region, x) || !box.contains(x)) return std::nullopt;
    if (best_label(scores, net.score_order) != target) return std::nullopt;
    return Counterexample{x, scores};
  };

  std::vector<double> best_x;
  double best_adv = -std::numeric_limits<double>::infinity();

  for (int s = 0; s <= effort; ++s) {
    std::vector<double> x(d);
    if (s == 0) {
      x = box.center();
    } else {
      for (std::size_t i = 0; i < d; ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
    }
    if (!make_feasible(x, region, box)) continue;
    auto scores = evaluate(net, x);
    if (auto cex = accept(x, scores)) return cex;
    const double adv = advantage(scores, target, net.score_order);
    if (adv > best_adv) {
      best_adv = adv;
      best_x = std::move(x);
    }
  }
  if (best_x.empty()) return std::nullopt;

  // Coordinate descent on the target's advantage, shrinking the step when no
  // coordinate move helps.
  std::vector<double> step(d);
  for (std::size_t i = 0; i < d; ++i) step[i] = 0.25 * box.width(i);
  const int max_moves = effort * static_cast<int>(2 * d + 2);
  int moves = 0;
  while (moves < max_moves) {
    bool improved = false;
    for (std::size_t i = 0; i < d && moves < max_moves; ++i) {
      if (step[i] <= 0.0) continue;
      for (double dir : {1.0, -1.0}) {
        ++moves;
        std::vector<double> x = best_x;
        x[i] += dir * step[i];
        if (!make_feasible(x, region, box)) continue;
        auto scores = evaluate(net, x);
        if (auto cex = accept(x, scores)) return cex;
        const double adv = advantage(scores, target, net.score_order);
        if (adv > best_adv) {
          best_adv = adv;
          best_x = std::move(x);
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      double largest = 0.0;
      for (auto& s : step) {
        s *= 0.5;
        largest = std::max(largest, s);
      }
      if (largest < 1e-12) break;
    }
  }
  return std::nullopt;
}

namespace {

struct Node {
  Box box;
  std::size_t depth = 0;
  std::uint64_t index = 0;
};

void audit_bounds(const Network& net, const Region& region, const Box& box,
                  const LinearBounds& bounds, std::uint64_t seed) {
  Rng rng(seed);
  for (int s = 0; s < 16; ++s) {
    std::vector<double> x(box.dim());
    for (std::size_t i = 0; i < box.dim(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
    if (!region_membership(region, x)) continue;
    auto y = evaluate(net, x);
    for (std::size_t o = 0; o < y.size(); ++o) {
      const double lo = bounds.lower[o].eval(x);
      const double hi = bounds.upper[o].eval(x);
      const double tol = 1e-9 * (1.0 + std::abs(y[o]));
      if (lo > y[o] + tol || hi < y[o] - tol)
        throw std::logic_error("linear bound violated during verification");
    }
  }
}

} // namespace

Verdict verify_targeted(const VerificationTask& task) {
  const Network& net = task.network;
  const Region& region = task.region;
  const VerifierOptions& opt = task.options;

  if (region.centroid.size() != net.input_dim)
    throw DimensionError("verify_targeted region", net.input_dim, region.centroid.size());
  if (task.target >= net.num_labels()) throw Error("verify_targeted: target label out of range");
  if (region.expected_label >= net.num_labels())
    throw Error("verify_targeted: expected label out of range");
  if (task.target == region.expected_label)
    throw Error("verify_targeted: target must differ from the region's expected label");
  if (opt.max_nodes == 0 || !(opt.max_seconds > 0.0))
    throw Error("verify_targeted: budget must be positive");

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  Verdict verdict;
  const Region* clip = region.metric == Metric::Linf ? nullptr : &region;

  std::deque<Node> work;
  std::uint64_t created = 0;
  Box root = enclosing_box(region, net);
  if (!root.empty()) work.push_back({std::move(root), 0, created++});

  bool hit_min_box = false;
  while (!work.empty()) {
    if (verdict.stats.nodes >= opt.max_nodes || elapsed() > opt.max_seconds) {
      verdict.status = Status::Unknown;
      verdict.reason = UnknownReason::budget;
      verdict.stats.elapsed_s = elapsed();
      return verdict;
    }
    Node node = std::move(work.front());
    work.pop_front();
    ++verdict.stats.nodes;
    verdict.stats.max_depth = std::max(verdict.stats.max_depth, node.depth);

    if (clip && min_dist_to_box(region.metric, node.box, region.centroid) > region.radius) continue;

    const auto bounds = propagate_bounds(net, node.box, clip);
    const std::uint64_t node_seed = mix_seed(opt.seed, node.index);
    if (opt.audit_fraction > 0.0 && Rng(node_seed ^ 0xa5a5a5a5ULL).uniform() < opt.audit_fraction) {
      audit_bounds(net, region, node.box, bounds, node_seed);
      ++verdict.stats.audited;
    }

    bool discharged = false;
    for (std::size_t j = 0; j < net.num_labels() && !discharged; ++j) {
      if (j == task.target) continue;
      discharged = score_gap_bound(bounds, node.box, j, task.target, net.score_order, clip) > opt.eps;
    }
    if (discharged) continue;

    if (auto cex = find_counterexample(net, region, node.box, task.target, opt.search_effort, node_seed)) {
      verdict.status = Status::Unsafe;
      verdict.counterexample = std::move(cex);
      verdict.stats.elapsed_s = elapsed();
      return verdict;
    }

    const std::size_t axis = node.box.widest_dim();
    if (node.box.width(axis) < opt.min_box_width) {
      hit_min_box = true;
      continue;
    }
    const double mid = 0.5 * (node.box.lo[axis] + node.box.hi[axis]);
    Node left{node.box, node.depth + 1, created++};
    Node right{std::move(node.box), node.depth + 1, created++};
    left.box.hi[axis] = mid;
    right.box.lo[axis] = mid;
    work.push_back(std::move(left));
    work.push_back(std::move(right));
  }

  verdict.status = hit_min_box ? Status::Unknown : Status::Safe;
  verdict.reason = hit_min_box ? UnknownReason::min_box : UnknownReason::none;
  verdict.stats.elapsed_s = elapsed();
  return verdict;
}

SafetySummary summarize(const std::map<std::size_t, Status>& statuses) {
  std::size_t safe = 0, unsafe = 0;
  for (const auto& [t, s] : statuses) {
    if (s == Status::Safe) ++safe;
    if (s == Status::Unsafe) ++unsafe;
  }
  if (safe == statuses.size()) return SafetySummary::FullySafe;
  if (unsafe > 0) return safe > 0 ? SafetySummary::TargetedSafe : SafetySummary::NotSafe;
  return SafetySummary::Inconclusive;
}

FullVerification verify_full(const Network& net, const Region& region, const VerifierOptions& options) {
  FullVerification result;
  std::map<std::size_t, Status> statuses;
  for (std::size_t t = 0; t < net.num_labels(); ++t) {
    if (t == region.expected_label) continue;
    VerifierOptions opt = options;
    opt.seed = mix_seed(options.seed, t);
    auto v = verify_targeted({net, region, t, opt});
    statuses[t] = v.status;
    if (v.status == Status::Safe) result.safe_targets.push_back(t);
    result.per_target.emplace(t, std::move(v));
  }
  result.summary = summarize(statuses);
  return result;
}

} // namespace safecomp
