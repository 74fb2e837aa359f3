#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "safecomp/network.hpp"
#include "safecomp/regions.hpp"

namespace safecomp {

// Axis-aligned box, closed on both ends.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  bool empty() const;
  bool contains(std::span<const double> x) const;
  std::size_t widest_dim() const;
  double width(std::size_t i) const { return hi[i] - lo[i]; }
  std::vector<double> center() const;

  bool operator==(const Box&) const = default;
};

// Smallest distance from any point of `box` to `c` under `metric`.
double min_dist_to_box(Metric metric, const Box& box, std::span<const double> c);

struct Affine {
  std::vector<double> coeff;
  double offset = 0.0;

  double eval(std::span<const double> x) const;
  double min_over(const Box& box) const;
  double max_over(const Box& box) const;
  // Lower bound on the minimum over box ∩ region (region may be null).
  double min_over(const Box& box, const Region* region) const;
  double max_over(const Box& box, const Region* region) const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Affine lower/upper functions of the input for every output score, valid
// for all x in the box (intersected with the clip region when one was given).
struct LinearBounds {
  std::vector<Affine> lower;
  std::vector<Affine> upper;
  // Concrete post-activation intervals, one vector per layer.
  std::vector<std::vector<Interval>> layer_intervals;
};

// Circumscribed box of the region, intersected with the network's normalized
// input domain. May be empty when the region lies outside the domain.
Box enclosing_box(const Region& region, const Network& net);
Box enclosing_box(const Region& region);

LinearBounds propagate_bounds(const Network& net, const Box& box, const Region* clip = nullptr);

// Certified lower bound of the amount by which `true_label` beats `target`
// over the box: s_target - s_true for min_best, s_true - s_target for
// max_best. Positive means `target` can never win against `true_label`.
double score_gap_bound(const LinearBounds& bounds, const Box& box, std::size_t true_label,
                       std::size_t target, ScoreOrder order, const Region* clip = nullptr);

struct Counterexample {
  std::vector<double> point;
  std::vector<double> scores;
};

// Randomized search for an in-region point the network classifies as
// `target`. Any returned point has been validated against the region's own
// metric and by a forward pass.
std::optional<Counterexample> find_counterexample(const Network& net, const Region& region,
                                                  const Box& box, std::size_t target, int effort,
                                                  std::uint64_t seed);

enum class Status { Safe, Unsafe, Unknown };
enum class UnknownReason { none, budget, min_box };

std::string_view to_string(Status s);
std::string_view to_string(UnknownReason r);
Status parse_status(std::string_view s);
UnknownReason parse_unknown_reason(std::string_view s);

struct VerifierOptions {
  std::size_t max_nodes = 50000;
  double max_seconds = 120.0;
  double min_box_width = 1e-4;
  double eps = 1e-6;
  std::uint64_t seed = 0;
  int search_effort = 8;
  // Fraction of branch-and-bound nodes whose bounds are re-checked by
  // sampling; a violated bound throws std::logic_error.
  double audit_fraction = 0.0;
};

struct VerificationTask {
  const Network& network;
  const Region& region;
  std::size_t target = 0;
  VerifierOptions options{};
};

struct VerifyStats {
  std::size_t nodes = 0;
  std::size_t max_depth = 0;
  std::size_t audited = 0;
  double elapsed_s = 0.0;
};

struct Verdict {
  Status status = Status::Unknown;
  std::optional<Counterexample> counterexample;
  VerifyStats stats;
  UnknownReason reason = UnknownReason::none;
};

Verdict verify_targeted(const VerificationTask& task);

enum class SafetySummary { FullySafe, TargetedSafe, NotSafe, Inconclusive };

std::string_view to_string(SafetySummary s);
SafetySummary parse_safety_summary(std::string_view s);

struct FullVerification {
  std::map<std::size_t, Verdict> per_target;
  SafetySummary summary = SafetySummary::Inconclusive;
  std::vector<std::size_t> safe_targets;
};

// FullySafe: every target Safe. TargetedSafe: some Safe, some Unsafe.
// NotSafe: some Unsafe, none Safe. Inconclusive: no Unsafe, not all Safe.
SafetySummary summarize(const std::map<std::size_t, Status>& statuses);

FullVerification verify_full(const Network& net, const Region& region,
                             const VerifierOptions& options = {});

} // namespace safecomp
