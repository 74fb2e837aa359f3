#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "safecomp/contracts.hpp"
#include "safecomp/network.hpp"

namespace safecomp {

struct GuardConfig {
  std::string fail_safe_action = "fail_safe";
  // Global bound on the uncertainty proxy; a region's own uncertainty_max
  // also applies when present. The tighter of the two wins.
  std::optional<double> uncertainty_threshold;
};

class Guard {
public:
  Guard(DnnContract contract, GuardConfig cfg);

  const DnnContract& contract() const { return contract_; }
  const GuardConfig& config() const { return cfg_; }

private:
  DnnContract contract_;
  GuardConfig cfg_;
};

// Throws Error on duplicate region ids or a threshold outside (0, 1].
Guard build_guard(const DnnContract& contract, const GuardConfig& cfg = {});

// 1 - max softmax probability of the goodness-oriented scores (negated for
// min_best networks). Lies in [0, 1 - 1/k].
double uncertainty(const Network& net, std::span<const double> x);
double uncertainty_from_scores(std::span<const double> scores, ScoreOrder order);

enum class DecisionKind { Covered, FailSafe };
enum class FailSafeReason { none, outside_regions, uncertain };

std::string_view to_string(DecisionKind k);
std::string_view to_string(FailSafeReason r);

struct GuardDecision {
  DecisionKind kind = DecisionKind::FailSafe;
  FailSafeReason reason = FailSafeReason::none;
  std::string region_id;                // containing region, empty when outside
  std::optional<Guarantee> guarantee;   // set when Covered
  std::size_t label = 0;                // label the network actually computed
  double uncertainty = 0.0;
  std::string action;                   // fail-safe action, empty when Covered
};

GuardDecision guard_eval(const Guard& guard, const Network& net, std::span<const double> x);

// Reads CSV rows (header first) of normalized inputs, or raw inputs when
// `raw`, and writes one JSON object per row. Returns the number of rows.
std::size_t run_guard_stream(const Guard& guard, const Network& net, std::istream& csv, std::ostream& jsonl,
                             bool raw = false);

} // namespace safecomp
