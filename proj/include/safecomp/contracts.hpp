#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "safecomp/regions.hpp"
#include "safecomp/verifier.hpp"

namespace safecomp {

// ---------------------------------------------------------------------------
// Temporal properties over finite-domain ports.

struct Literal {
  std::string port;
  std::string value;

  bool operator==(const Literal&) const = default;
};

// G (antecedent => consequent) or G (antecedent => F<=k (consequent)).
// An empty conjunction is `true`.
struct Property {
  std::vector<Literal> antecedent;
  std::vector<Literal> consequent;
  std::optional<int> deadline;

  bool bounded() const { return deadline.has_value(); }
  // Distinct port names in order of first appearance.
  std::vector<std::string> ports() const;

  bool operator==(const Property&) const = default;
};

Property parse_property(std::string_view text);
std::string render_property(const Property& p);

struct ComponentContract {
  std::string name;
  std::optional<Property> assume; // nullopt means `true`
  Property guarantee;

  std::vector<std::string> ports() const;

  bool operator==(const ComponentContract&) const = default;
};

std::string render_contract(const ComponentContract& c);
ComponentContract parse_component_contract(std::string_view json);

// ---------------------------------------------------------------------------
// Region contracts for a classifier.

struct LabelIs {
  std::string label;
  bool operator==(const LabelIs&) const = default;
};

struct LabelNotIn {
  std::vector<std::string> labels;
  bool operator==(const LabelNotIn&) const = default;
};

using Guarantee = std::variant<LabelIs, LabelNotIn>;

// Labels a classifier may output while honoring `g`, in `all_labels` order.
std::vector<std::string> allowed_labels(const Guarantee& g, std::span<const std::string> all_labels);

struct Provenance {
  std::string network;
  SafetySummary summary = SafetySummary::Inconclusive;
  std::size_t member_count = 0;
  std::string expected_label;
  std::map<std::string, Status> verdicts; // target label -> status

  bool operator==(const Provenance&) const = default;
};

struct RegionContract {
  std::string id;
  Metric metric = Metric::L2;
  std::vector<double> centroid;
  double radius = 0.0;
  Guarantee guarantee;
  std::optional<double> uncertainty_max;
  Provenance provenance;

  Region region(const std::vector<std::string>& labels) const;
  bool contains(std::span<const double> x) const;

  bool operator==(const RegionContract&) const = default;
};

struct AnnexCounterexample {
  std::string target;
  std::vector<double> point;
  std::vector<double> scores;

  bool operator==(const AnnexCounterexample&) const = default;
};

// Regions that were analysed but not proved; kept as evidence.
struct AnnexEntry {
  std::string id;
  Metric metric = Metric::L2;
  std::vector<double> centroid;
  double radius = 0.0;
  Provenance provenance;
  std::vector<AnnexCounterexample> counterexamples;

  bool operator==(const AnnexEntry&) const = default;
};

struct DnnContract {
  std::string network;
  std::vector<RegionContract> regions;
  std::vector<AnnexEntry> annex;

  bool operator==(const DnnContract&) const = default;
};

// Throws Error on duplicate region ids, a label_not_in set containing the
// expected label, negative radius or an uncertainty bound outside (0, 1].
void validate(const DnnContract& c);

struct RegionVerification {
  Region region;
  FullVerification result;
};

DnnContract emit_dnn_contract(const Network& net, std::span<const RegionVerification> results,
                              std::optional<double> uncertainty_max = std::nullopt);

std::string render_contract(const DnnContract& c);
DnnContract parse_dnn_contract(std::string_view json);

struct Determination {
  std::string region_id;
  Guarantee guarantee;
};

// Lowest-id region containing x, or nullopt when x is in no region.
std::optional<Determination> check_point_against_contract(const DnnContract& c,
                                                          std::span<const double> x);

} // namespace safecomp
