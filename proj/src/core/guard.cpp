#include "safecomp/guard.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "safecomp/contracts_json.hpp"
#include "safecomp/error.hpp"
#include "safecomp/text.hpp"

namespace safecomp {

Guard::Guard(DnnContract contract, GuardConfig cfg) : contract_(std::move(contract)), cfg_(std::move(cfg)) {
  validate(contract_);
  if (cfg_.uncertainty_threshold && !(*cfg_.uncertainty_threshold > 0.0 && *cfg_.uncertainty_threshold <= 1.0))
    throw Error("uncertainty threshold must lie in (0, 1]");
}

Guard build_guard(const DnnContract& contract, const GuardConfig& cfg) { return Guard(contract, cfg); }

double uncertainty_from_scores(std::span<const double> scores, ScoreOrder order) {
  if (scores.empty()) throw Error("no scores");
  const double sign = order == ScoreOrder::max_best ? 1.0 : -1.0;
  double top = -INFINITY;
  for (double s : scores) top = std::max(top, sign * s);
  double z = 0.0;
  for (double s : scores) z += std::exp(sign * s - top);
  // The best label has exp(0) = 1 in the numerator.
  return std::clamp(1.0 - 1.0 / z, 0.0, 1.0);
}

double uncertainty(const Network& net, std::span<const double> x) {
  return uncertainty_from_scores(evaluate(net, x), net.score_order);
}

std::string_view to_string(DecisionKind k) { return k == DecisionKind::Covered ? "Covered" : "FailSafe"; }

std::string_view to_string(FailSafeReason r) {
  switch (r) {
    case FailSafeReason::none: return "none";
    case FailSafeReason::outside_regions: return "outside_regions";
    case FailSafeReason::uncertain: return "uncertain";
  }
  return "?";
}

GuardDecision guard_eval(const Guard& guard, const Network& net, std::span<const double> x) {
  if (x.size() != net.input_dim) throw DimensionError("guard input", net.input_dim, x.size());
  GuardDecision d;
  const auto scores = evaluate(net, x);
  d.label = best_label(scores, net.score_order);
  d.uncertainty = uncertainty_from_scores(scores, net.score_order);

  const RegionContract* hit = nullptr;
  for (const auto& r : guard.contract().regions)
    if (r.contains(x) && (!hit || r.id < hit->id)) hit = &r;
  if (!hit) {
    d.reason = FailSafeReason::outside_regions;
    d.action = guard.config().fail_safe_action;
    return d;
  }
  d.region_id = hit->id;
  std::optional<double> limit = guard.config().uncertainty_threshold;
  if (hit->uncertainty_max) limit = limit ? std::min(*limit, *hit->uncertainty_max) : *hit->uncertainty_max;
  if (limit && d.uncertainty > *limit) {
    d.reason = FailSafeReason::uncertain;
    d.action = guard.config().fail_safe_action;
    return d;
  }
  d.kind = DecisionKind::Covered;
  d.guarantee = hit->guarantee;
  return d;
}

std::size_t run_guard_stream(const Guard& guard, const Network& net, std::istream& csv, std::ostream& jsonl,
                             bool raw) {
  std::string line;
  std::size_t lineno = 0, rows = 0;
  bool header = false;
  while (std::getline(csv, line)) {
    ++lineno;
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const auto cells = text::split(body, ',');
    if (!header) {
      if (cells.size() != net.input_dim) throw ParseError(lineno, 1, "header width does not match the network input");
      header = true;
      continue;
    }
    if (cells.size() != net.input_dim) throw ParseError(lineno, 1, "row width does not match the header");
    std::vector<double> x;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      auto v = text::parse_double(text::trim(cells[i]));
      if (!v) throw ParseError(lineno, i + 1, "not a finite number");
      x.push_back(*v);
    }
    if (raw) x = normalize(net, x);
    const auto d = guard_eval(guard, net, x);
    Json out{{"kind", std::string(to_string(d.kind))}};
    out["region"] = d.region_id.empty() ? Json() : Json(d.region_id);
    out["label"] = net.labels[d.label];
    out["uncertainty"] = d.uncertainty;
    if (d.kind == DecisionKind::FailSafe) {
      out["reason"] = std::string(to_string(d.reason));
      out["action"] = d.action;
    }
    jsonl << out.dump() << '\n';
    ++rows;
  }
  return rows;
}

} // namespace safecomp
