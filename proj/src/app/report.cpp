#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "safecomp/app.hpp"
#include "safecomp/error.hpp"
#include "safecomp/text.hpp"

namespace safecomp {

namespace {

template <class F>
auto json_checked(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string(what) + ": " + e.what());
  }
}

std::size_t label_of(const std::vector<std::string>& labels, const std::string& name) {
  auto it = std::find(labels.begin(), labels.end(), name);
  if (it == labels.end()) throw Error("unknown label '" + name + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

Json region_json(const Region& r, const std::vector<std::string>& labels) {
  return Json{{"id", r.id},
              {"metric", std::string(to_string(r.metric))},
              {"centroid", r.centroid},
              {"radius", r.radius},
              {"expected_label", labels.at(r.expected_label)},
              {"member_count", r.member_count}};
}

Region region_from(const Json& j, const std::vector<std::string>& labels) {
  Region r;
  r.id = j.at("id").get<std::string>();
  r.metric = parse_metric(j.at("metric").get<std::string>());
  r.centroid = j.at("centroid").get<std::vector<double>>();
  r.radius = j.at("radius").get<double>();
  if (!(r.radius >= 0.0)) throw Error("region " + r.id + ": negative radius");
  r.expected_label = label_of(labels, j.at("expected_label").get<std::string>());
  r.member_count = j.value("member_count", std::size_t{0});
  if (j.contains("members")) r.member_indices = j.at("members").get<std::vector<std::size_t>>();
  return r;
}

void require(const Json& j, const char* key, bool ok_type, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(where + ": missing '" + key + "'");
  if (!ok_type) throw Error(where + ": '" + key + "' has the wrong type");
}

} // namespace

Json regions_to_json(std::span<const Region> regions, const std::vector<std::string>& labels) {
  std::vector<const Region*> sorted;
  for (const auto& r : regions) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  Json arr = Json::array();
  for (const auto* r : sorted) {
    Json jr = region_json(*r, labels);
    if (!r->member_indices.empty()) jr["members"] = r->member_indices;
    arr.push_back(std::move(jr));
  }
  return Json{{"labels", labels}, {"regions", std::move(arr)}};
}

std::vector<Region> regions_from_json(const Json& j, const std::vector<std::string>& labels) {
  return json_checked("regions file", [&] {
    std::vector<Region> out;
    std::set<std::string> ids;
    for (const auto& jr : j.at("regions")) {
      out.push_back(region_from(jr, labels));
      if (!ids.insert(out.back().id).second) throw Error("duplicate region id '" + out.back().id + "'");
    }
    return out;
  });
}

std::pair<double, double> project_polar(double rho, double theta) {
  if (!(rho >= 0.0)) throw Error("rho must be non-negative");
  return {rho * std::cos(theta), rho * std::sin(theta)};
}

Json verification_report(const Network& net, std::span<const RegionVerification> results,
                         const ReportContext& ctx) {
  Json regions = Json::array();
  Json cexs = Json::array();
  Json per_region_s = Json::object();
  std::map<SafetySummary, std::size_t> counts;
  std::set<std::string> ids;
  std::vector<const RegionVerification*> sorted;
  for (const auto& rv : results) sorted.push_back(&rv);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->region.id < b->region.id; });

  for (const auto* rv : sorted) {
    const Region& r = rv->region;
    if (!ids.insert(r.id).second) throw Error("duplicate region id '" + r.id + "'");
    ++counts[rv->result.summary];
    Json jr = region_json(r, net.labels);
    jr["summary"] = std::string(to_string(rv->result.summary));
    Json safe = Json::array();
    for (auto t : rv->result.safe_targets) safe.push_back(net.labels.at(t));
    jr["safe_targets"] = std::move(safe);
    Json targets = Json::array();
    double elapsed = 0.0;
    for (const auto& [t, v] : rv->result.per_target) {
      elapsed += v.stats.elapsed_s;
      Json jt{{"label", net.labels.at(t)},
              {"status", std::string(to_string(v.status))},
              {"reason", std::string(to_string(v.reason))},
              {"nodes", v.stats.nodes},
              {"max_depth", v.stats.max_depth}};
      if (v.counterexample) {
        Json jc{{"point", v.counterexample->point}, {"scores", v.counterexample->scores}};
        Json entry{{"region", r.id}, {"target", net.labels.at(t)}, {"point", v.counterexample->point}};
        if (ctx.polar) {
          const auto raw = denormalize(net, v.counterexample->point);
          if (raw.size() >= 2 && raw[0] >= 0.0) {
            auto [down, cross] = project_polar(raw[0], raw[1]);
            entry["downrange"] = down;
            entry["crossrange"] = cross;
          }
        }
        jt["counterexample"] = std::move(jc);
        cexs.push_back(std::move(entry));
      }
      targets.push_back(std::move(jt));
    }
    jr["targets"] = std::move(targets);
    per_region_s[r.id] = elapsed;
    regions.push_back(std::move(jr));
  }

  Json summary{{"regions", sorted.size()},
               {"fully_safe", counts[SafetySummary::FullySafe]},
               {"targeted_safe", counts[SafetySummary::TargetedSafe]},
               {"not_safe", counts[SafetySummary::NotSafe]},
               {"inconclusive", counts[SafetySummary::Inconclusive]}};
  return Json{{"tool", kToolName},
              {"version", kToolVersion},
              {"command", ctx.command},
              {"config", ctx.config},
              {"network", net.name},
              {"labels", net.labels},
              {"regions", std::move(regions)},
              {"summary", std::move(summary)},
              {"counterexamples", std::move(cexs)},
              {"runtime", Json{{"workers", ctx.workers}, {"elapsed_s", ctx.elapsed_s}, {"per_region_s", per_region_s}}}};
}

std::vector<RegionVerification> results_from_report(const Json& report, const Network& net) {
  return json_checked("verification report", [&] {
    std::vector<RegionVerification> out;
    for (const auto& jr : report.at("regions")) {
      RegionVerification rv{region_from(jr, net.labels), {}};
      std::map<std::size_t, Status> statuses;
      for (const auto& jt : jr.at("targets")) {
        const std::size_t t = label_of(net.labels, jt.at("label").get<std::string>());
        Verdict v;
        v.status = parse_status(jt.at("status").get<std::string>());
        v.reason = parse_unknown_reason(jt.value("reason", std::string("none")));
        v.stats.nodes = jt.value("nodes", std::size_t{0});
        v.stats.max_depth = jt.value("max_depth", std::size_t{0});
        if (jt.contains("counterexample")) {
          const auto& jc = jt.at("counterexample");
          v.counterexample = Counterexample{jc.at("point").get<std::vector<double>>(),
                                            jc.at("scores").get<std::vector<double>>()};
        }
        if (v.status == Status::Safe) rv.result.safe_targets.push_back(t);
        statuses[t] = v.status;
        rv.result.per_target[t] = std::move(v);
      }
      rv.result.summary = summarize(statuses);
      const auto recorded = parse_safety_summary(jr.at("summary").get<std::string>());
      if (recorded != rv.result.summary) throw Error("region " + rv.region.id + ": summary disagrees with its verdicts");
      out.push_back(std::move(rv));
    }
    return out;
  });
}

Json mask_runtime(Json report) {
  if (report.is_object()) report.erase("runtime");
  return report;
}

void check_report_schema(const Json& r) {
  const std::string top = "report";
  require(r, "tool", r.is_object() && r.contains("tool") && r["tool"].is_string(), top);
  require(r, "version", r.contains("version") && r["version"].is_string(), top);
  require(r, "command", r.contains("command") && r["command"].is_string(), top);
  require(r, "config", r.contains("config") && r["config"].is_object(), top);
  require(r, "runtime", r.contains("runtime") && r["runtime"].is_object(), top);
  const auto& rt = r["runtime"];
  require(rt, "elapsed_s", rt.contains("elapsed_s") && rt["elapsed_s"].is_number(), "runtime");
  const std::string cmd = r["command"].get<std::string>();

  if (cmd == "verify") {
    require(r, "regions", r.contains("regions") && r["regions"].is_array(), top);
    require(r, "summary", r.contains("summary") && r["summary"].is_object(), top);
    require(r, "counterexamples", r.contains("counterexamples") && r["counterexamples"].is_array(), top);
    std::string prev;
    bool first = true;
    std::size_t total = 0;
    for (const auto& jr : r["regions"]) {
      require(jr, "id", jr.contains("id") && jr["id"].is_string(), "region");
      const std::string id = jr["id"].get<std::string>();
      if (!first && !(prev < id)) throw Error("report: region ids are not unique and sorted at '" + id + "'");
      prev = id;
      first = false;
      const std::string where = "region " + id;
      require(jr, "metric", jr.contains("metric") && jr["metric"].is_string(), where);
      require(jr, "centroid", jr.contains("centroid") && jr["centroid"].is_array(), where);
      require(jr, "radius", jr.contains("radius") && jr["radius"].is_number(), where);
      require(jr, "summary", jr.contains("summary") && jr["summary"].is_string(), where);
      parse_safety_summary(jr["summary"].get<std::string>());
      require(jr, "targets", jr.contains("targets") && jr["targets"].is_array(), where);
      for (const auto& jt : jr["targets"]) {
        require(jt, "label", jt.contains("label") && jt["label"].is_string(), where);
        require(jt, "status", jt.contains("status") && jt["status"].is_string(), where);
        const auto st = parse_status(jt["status"].get<std::string>());
        if ((st == Status::Unsafe) != jt.contains("counterexample"))
          throw Error(where + ": counterexample must accompany exactly the Unsafe verdicts");
      }
      ++total;
    }
    const auto& s = r["summary"];
    std::size_t sum = 0;
    for (const char* k : {"fully_safe", "targeted_safe", "not_safe", "inconclusive"}) {
      require(s, k, s.contains(k) && s[k].is_number_unsigned(), "summary");
      sum += s[k].get<std::size_t>();
    }
    if (sum != total || s.value("regions", std::size_t{0}) != total) throw Error("summary: counts do not add up");
  } else if (cmd == "discover") {
    require(r, "regions", r.contains("regions") && r["regions"].is_array(), top);
    require(r, "labels", r.contains("labels") && r["labels"].is_array(), top);
  } else if (cmd == "emit-contracts") {
    require(r, "contract_summary", r.contains("contract_summary") && r["contract_summary"].is_object(), top);
  } else if (cmd == "check-system") {
    require(r, "results", r.contains("results") && r["results"].is_array(), top);
    for (const auto& jp : r["results"]) {
      require(jp, "property", jp.contains("property") && jp["property"].is_string(), "result");
      require(jp, "holds", jp.contains("holds") && jp["holds"].is_boolean(), "result");
      require(jp, "monolithic", jp.contains("monolithic") && jp["monolithic"].is_object(), "result");
    }
  } else if (cmd == "demo ebs") {
    require(r, "assume_guarantee", r.contains("assume_guarantee") && r["assume_guarantee"].is_object(), top);
    require(r, "classifier", r.contains("classifier") && r["classifier"].is_object(), top);
    require(r, "conclusion", r.contains("conclusion") && r["conclusion"].is_boolean(), top);
    const auto& ag = r["assume_guarantee"];
    require(ag, "premises", ag.contains("premises") && ag["premises"].is_array() && ag["premises"].size() == 3,
            "assume_guarantee");
  } else if (cmd == "guard" || cmd == "grid") {
    require(r, "rows", r.contains("rows") && r["rows"].is_number_unsigned(), top);
  } else {
    throw Error("report: unknown command '" + cmd + "'");
  }
}

std::vector<PlotPoint> counterexample_points(const Network& net, std::span<const RegionVerification> results) {
  std::vector<PlotPoint> pts;
  for (const auto& rv : results)
    for (const auto& [t, v] : rv.result.per_target) {
      if (!v.counterexample) continue;
      const auto raw = denormalize(net, v.counterexample->point);
      if (raw.size() < 2 || raw[0] < 0.0) continue;
      auto [down, cross] = project_polar(raw[0], raw[1]);
      pts.push_back({rv.region.id, net.labels.at(t), down, cross});
    }
  std::sort(pts.begin(), pts.end(), [](const PlotPoint& a, const PlotPoint& b) {
    return std::tie(a.region, a.target) < std::tie(b.region, b.target);
  });
  return pts;
}

std::string render_plot_csv(std::span<const PlotPoint> points) {
  std::ostringstream os;
  os << "region,target,downrange,crossrange\n";
  for (const auto& p : points)
    os << p.region << ',' << p.target << ',' << text::format_double(p.downrange) << ','
       << text::format_double(p.crossrange) << '\n';
  return os.str();
}

std::string render_plot_svg(std::span<const PlotPoint> points) {
  const double size = 400.0, pad = 30.0;
  double lo_x = 0.0, hi_x = 1.0, lo_y = -1.0, hi_y = 1.0;
  for (const auto& p : points) {
    lo_x = std::min(lo_x, p.downrange);
    hi_x = std::max(hi_x, p.downrange);
    lo_y = std::min(lo_y, p.crossrange);
    hi_y = std::max(hi_y, p.crossrange);
  }
  auto sx = [&](double v) { return pad + (v - lo_x) / (hi_x - lo_x) * (size - 2 * pad); };
  auto sy = [&](double v) { return size - pad - (v - lo_y) / (hi_y - lo_y) * (size - 2 * pad); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << sy(0) << "\" x2=\"" << size - pad << "\" y2=\"" << sy(0)
     << "\" stroke=\"gray\"/>\n";
  os << "<line x1=\"" << sx(0) << "\" y1=\"" << pad << "\" x2=\"" << sx(0) << "\" y2=\"" << size - pad
     << "\" stroke=\"gray\"/>\n";
  os << "<text x=\"" << size / 2 << "\" y=\"" << size - 5 << "\" text-anchor=\"middle\">downrange</text>\n";
  os << "<text x=\"10\" y=\"" << size / 2 << "\" transform=\"rotate(-90 10 " << size / 2
     << ")\" text-anchor=\"middle\">crossrange</text>\n";
  for (const auto& p : points)
    os << "<circle cx=\"" << sx(p.downrange) << "\" cy=\"" << sy(p.crossrange) << "\" r=\"3\" fill=\"red\"><title>"
       << p.region << " -> " << p.target << "</title></circle>\n";
  os << "</svg>\n";
  return os.str();
}

} // namespace safecomp
