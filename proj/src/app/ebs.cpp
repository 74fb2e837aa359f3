#include <algorithm>
#include <chrono>
#include <cmath>

#include "safecomp/app.hpp"
#include "safecomp/compose_json.hpp"
#include "safecomp/error.hpp"

namespace safecomp {

namespace {

const std::vector<std::string> kLabels{"red", "yellow", "green"};
const std::vector<std::string> kSpeeds{"0", "1", "2"};
const std::vector<std::string> kBinary{"0", "1"};

ComponentModel breaking_system() {
  return build_component(
      "BreakingSystem", {{"Class", kLabels}, {"velocity", kSpeeds}}, {{"brake", kBinary}}, {"idle", "braking"},
      {"idle"}, [](const std::string& s) { return Valuation{{"brake", s == "braking" ? "1" : "0"}}; },
      [](const std::string& s, const Valuation& in) -> std::vector<std::string> {
        const bool brake = in.at("Class") == "red" || (s == "braking" && in.at("velocity") != "0");
        return {brake ? "braking" : "idle"};
      });
}

// Speed level s in 0..B maps to velocity ceil(s * vmax / B); braking lowers
// the level by one per tick, throttle raises it by one.
ComponentModel vehicle(int braking_ticks, const std::vector<int>& velocities) {
  const int vmax = *std::max_element(velocities.begin(), velocities.end());
  auto velocity = [&](int s) { return (s * vmax + braking_ticks - 1) / braking_ticks; };
  std::vector<std::string> states, initial;
  for (int s = 0; s <= braking_ticks; ++s) {
    states.push_back("s" + std::to_string(s));
    if (std::find(velocities.begin(), velocities.end(), velocity(s)) != velocities.end())
      initial.push_back(states.back());
  }
  if (initial.empty()) throw Error("no vehicle state matches the initial velocities");
  const int b = braking_ticks;
  return build_component(
      "Vehicle", {{"brake", kBinary}, {"throttle", kBinary}}, {{"velocity", kSpeeds}}, states, initial,
      [=](const std::string& st) { return Valuation{{"velocity", std::to_string(velocity(std::stoi(st.substr(1))))}}; },
      [=](const std::string& st, const Valuation& in) -> std::vector<std::string> {
        int s = std::stoi(st.substr(1));
        if (in.at("brake") == "1") s = std::max(s - 1, 0);
        else if (in.at("throttle") == "1") s = std::min(s + 1, b);
        return {"s" + std::to_string(s)};
      });
}

Json guarantee_counts(const DnnContract& c) {
  std::size_t is = 0, not_in = 0;
  for (const auto& r : c.regions) (std::holds_alternative<LabelIs>(r.guarantee) ? is : not_in)++;
  return Json{{"regions", c.regions.size()}, {"label_is", is}, {"label_not_in", not_in}, {"annex", c.annex.size()}};
}

} // namespace

EbsDemo build_ebs_demo(const EbsParams& params) {
  if (params.braking_ticks < 1) throw Error("braking_ticks must be at least 1");
  if (params.velocities.empty()) throw Error("initial velocity domain is empty");
  for (int v : params.velocities)
    if (v < 0 || v > 2) throw Error("initial velocities must lie in {0, 1, 2}");

  EbsDemo d;
  d.m1.name = "BreakingSystem || Vehicle";
  d.m1.components = {breaking_system(), vehicle(params.braking_ticks, params.velocities)};
  d.m1.properties = {"G (Class=red => F<=3 (velocity=0))"};
  d.c1.name = "C1";
  d.c1.guarantee = parse_property("G (Class=red => F<=3 (velocity=0))");
  d.p = parse_property("G (x=red => F<=3 (velocity=0))");
  d.labels = kLabels;
  d.c2.network = "semaphore";
  d.nn.name = "NN";
  d.nn.truth_port = "x";
  if (params.guard) d.nn.failsafe_label = "red";
  return d;
}

System ebs_full_system(const EbsDemo& demo, const DnnContract& contract) {
  System s = demo.m1;
  s.name = "EBS";
  s.components.push_back(abstract_dnn_component(contract, demo.labels, demo.nn).model);
  s.properties = {render_property(demo.p)};
  return s;
}

Json ebs_system_json(const EbsDemo& demo, const DnnContract& contract) {
  Json j = to_json(ebs_full_system(demo, contract));
  Json m1 = Json::array();
  for (const auto& c : demo.m1.components) m1.push_back(c.name);
  Json dnn{{"component", demo.nn.name},
           {"labels", demo.labels},
           {"token_port", demo.nn.token_port},
           {"class_port", demo.nn.class_port},
           {"outside_token", demo.nn.outside_token},
           {"contract", to_json(contract)}};
  if (demo.nn.truth_port) dnn["truth_port"] = *demo.nn.truth_port;
  if (demo.nn.failsafe_label) dnn["failsafe_label"] = *demo.nn.failsafe_label;
  j["decomposition"] = Json{{"m1", m1}, {"m1_name", demo.m1.name}, {"c1", to_json(demo.c1)}, {"dnn", dnn}};
  return j;
}

EbsRun run_ebs_demo(const EbsRunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  Semaphore sem = build_semaphore_classifier(opt.seed);
  DiscoveryConfig dc;
  dc.seed = opt.seed;
  const DiscoveryResult disc = discover_regions(sem.data, Metric::L2, dc);
  const auto results = run_parallel_verification(sem.network, disc.regions, opt.verifier, opt.workers, opt.seed);

  EbsRun run;
  run.contract = emit_dnn_contract(sem.network, results);
  EbsDemo demo = build_ebs_demo(opt.params);
  demo.c2 = run.contract;
  const AgReport ag = check_assume_guarantee(demo.m1, demo.c1, DnnSide{run.contract, demo.labels, demo.nn}, demo.p);
  run.full_system = ebs_full_system(demo, run.contract);
  const CheckResult mono = check_property(run.full_system, demo.p);
  run.conclusion = ag.conclusion;

  std::map<std::string, std::map<std::string, std::size_t>> per_label;
  for (const auto& rv : results)
    ++per_label[sem.network.labels[rv.region.expected_label]][std::string(to_string(rv.result.summary))];
  Json by_label = Json::object();
  for (const auto& l : sem.network.labels) {
    Json counts = Json::object();
    for (const auto& [k, n] : per_label[l]) counts[k] = n;
    by_label[l] = std::move(counts);
  }
  ReportContext ctx{"demo ebs", {}, opt.workers, 0.0, false};
  const Json verification = verification_report(sem.network, results, ctx);
  Json velocities = Json::array();
  for (int v : opt.params.velocities) velocities.push_back(v);

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.report = Json{
      {"tool", kToolName},
      {"version", kToolVersion},
      {"command", "demo ebs"},
      {"config",
       Json{{"braking_ticks", opt.params.braking_ticks},
            {"velocities", velocities},
            {"guard", opt.params.guard},
            {"seed", opt.seed},
            {"node_budget", opt.verifier.max_nodes},
            {"time_budget", opt.verifier.max_seconds},
            {"eps", opt.verifier.eps}}},
      {"note", "BreakingSystem and Vehicle are illustrative state machines; the classifier is abstracted to "
               "region tokens; 1 tick = 1 s"},
      {"property", render_property(demo.p)},
      {"c1", to_json(demo.c1)},
      {"classifier",
       Json{{"network", sem.network.name},
            {"points", sem.data.size()},
            {"regions", disc.regions.size()},
            {"summary", verification["summary"]},
            {"by_label", by_label},
            {"verification", mask_runtime(verification)}}},
      {"contract_summary", guarantee_counts(run.contract)},
      {"assume_guarantee", to_json(ag)},
      {"monolithic", to_json(mono)},
      {"conclusion", ag.conclusion},
      {"runtime", Json{{"workers", opt.workers}, {"elapsed_s", elapsed}}}};
  return run;
}

} // namespace safecomp
