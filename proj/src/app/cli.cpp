#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "safecomp/app.hpp"
#include "safecomp/compose_json.hpp"
#include "safecomp/error.hpp"
#include "safecomp/guard.hpp"
#include "safecomp/text.hpp"

namespace safecomp {

namespace {

enum class Format { text, json };

struct Common {
  std::string out;
  std::string format = "text";
  Format fmt() const { return format == "json" ? Format::json : Format::text; }
};

struct Budget {
  std::size_t workers = 1;
  std::uint64_t seed = 42;
  std::size_t node_budget = VerifierOptions{}.max_nodes;
  double time_budget = VerifierOptions{}.max_seconds;
  double eps = VerifierOptions{}.eps;
  double min_box = VerifierOptions{}.min_box_width;

  VerifierOptions options() const {
    VerifierOptions o;
    o.max_nodes = node_budget;
    o.max_seconds = time_budget;
    o.eps = eps;
    o.min_box_width = min_box;
    return o;
  }
  Json json() const {
    return Json{{"seed", seed}, {"node_budget", node_budget}, {"time_budget", time_budget}, {"eps", eps},
                {"min_box_width", min_box}};
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output path (stdout when omitted)");
  sub->add_option("--format", c.format, "Summary format")->check(CLI::IsMember({"json", "text"}));
}

void add_budget(CLI::App* sub, Budget& b) {
  sub->add_option("--workers", b.workers, "Worker threads")->envname("SAFECOMP_WORKERS")->check(CLI::PositiveNumber);
  sub->add_option("--seed", b.seed, "Random seed");
  sub->add_option("--node-budget", b.node_budget, "Branch-and-bound nodes per target")->check(CLI::PositiveNumber);
  sub->add_option("--time-budget", b.time_budget, "Seconds per target")->check(CLI::PositiveNumber);
  sub->add_option("--eps", b.eps, "Bound tolerance")->check(CLI::NonNegativeNumber);
  sub->add_option("--min-box", b.min_box, "Smallest box width to split")->check(CLI::PositiveNumber);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Json envelope(const std::string& command, Json config) {
  return Json{{"tool", kToolName}, {"version", kToolVersion}, {"command", command}, {"config", std::move(config)}};
}

// Writes the primary artifact to --out, or stdout when no path was given.
// Returns true when the summary should still be printed.
bool emit(const Common& c, const std::string& artifact, std::ostream& out) {
  if (c.out.empty()) {
    out << artifact;
    return false;
  }
  text::write_file(c.out, artifact);
  return true;
}

void print_summary(const Common& c, const Json& summary, const std::string& text_line, std::ostream& out) {
  if (c.fmt() == Format::json) out << summary.dump(2) << '\n';
  else out << text_line << '\n';
}

Json load_json(const std::string& path) {
  const std::string body = text::read_file(path);
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, e.byte, path + ": " + e.what());
  }
}

std::vector<std::string> labels_from(const std::string& net_path, const std::string& labels_csv) {
  if (!net_path.empty()) return load_network(net_path).labels;
  std::vector<std::string> labels;
  for (auto l : text::split(labels_csv, ',')) {
    auto t = text::trim(l);
    if (!t.empty()) labels.emplace_back(t);
  }
  if (labels.size() < 2) throw Error("give --net or at least two --labels");
  return labels;
}

std::string summary_line(const Json& s) {
  std::ostringstream os;
  os << "regions " << s["regions"].get<std::size_t>() << ": fully_safe " << s["fully_safe"].get<std::size_t>()
     << ", targeted_safe " << s["targeted_safe"].get<std::size_t>() << ", not_safe "
     << s["not_safe"].get<std::size_t>() << ", inconclusive " << s["inconclusive"].get<std::size_t>();
  return os.str();
}

// --- discover ---------------------------------------------------------------

struct DiscoverArgs {
  Common common;
  std::string data, net, labels, metric = "l2", radius = "separating";
  std::size_t min_members = 3;
  std::uint64_t seed = 42;
  bool raw = false;
};

int run_discover(const DiscoverArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto labels = labels_from(a.net, a.labels);
  LabeledDataset data = parse_dataset_csv(text::read_file(a.data), labels);
  if (a.raw) {
    if (a.net.empty()) throw Error("--raw needs --net for the normalization constants");
    const Network net = load_network(a.net);
    for (auto& p : data.points) p = normalize(net, p);
  }
  DiscoveryConfig cfg;
  cfg.seed = a.seed;
  cfg.min_members = a.min_members;
  cfg.radius = parse_radius_strategy(a.radius);
  const Metric metric = parse_metric(a.metric);
  const DiscoveryResult res = discover_regions(data, metric, cfg);

  Json j = envelope("discover", Json{{"data", a.data},
                                     {"metric", std::string(to_string(metric))},
                                     {"radius", std::string(to_string(cfg.radius))},
                                     {"min_members", a.min_members},
                                     {"seed", a.seed},
                                     {"raw", a.raw}});
  const Json body = regions_to_json(res.regions, labels);
  j["labels"] = body["labels"];
  j["regions"] = body["regions"];
  j["singletons"] = res.singletons.size();
  j["dropped_clusters"] = res.dropped_clusters.size();
  j["runtime"] = Json{{"elapsed_s", seconds_since(t0)}};
  if (emit(a.common, j.dump(2) + "\n", out))
    print_summary(a.common,
                  Json{{"command", "discover"}, {"regions", res.regions.size()}, {"points", data.size()}},
                  "discovered " + std::to_string(res.regions.size()) + " regions from " +
                      std::to_string(data.size()) + " points",
                  out);
  return 0;
}

// --- verify -------------------------------------------------------------------

struct VerifyArgs {
  Common common;
  Budget budget;
  std::string net, regions, plot;
  bool polar = false;
};

int run_verify(const VerifyArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Network net = load_network(a.net);
  const auto regions = regions_from_json(load_json(a.regions), net.labels);
  const auto results = run_parallel_verification(net, regions, a.budget.options(), a.budget.workers, a.budget.seed);
  Json config = a.budget.json();
  config["net"] = a.net;
  config["regions"] = a.regions;
  ReportContext ctx{"verify", config, a.budget.workers, seconds_since(t0), a.polar};
  const Json report = verification_report(net, results, ctx);
  if (!a.plot.empty()) {
    const auto pts = counterexample_points(net, results);
    text::write_file(a.plot + ".csv", render_plot_csv(pts));
    text::write_file(a.plot + ".svg", render_plot_svg(pts));
  }
  if (emit(a.common, report.dump(2) + "\n", out)) print_summary(a.common, report["summary"], summary_line(report["summary"]), out);
  for (const auto& rv : results)
    for (const auto& [t, v] : rv.result.per_target)
      if (v.status == Status::Unsafe) return 1;
  return 0;
}

// --- emit-contracts -----------------------------------------------------------

struct EmitArgs {
  Common common;
  std::string net, report;
  std::optional<double> uncertainty_max;
};

int run_emit(const EmitArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Network net = load_network(a.net);
  const auto results = results_from_report(load_json(a.report), net);
  const DnnContract c = emit_dnn_contract(net, results, a.uncertainty_max);
  std::size_t is = 0, not_in = 0;
  for (const auto& r : c.regions) (std::holds_alternative<LabelIs>(r.guarantee) ? is : not_in)++;
  Json summary = envelope("emit-contracts", Json{{"net", a.net}, {"report", a.report}});
  summary["contract_summary"] =
      Json{{"regions", c.regions.size()}, {"label_is", is}, {"label_not_in", not_in}, {"annex", c.annex.size()}};
  summary["runtime"] = Json{{"elapsed_s", seconds_since(t0)}};
  if (emit(a.common, render_contract(c), out))
    print_summary(a.common, summary,
                  "contract: " + std::to_string(is) + " label_is, " + std::to_string(not_in) + " label_not_in, " +
                      std::to_string(c.annex.size()) + " in annex",
                  out);
  return 0;
}

// --- check-system -------------------------------------------------------------

struct CheckArgs {
  Common common;
  std::string system, contracts, property;
};

System subsystem(const System& whole, const std::vector<std::string>& names, const std::string& name) {
  System s;
  s.name = name;
  s.ticks_per_second = whole.ticks_per_second;
  for (const auto& n : names) {
    auto it = std::find_if(whole.components.begin(), whole.components.end(),
                           [&](const ComponentModel& c) { return c.name == n; });
    if (it == whole.components.end()) throw Error("decomposition names unknown component '" + n + "'");
    s.components.push_back(*it);
  }
  auto inside = [&](const std::string& c) { return std::find(names.begin(), names.end(), c) != names.end(); };
  for (const auto& w : whole.wiring)
    if (inside(w.from_component) && inside(w.to_component)) s.wiring.push_back(w);
  return s;
}

int run_check(const CheckArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Json sj = load_json(a.system);
  System sys = system_from_json(sj);
  std::vector<std::string> props = a.property.empty() ? sys.properties : std::vector<std::string>{a.property};
  if (props.empty()) throw Error("no property given and the system lists none");

  std::optional<System> m1;
  std::optional<ComponentContract> c1;
  std::optional<std::variant<DnnSide, ComponentSide>> m2;
  if (sj.contains("decomposition")) {
    const Json& d = sj.at("decomposition");
    try {
      m1 = subsystem(sys, d.at("m1").get<std::vector<std::string>>(), d.value("m1_name", std::string("M1")));
      c1 = component_contract_from_json(d.at("c1"));
      if (d.contains("dnn")) {
        const Json& jd = d.at("dnn");
        DnnSide side;
        side.contract = a.contracts.empty() ? dnn_contract_from_json(jd.at("contract"))
                                            : dnn_contract_from_json(load_json(a.contracts));
        validate(side.contract);
        side.labels = jd.at("labels").get<std::vector<std::string>>();
        side.options.name = jd.value("component", std::string("NN"));
        side.options.token_port = jd.value("token_port", side.options.token_port);
        side.options.class_port = jd.value("class_port", side.options.class_port);
        side.options.outside_token = jd.value("outside_token", side.options.outside_token);
        if (jd.contains("truth_port")) side.options.truth_port = jd.at("truth_port").get<std::string>();
        if (jd.contains("failsafe_label")) side.options.failsafe_label = jd.at("failsafe_label").get<std::string>();
        // The monolithic model uses the same abstraction as premise 3.
        ComponentModel nn = abstract_dnn_component(side.contract, side.labels, side.options).model;
        bool replaced = false;
        for (auto& c : sys.components)
          if (c.name == nn.name) {
            c = nn;
            replaced = true;
          }
        if (!replaced) sys.components.push_back(nn);
        m2 = std::move(side);
      } else {
        const Json& jm = d.at("m2");
        ComponentSide side{subsystem(sys, jm.at("components").get<std::vector<std::string>>(),
                                     jm.value("name", std::string("M2"))),
                           component_contract_from_json(jm.at("contract"))};
        m2 = std::move(side);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("decomposition: ") + e.what());
    }
  }

  Json results = Json::array();
  bool all_hold = true;
  std::ostringstream lines;
  for (const auto& text : props) {
    const Property p = parse_property(text);
    const CheckResult mono = check_property(sys, p);
    Json r{{"property", render_property(p)}, {"monolithic", to_json(mono)}};
    bool holds = mono.holds;
    lines << render_property(p) << ": monolithic " << (mono.holds ? "holds" : "violated");
    if (m1) {
      const AgReport ag = check_assume_guarantee(*m1, *c1, *m2, p);
      r["assume_guarantee"] = to_json(ag);
      holds = holds && ag.conclusion;
      lines << "; assume-guarantee " << (ag.conclusion ? "proved" : "not proved");
      for (const auto& pr : ag.premises) lines << "\n  " << pr.name << ": " << (pr.holds ? "holds" : "FAILS") << " (" << pr.detail << ")";
    }
    r["holds"] = holds;
    all_hold = all_hold && holds;
    results.push_back(std::move(r));
    lines << '\n';
  }
  Json report = envelope("check-system", Json{{"system", a.system}, {"contracts", a.contracts}, {"property", a.property}});
  report["system_name"] = sys.name;
  report["results"] = std::move(results);
  report["holds"] = all_hold;
  report["runtime"] = Json{{"elapsed_s", seconds_since(t0)}};
  if (emit(a.common, report.dump(2) + "\n", out)) {
    std::string t = lines.str();
    if (!t.empty() && t.back() == '\n') t.pop_back();
    print_summary(a.common, Json{{"command", "check-system"}, {"holds", all_hold}}, t, out);
  }
  return all_hold ? 0 : 1;
}

// --- guard ------------------------------------------------------------------

struct GuardArgs {
  Common common;
  std::string net, contracts, data = "-", action = "fail_safe";
  std::optional<double> threshold;
  bool raw = false;
};

int run_guard(const GuardArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Network net = load_network(a.net);
  const Guard g = build_guard(parse_dnn_contract(text::read_file(a.contracts)), GuardConfig{a.action, a.threshold});
  std::ifstream file;
  std::istream* in = &std::cin;
  if (a.data != "-") {
    file.open(a.data);
    if (!file) throw Error("cannot open " + a.data);
    in = &file;
  }
  if (a.common.out.empty()) {
    run_guard_stream(g, net, *in, out, a.raw);
    return 0;
  }
  std::ofstream sink(a.common.out);
  if (!sink) throw Error("cannot write " + a.common.out);
  const std::size_t rows = run_guard_stream(g, net, *in, sink, a.raw);
  Json summary = envelope("guard", Json{{"net", a.net}, {"contracts", a.contracts}, {"data", a.data}});
  summary["rows"] = rows;
  summary["runtime"] = Json{{"elapsed_s", seconds_since(t0)}};
  print_summary(a.common, summary, "guarded " + std::to_string(rows) + " rows", out);
  return 0;
}

// --- demo ebs -----------------------------------------------------------------

struct DemoArgs {
  Common common;
  Budget budget;
  int braking_ticks = 2;
  std::string velocities = "0,1,2";
  bool no_guard = false;
  std::string emit_system;
};

int run_demo(const DemoArgs& a, std::ostream& out) {
  EbsRunOptions opt;
  opt.params.braking_ticks = a.braking_ticks;
  opt.params.velocities.clear();
  for (auto v : text::split(a.velocities, ',')) {
    auto n = text::parse_int(text::trim(v));
    if (!n) throw Error("bad velocity '" + std::string(v) + "'");
    opt.params.velocities.push_back(static_cast<int>(*n));
  }
  opt.params.guard = !a.no_guard;
  opt.seed = a.budget.seed;
  opt.workers = a.budget.workers;
  opt.verifier = a.budget.options();
  const EbsRun run = run_ebs_demo(opt);
  if (!a.emit_system.empty()) {
    EbsDemo demo = build_ebs_demo(opt.params);
    text::write_file(a.emit_system, ebs_system_json(demo, run.contract).dump(2) + "\n");
  }
  if (emit(a.common, run.report.dump(2) + "\n", out)) {
    std::ostringstream t;
    for (const auto& pr : run.report["assume_guarantee"]["premises"])
      t << pr["name"].get<std::string>() << ": " << (pr["holds"].get<bool>() ? "holds" : "FAILS") << " - "
        << pr["statement"].get<std::string>() << '\n';
    t << "conclusion: " << run.report["assume_guarantee"]["statement"].get<std::string>() << " "
      << (run.conclusion ? "proved" : "not proved");
    print_summary(a.common, Json{{"command", "demo ebs"}, {"conclusion", run.conclusion}}, t.str(), out);
  }
  return run.conclusion ? 0 : 1;
}

// --- grid -------------------------------------------------------------------

struct GridArgs {
  Common common;
  std::vector<std::string> cuts;
  std::string label_with;
  bool count_only = false;
};

int run_grid(const GridArgs& a, std::ostream& out) {
  const CutPoints cuts = parse_cutpoints(a.cuts);
  const std::size_t n = grid_size(cuts);
  if (a.count_only) {
    out << n << '\n';
    return 0;
  }
  std::optional<Network> net;
  if (!a.label_with.empty()) net = load_network(a.label_with);
  if (a.common.out.empty()) {
    write_grid_csv(cuts, out, net ? &*net : nullptr);
    return 0;
  }
  std::ofstream sink(a.common.out);
  if (!sink) throw Error("cannot write " + a.common.out);
  const std::size_t rows = write_grid_csv(cuts, sink, net ? &*net : nullptr);
  Json summary = envelope("grid", Json{{"label_with", a.label_with}});
  summary["rows"] = rows;
  summary["runtime"] = Json{{"elapsed_s", 0.0}};
  print_summary(a.common, summary, "wrote " + std::to_string(rows) + " grid points", out);
  return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Safe-region discovery, verification and compositional checking for neural classifiers", kToolName};
  app.set_version_flag("--version", kToolVersion);

  DiscoverArgs da;
  auto* discover = app.add_subcommand("discover", "Cluster a labeled dataset into label-pure regions");
  add_common(discover, da.common);
  discover->add_option("--data", da.data, "Labeled CSV")->required();
  discover->add_option("--net", da.net, "Network file (labels and normalization)");
  discover->add_option("--labels", da.labels, "Comma-separated labels when no network is given");
  discover->add_option("--metric", da.metric, "l1|l2|linf")->check(CLI::IsMember({"l1", "l2", "linf", "L1", "L2", "Linf"}));
  discover->add_option("--radius", da.radius, "tight|separating")->check(CLI::IsMember({"tight", "separating"}));
  discover->add_option("--min-members", da.min_members, "Smallest cluster that becomes a region");
  discover->add_option("--seed", da.seed, "Random seed");
  discover->add_flag("--raw", da.raw, "Data is in raw units; normalize with --net");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Verify regions against every competing label");
  add_common(verify, va.common);
  add_budget(verify, va.budget);
  verify->add_option("--net", va.net, "Network file")->required();
  verify->add_option("--regions", va.regions, "Regions JSON")->required();
  verify->add_flag("--polar", va.polar, "Project counterexamples with inputs 0 and 1 as (rho, theta)");
  verify->add_option("--plot", va.plot, "Write PREFIX.csv and PREFIX.svg of projected counterexamples");

  EmitArgs ea;
  auto* emitc = app.add_subcommand("emit-contracts", "Turn a verification report into a classifier contract");
  add_common(emitc, ea.common);
  emitc->add_option("--net", ea.net, "Network file")->required();
  emitc->add_option("--report", ea.report, "Verification report JSON")->required();
  emitc->add_option("--uncertainty-max", ea.uncertainty_max, "Per-region uncertainty bound in (0, 1]");

  CheckArgs ca;
  auto* check = app.add_subcommand("check-system", "Model check a system and run its assume-guarantee proof");
  add_common(check, ca.common);
  check->add_option("--system", ca.system, "System JSON")->required();
  check->add_option("--contracts", ca.contracts, "Classifier contract overriding the inline one");
  check->add_option("--property", ca.property, "Property overriding the system's list");

  GuardArgs ga;
  auto* guard = app.add_subcommand("guard", "Stream inputs through the runtime guard");
  add_common(guard, ga.common);
  guard->add_option("--net", ga.net, "Network file")->required();
  guard->add_option("--contracts", ga.contracts, "Classifier contract")->required();
  guard->add_option("--data", ga.data, "CSV input, '-' for stdin");
  guard->add_option("--threshold", ga.threshold, "Uncertainty threshold in (0, 1]");
  guard->add_option("--fail-safe", ga.action, "Action reported on fail-safe");
  guard->add_flag("--raw", ga.raw, "Inputs are in raw units");

  DemoArgs dm;
  auto* demo = app.add_subcommand("demo", "Bundled scenarios");
  demo->require_subcommand(1);
  auto* ebs = demo->add_subcommand("ebs", "Emergency braking system with a semaphore classifier");
  add_common(ebs, dm.common);
  add_budget(ebs, dm.budget);
  ebs->add_option("--braking-ticks", dm.braking_ticks, "Ticks to stop from top speed")->check(CLI::PositiveNumber);
  ebs->add_option("--velocities", dm.velocities, "Initial velocities, subset of 0,1,2");
  ebs->add_flag("--no-guard", dm.no_guard, "Do not force Class=red outside the contract regions");
  ebs->add_option("--emit-system", dm.emit_system, "Also write the composed system JSON");

  GridArgs gr;
  auto* grid = app.add_subcommand("grid", "Cartesian product of per-dimension cut points");
  add_common(grid, gr.common);
  grid->add_option("--cut", gr.cuts, "name=v1,v2,... (repeat per dimension)")->required();
  grid->add_option("--label-with", gr.label_with, "Network that labels each point");
  grid->add_flag("--count-only", gr.count_only, "Print the number of points only");

  app.require_subcommand(1);

  if (argc <= 1) {
    err << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*discover) return run_discover(da, out);
    if (*verify) return run_verify(va, out);
    if (*emitc) return run_emit(ea, out);
    if (*check) return run_check(ca, out);
    if (*guard) return run_guard(ga, out);
    if (*ebs) return run_demo(dm, out);
    if (*grid) return run_grid(gr, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  err << app.help();
  return 2;
}

} // namespace safecomp
