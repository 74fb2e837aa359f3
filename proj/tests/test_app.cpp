#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <sstream>
#include <streambuf>
#include <unistd.h>

#include "safecomp/app.hpp"
#include "safecomp/compose_json.hpp"
#include "safecomp/error.hpp"
#include "safecomp/text.hpp"
#include "support/ag_fixtures.hpp"
#include "support/compose_oracle.hpp"
#include "support/fixtures.hpp"

using namespace safecomp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("safecomp_app_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator()(const std::string& name) const { return (path / name).string(); }
};

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "safecomp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Counts newlines without storing anything.
class LineCounter : public std::streambuf {
public:
  std::size_t lines = 0;

protected:
  int_type overflow(int_type c) override {
    if (c == '\n') ++lines;
    return c;
  }
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    for (std::streamsize i = 0; i < n; ++i)
      if (s[i] == '\n') ++lines;
    return n;
  }
};

std::vector<Region> fixture_regions(const Network& net, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Region> regions;
  for (std::size_t i = 0; i < count; ++i) {
    Region r;
    r.id = "R" + std::to_string(100 + (i * 7) % count);
    r.metric = i % 2 ? Metric::L1 : Metric::Linf;
    r.centroid = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    r.radius = rng.uniform(0.05, 0.4);
    r.expected_label = fixtures::reference_argbest(fixtures::reference_forward(net, r.centroid), net.score_order);
    r.member_count = 5;
    regions.push_back(r);
  }
  return regions;
}

std::size_t oracle_nearest(const std::vector<std::vector<double>>& protos, const std::vector<double>& x) {
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t c = 0; c < protos.size(); ++c) {
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - protos[c][i]) * (x[i] - protos[c][i]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

DnnContract semaphore_contract(std::uint64_t seed = 42) {
  Semaphore s = build_semaphore_classifier(seed);
  DiscoveryConfig dc;
  dc.seed = seed;
  auto disc = discover_regions(s.data, Metric::L2, dc);
  auto results = run_parallel_verification(s.network, disc.regions, {}, 1, seed);
  return emit_dnn_contract(s.network, results);
}

} // namespace

TEST_CASE("project_polar") {
  auto [d0, c0] = project_polar(1.0, 0.0);
  CHECK(d0 == 1.0);
  CHECK(c0 == 0.0);
  auto [d1, c1] = project_polar(1.0, M_PI / 2);
  CHECK(std::abs(d1) < 1e-12);
  CHECK(std::abs(c1 - 1.0) < 1e-12);
  CHECK_THROWS_AS(project_polar(-1.0, 0.0), Error);
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double rho = rng.uniform(0, 60000), theta = rng.uniform(-M_PI, M_PI);
    auto [d, c] = project_polar(rho, theta);
    CHECK(std::abs(d * d + c * c - rho * rho) <= 1e-9 * std::max(1.0, rho * rho));
  }
}

TEST_CASE("grid generation") {
  std::vector<std::string> specs{"a=1,2", "b=3"};
  auto data = generate_grid(parse_cutpoints(specs));
  REQUIRE(data.points.size() == 2);
  CHECK(data.points[0] == std::vector<double>{1, 3});
  CHECK(data.points[1] == std::vector<double>{2, 3});
  CHECK(data.attributes == std::vector<std::string>{"a", "b"});

  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    CutPoints cuts;
    const std::size_t dims = 1 + rng.below(4);
    std::size_t expect = 1;
    for (std::size_t d = 0; d < dims; ++d) {
      cuts.names.push_back("d" + std::to_string(d));
      std::vector<double> vals(1 + rng.below(5));
      for (auto& v : vals) v = std::round(rng.uniform(-5, 5) * 100) / 100;
      expect *= vals.size();
      cuts.values.push_back(vals);
    }
    CHECK(grid_size(cuts) == expect);
    auto g = generate_grid(cuts);
    REQUIRE(g.points.size() == expect);
    // Row n decodes as mixed-radix digits, last dimension fastest.
    for (std::size_t n = 0; n < expect; ++n) {
      std::size_t rest = n;
      for (std::size_t d = dims; d-- > 0;) {
        CHECK(g.points[n][d] == cuts.values[d][rest % cuts.values[d].size()]);
        rest /= cuts.values[d].size();
      }
    }
    std::ostringstream csv;
    CHECK(write_grid_csv(cuts, csv) == expect);
    std::size_t lines = 0;
    for (char c : csv.str()) lines += c == '\n';
    CHECK(lines == expect + 1);
  }

  std::vector<std::string> bad_specs[] = {{"a"}, {"a="}, {"a=1,x"}, {"a=1", "a=2"}, {"=1"}};
  for (const auto& b : bad_specs) CHECK_THROWS_AS(parse_cutpoints(b), Error);
  CHECK_THROWS_AS(grid_size(CutPoints{}), Error);
}

TEST_CASE("large grid streams without materializing") {
  auto axis = [](const std::string& name, int n) {
    std::string s = name + "=";
    for (int i = 0; i < n; ++i) s += (i ? "," : "") + std::to_string(i);
    return s;
  };
  std::vector<std::string> specs{axis("rho", 41), axis("theta", 41), axis("psi", 11), axis("v_own", 12),
                                 axis("v_int", 12)};
  const CutPoints cuts = parse_cutpoints(specs);
  CHECK(grid_size(cuts) == 2662704u);
  LineCounter counter;
  std::ostream sink(&counter);
  CHECK(write_grid_csv(cuts, sink) == 2662704u);
  CHECK(counter.lines == 2662705u);
}

TEST_CASE("grid labels through the network") {
  Network net = fixtures::identity_net(2, ScoreOrder::max_best);
  net.input_mean = {1.0, 0.0};
  net.input_range = {2.0, 1.0};
  std::vector<std::string> specs{"x=0,3", "y=0.9"};
  std::ostringstream csv;
  write_grid_csv(parse_cutpoints(specs), csv, &net);
  // Normalized: (0-1)/2=-0.5 vs 0.9 -> L1; (3-1)/2=1 vs 0.9 -> L0.
  CHECK(csv.str() == "x,y,label\n0,0.9,L1\n3,0.9,L0\n");
  std::vector<std::string> one{"x=1"};
  std::ostringstream sink;
  CHECK_THROWS_AS(write_grid_csv(parse_cutpoints(one), sink, &net), DimensionError);
}

TEST_CASE("parallel runner") {
  Network net = fixtures::random_network(77, 2, {8, 8}, 3);
  CHECK(run_parallel_verification(net, {}, {}, 4, 1).empty());
  CHECK_THROWS_AS(run_parallel_verification(net, {}, {}, 0, 1), Error);

  auto regions = fixture_regions(net, 20, 3);
  auto dup = regions;
  dup.push_back(regions.front());
  CHECK_THROWS_AS(run_parallel_verification(net, dup, {}, 2, 1), Error);

  // One region: same statuses as direct targeted calls.
  {
    std::vector<Region> one{regions[0]};
    auto r = run_parallel_verification(net, one, {}, 3, 11);
    REQUIRE(r.size() == 1);
    for (std::size_t t = 0; t < net.num_labels(); ++t) {
      if (t == regions[0].expected_label) continue;
      VerifierOptions o;
      o.seed = mix_seed(11, fnv1a(regions[0].id));
      const Verdict v = verify_targeted({net, regions[0], t, o});
      CHECK(r[0].result.per_target.at(t).status == v.status);
    }
  }

  std::string baseline;
  for (std::size_t w : {1, 2, 4, 8}) {
    auto res = run_parallel_verification(net, regions, {}, w, 5);
    REQUIRE(res.size() == regions.size());
    for (std::size_t i = 1; i < res.size(); ++i) CHECK(res[i - 1].region.id < res[i].region.id);
    ReportContext ctx{"verify", {}, w, 0.0, false};
    const std::string body = mask_runtime(verification_report(net, res, ctx)).dump();
    if (baseline.empty()) baseline = body;
    CHECK(body == baseline);
  }
}

TEST_CASE("verification report") {
  Network net = fixtures::random_network(21, 2, {8}, 3);
  auto regions = fixture_regions(net, 12, 8);
  auto results = run_parallel_verification(net, regions, {}, 2, 9);
  ReportContext ctx{"verify", Json{{"seed", 9}}, 2, 0.5, true};
  Json report = verification_report(net, results, ctx);
  CHECK_NOTHROW(check_report_schema(report));
  CHECK(report["runtime"]["workers"] == 2);
  CHECK_FALSE(mask_runtime(report).contains("runtime"));

  std::size_t unsafe = 0;
  for (const auto& rv : results)
    for (const auto& [t, v] : rv.result.per_target) unsafe += v.status == Status::Unsafe;
  CHECK(report["counterexamples"].size() == unsafe);

  // Report -> results -> contract equals the direct contract.
  auto back = results_from_report(Json::parse(report.dump()), net);
  CHECK(emit_dnn_contract(net, back) == emit_dnn_contract(net, results));

  Json broken = report;
  if (broken["regions"].size() >= 2) {
    std::swap(broken["regions"][0], broken["regions"][1]);
    CHECK_THROWS_AS(check_report_schema(broken), Error);
  }
  Json missing = report;
  missing.erase("summary");
  CHECK_THROWS_AS(check_report_schema(missing), Error);

  Json regions_json = regions_to_json(regions, net.labels);
  auto reread = regions_from_json(Json::parse(regions_json.dump()), net.labels);
  std::sort(regions.begin(), regions.end(), [](auto& a, auto& b) { return a.id < b.id; });
  CHECK(reread == regions);
  CHECK_THROWS_AS(regions_from_json(Json{{"regions", 3}}, net.labels), Error);
}

TEST_CASE("counterexample plot artifacts") {
  std::vector<PlotPoint> pts{{"R1", "L2", 1.5, -0.25}};
  CHECK(render_plot_csv(pts) == "region,target,downrange,crossrange\nR1,L2,1.5,-0.25\n");
  const std::string svg = render_plot_svg(pts);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("<circle") != std::string::npos);
}

TEST_CASE("semaphore classifier") {
  Semaphore s = build_semaphore_classifier(42);
  REQUIRE(s.prototypes.size() == 3);
  CHECK(s.network.labels == std::vector<std::string>{"red", "yellow", "green"});
  CHECK_NOTHROW(validate(s.network));
  for (std::size_t c = 0; c < 3; ++c) CHECK(classify(s.network, s.prototypes[c]) == c);
  REQUIRE(s.data.size() == 300);
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    CHECK(s.data.labels[i] == oracle_nearest(s.prototypes, s.data.points[i]));
    for (double v : s.data.points[i]) CHECK((v >= 0.0 && v <= 1.0));
  }
  Semaphore again = build_semaphore_classifier(42);
  CHECK(again.data.points == s.data.points);
  CHECK(again.network == s.network);

  // Regression fixture for seed 42: one fully safe region per class.
  DnnContract c = semaphore_contract(42);
  std::map<std::string, int> fully;
  for (const auto& r : c.regions)
    if (r.provenance.summary == SafetySummary::FullySafe) ++fully[r.provenance.expected_label];
  CHECK(fully["red"] >= 1);
  CHECK(fully["yellow"] >= 1);
  CHECK(fully["green"] >= 1);
}

TEST_CASE("EBS components") {
  CHECK_THROWS_AS(build_ebs_demo(EbsParams{0, {0, 1, 2}, true}), Error);
  CHECK_THROWS_AS(build_ebs_demo(EbsParams{2, {}, true}), Error);
  CHECK_THROWS_AS(build_ebs_demo(EbsParams{2, {3}, true}), Error);

  EbsDemo d = build_ebs_demo({});
  CHECK(render_property(d.p) == "G (x=red => F<=3 (velocity=0))");
  CHECK(render_property(d.c1.guarantee) == "G (Class=red => F<=3 (velocity=0))");
  CHECK_FALSE(d.c1.assume.has_value());
  REQUIRE(d.m1.components.size() == 2);
  const ComponentModel& veh = d.m1.components[1];
  CHECK(veh.states.size() == 3);
  CHECK(veh.initial.size() == 3);

  // Premise 1 holds exactly when the vehicle stops within the deadline: red
  // seen at t, brake output at t+1, level 0 reached B ticks later.
  for (int b = 1; b <= 6; ++b) {
    EbsDemo e = build_ebs_demo(EbsParams{b, {0, 1, 2}, true});
    const CheckResult r = check_property(e.m1, e.c1.guarantee);
    CHECK(r.holds == (1 + b <= 3));
    const auto oracle = oracle::shortest_violation(e.m1.components, e.c1.guarantee);
    CHECK(oracle.has_value() == !r.holds);
    if (!r.holds) {
      CHECK(r.trace.size() == *oracle);
      std::string why;
      CHECK_MESSAGE(replay_trace(e.m1, e.c1.guarantee, r.trace, &why), why);
    }
  }
}

TEST_CASE("EBS assume-guarantee outcomes") {
  const DnnContract contract = semaphore_contract();

  EbsDemo ok = build_ebs_demo({});
  AgReport rep = check_assume_guarantee(ok.m1, ok.c1, DnnSide{contract, ok.labels, ok.nn}, ok.p);
  for (const auto& pr : rep.premises) CHECK_MESSAGE(pr.holds, pr.detail);
  CHECK(rep.conclusion);
  const System full = ebs_full_system(ok, contract);
  CHECK(check_property(full, ok.p).holds);
  CHECK_FALSE(oracle::shortest_violation(full.components, ok.p).has_value());

  EbsDemo slow = build_ebs_demo(EbsParams{4, {0, 1, 2}, true});
  AgReport bad = check_assume_guarantee(slow.m1, slow.c1, DnnSide{contract, slow.labels, slow.nn}, slow.p);
  CHECK_FALSE(bad.premises[0].holds);
  CHECK_FALSE(bad.conclusion);
  REQUIRE(bad.premises[0].check);
  CHECK(replay_trace(slow.m1, slow.c1.guarantee, bad.premises[0].check->trace));
  const System slow_full = ebs_full_system(slow, contract);
  const CheckResult mono = check_property(slow_full, slow.p);
  CHECK_FALSE(mono.holds);
  CHECK(mono.trace.size() == *oracle::shortest_violation(slow_full.components, slow.p));
  CHECK(replay_trace(slow_full, slow.p, mono.trace));

  // Already stopped.
  EbsDemo still = build_ebs_demo(EbsParams{4, {0}, true});
  CHECK(check_assume_guarantee(still.m1, still.c1, DnnSide{contract, still.labels, still.nn}, still.p).conclusion);
  CHECK(check_property(ebs_full_system(still, contract), still.p).holds);

  // A weaker deadline in C1 no longer implies P.
  EbsDemo weak = build_ebs_demo({});
  weak.c1.guarantee = parse_property("G (Class=red => F<=5 (velocity=0))");
  AgReport wr = check_assume_guarantee(weak.m1, weak.c1, DnnSide{contract, weak.labels, weak.nn}, weak.p);
  CHECK(wr.premises[0].holds);
  CHECK_FALSE(wr.premises[2].holds);

  // Without the fail-safe, an empty contract leaves Class unconstrained.
  EbsDemo open = build_ebs_demo(EbsParams{2, {0, 1, 2}, false});
  DnnContract empty{"semaphore", {}, {}};
  AgReport er = check_assume_guarantee(open.m1, open.c1, DnnSide{empty, open.labels, open.nn}, open.p);
  CHECK_FALSE(er.premises[2].holds);
  CHECK(er.premises[2].detail.find("warning") != std::string::npos);
  // With it, every token maps to red and the proof goes through.
  EbsDemo guarded = build_ebs_demo({});
  CHECK(check_assume_guarantee(guarded.m1, guarded.c1, DnnSide{empty, guarded.labels, guarded.nn}, guarded.p)
            .premises[2]
            .holds);
}

TEST_CASE("EBS demo report") {
  EbsRunOptions opt;
  EbsRun a = run_ebs_demo(opt);
  CHECK(a.conclusion);
  CHECK_NOTHROW(check_report_schema(a.report));
  CHECK(a.report["property"] == "G (x=red => F<=3 (velocity=0))");
  CHECK(a.report["note"].get<std::string>().find("illustrative") != std::string::npos);
  opt.workers = 3;
  EbsRun b = run_ebs_demo(opt);
  CHECK(mask_runtime(a.report).dump() == mask_runtime(b.report).dump());

  opt.params.braking_ticks = 4;
  EbsRun c = run_ebs_demo(opt);
  CHECK_FALSE(c.conclusion);
  const Json& p1 = c.report["assume_guarantee"]["premises"][0];
  CHECK_FALSE(p1["holds"].get<bool>());
  CHECK(p1["counterexample"].size() > 0);
  CHECK_NOTHROW(check_report_schema(c.report));

  // The emitted system parses back and its NN matches the abstraction.
  EbsDemo d = build_ebs_demo(opt.params);
  Json sys = ebs_system_json(d, c.contract);
  System parsed = system_from_json(sys);
  CHECK(parsed == c.full_system);
}

TEST_CASE("cli usage errors") {
  auto none = cli({});
  CHECK(none.code == 2);
  CHECK(none.err.find("Usage") != std::string::npos);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"verify", "--bogus"}).code == 2);
  CHECK(cli({"verify", "--net", "/nonexistent/net", "--regions", "/nonexistent/r.json"}).code == 2);
  CHECK(cli({"grid"}).code == 2);
  CHECK(cli({"demo"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
  auto g = cli({"grid", "--cut", "a=1,2", "--cut", "b=3"});
  CHECK(g.code == 0);
  CHECK(g.out == "a,b\n1,3\n2,3\n");
  CHECK(cli({"grid", "--cut", "a=1,2", "--cut", "b=3,4,5", "--count-only"}).out == "6\n");
}

TEST_CASE("cli pipeline") {
  TempDir tmp;
  Semaphore s = build_semaphore_classifier(42);
  text::write_file(tmp("net.txt"), render_network(s.network));
  text::write_file(tmp("data.csv"), render_dataset_csv(s.data, s.network.labels));

  auto disc = cli({"discover", "--data", tmp("data.csv"), "--net", tmp("net.txt"), "--metric", "l2", "--out",
                   tmp("regions.json"), "--format", "json"});
  REQUIRE_MESSAGE(disc.code == 0, disc.err);
  Json regions = Json::parse(text::read_file(tmp("regions.json")));
  CHECK_NOTHROW(check_report_schema(regions));
  CHECK(Json::parse(disc.out)["regions"] == regions["regions"].size());

  auto ver = cli({"verify", "--net", tmp("net.txt"), "--regions", tmp("regions.json"), "--workers", "2", "--out",
                  tmp("report.json"), "--plot", tmp("plot")});
  REQUIRE_MESSAGE(ver.code == 0, ver.err);
  Json report = Json::parse(text::read_file(tmp("report.json")));
  CHECK_NOTHROW(check_report_schema(report));
  CHECK(report["summary"]["fully_safe"].get<std::size_t>() >= 3);
  CHECK(fs::exists(tmp("plot.csv")));
  CHECK(fs::exists(tmp("plot.svg")));

  auto em = cli({"emit-contracts", "--net", tmp("net.txt"), "--report", tmp("report.json"), "--out",
                 tmp("contract.json"), "--format", "json"});
  REQUIRE_MESSAGE(em.code == 0, em.err);
  CHECK_NOTHROW(check_report_schema(Json::parse(em.out)));
  const DnnContract contract = parse_dnn_contract(text::read_file(tmp("contract.json")));
  CHECK(contract == semaphore_contract(42));

  // Guard: prototypes are covered, a far corner fails safe.
  std::string csv = "f0,f1,f2,f3,f4,f5,f6,f7\n";
  for (const auto& p : s.prototypes) csv += text::join_doubles(p) + "\n";
  csv += "0,0,1,0,0,1,0,1\n";
  text::write_file(tmp("in.csv"), csv);
  auto gd = cli({"guard", "--net", tmp("net.txt"), "--contracts", tmp("contract.json"), "--data", tmp("in.csv"),
                 "--fail-safe", "brake", "--out", tmp("guard.jsonl"), "--format", "json"});
  REQUIRE_MESSAGE(gd.code == 0, gd.err);
  Json gsum = Json::parse(gd.out);
  CHECK_NOTHROW(check_report_schema(gsum));
  CHECK(gsum["rows"] == 4);
  std::istringstream lines(text::read_file(tmp("guard.jsonl")));
  std::string line;
  std::vector<Json> decisions;
  while (std::getline(lines, line)) decisions.push_back(Json::parse(line));
  REQUIRE(decisions.size() == 4);
  for (int i = 0; i < 3; ++i) {
    CHECK(decisions[i]["kind"] == "Covered");
    CHECK(decisions[i]["label"] == s.network.labels[i]);
  }
  CHECK(decisions[3]["kind"] == "FailSafe");
  CHECK(decisions[3]["action"] == "brake");

  auto gr = cli({"grid", "--cut", "a=0,1", "--cut", "b=0.5", "--out", tmp("grid.csv"), "--format", "json"});
  CHECK(gr.code == 0);
  CHECK_NOTHROW(check_report_schema(Json::parse(gr.out)));
}

TEST_CASE("cli demo and check-system") {
  TempDir tmp;
  auto ok = cli({"demo", "ebs", "--braking-ticks", "2", "--out", tmp("d2.json"), "--emit-system", tmp("s2.json")});
  CHECK_MESSAGE(ok.code == 0, ok.err);
  CHECK_NOTHROW(check_report_schema(Json::parse(text::read_file(tmp("d2.json")))));
  auto c2 = cli({"check-system", "--system", tmp("s2.json"), "--out", tmp("c2.json")});
  CHECK_MESSAGE(c2.code == 0, c2.err);
  CHECK_NOTHROW(check_report_schema(Json::parse(text::read_file(tmp("c2.json")))));

  auto bad = cli({"demo", "ebs", "--braking-ticks", "4", "--out", tmp("d4.json"), "--emit-system", tmp("s4.json")});
  CHECK(bad.code == 1);
  auto c4 = cli({"check-system", "--system", tmp("s4.json"), "--out", tmp("c4.json")});
  CHECK(c4.code == 1);
  Json r4 = Json::parse(text::read_file(tmp("c4.json")));
  CHECK_NOTHROW(check_report_schema(r4));
  CHECK_FALSE(r4["holds"].get<bool>());
  CHECK(r4["results"][0]["monolithic"]["counterexample"].size() > 0);
  CHECK(r4["results"][0]["assume_guarantee"]["premises"][0]["counterexample"].size() > 0);

  // Property override on the good system that the composition violates.
  auto c5 = cli({"check-system", "--system", tmp("s2.json"), "--property", "G (x=red => F<=1 (velocity=0))",
                 "--out", tmp("c5.json")});
  CHECK(c5.code == 1);
  CHECK(cli({"check-system", "--system", tmp("s2.json"), "--property", "G (x=red =>"}).code == 2);
}

TEST_CASE("check-system with a component decomposition") {
  TempDir tmp;
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = fixtures::random_ag_instance(seed);
    Json sys = to_json(inst.full);
    Json m1 = Json::array(), m2 = Json::array();
    for (const auto& c : inst.m1.components) m1.push_back(c.name);
    for (const auto& c : inst.m2.system.components) m2.push_back(c.name);
    sys["properties"] = Json::array({render_property(inst.p)});
    sys["decomposition"] = Json{{"m1", m1},
                                {"c1", to_json(inst.c1)},
                                {"m2", Json{{"components", m2}, {"contract", to_json(inst.m2.contract)}}}};
    const std::string path = tmp("sys" + std::to_string(seed) + ".json");
    text::write_file(path, sys.dump());
    const AgReport ag = check_assume_guarantee(inst.m1, inst.c1, inst.m2, inst.p);
    const bool mono = check_property(inst.full, inst.p).holds;
    auto r = cli({"check-system", "--system", path, "--out", tmp("out.json")});
    CHECK(r.code == (ag.conclusion && mono ? 0 : 1));
    ++checked;
  }
  CHECK(checked == 10);
}
