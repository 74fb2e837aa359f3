#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "safecomp/compose.hpp"
#include "safecomp/contracts.hpp"
#include "safecomp/contracts_json.hpp"
#include "safecomp/network.hpp"
#include "safecomp/regions.hpp"
#include "safecomp/verifier.hpp"

namespace safecomp {

inline constexpr const char* kToolName = "safecomp";
inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Parallel verification

// Runs verify_full for every region on a fixed pool of `workers` threads.
// Each region gets the seed mix_seed(seed, fnv1a(id)), so results do not
// depend on the worker count. Output is sorted by region id.
std::vector<RegionVerification> run_parallel_verification(const Network& net, std::span<const Region> regions,
                                                          const VerifierOptions& options, std::size_t workers,
                                                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Files and reports

Json regions_to_json(std::span<const Region> regions, const std::vector<std::string>& labels);
std::vector<Region> regions_from_json(const Json& j, const std::vector<std::string>& labels);

struct ReportContext {
  std::string command;
  Json config = Json::object();
  std::size_t workers = 1;
  double elapsed_s = 0.0;
  bool polar = false; // project counterexamples with (rho, theta) = raw dims 0, 1
};

Json verification_report(const Network& net, std::span<const RegionVerification> results,
                         const ReportContext& ctx);
// Rebuilds regions and verdicts from a verification report.
std::vector<RegionVerification> results_from_report(const Json& report, const Network& net);
// Drops wall-clock fields so that reports can be compared byte for byte.
Json mask_runtime(Json report);

// Throws Error naming the first missing or mistyped field.
void check_report_schema(const Json& report);

std::pair<double, double> project_polar(double rho, double theta);

struct PlotPoint {
  std::string region;
  std::string target;
  double downrange = 0.0;
  double crossrange = 0.0;
};

std::vector<PlotPoint> counterexample_points(const Network& net, std::span<const RegionVerification> results);
std::string render_plot_csv(std::span<const PlotPoint> points);
std::string render_plot_svg(std::span<const PlotPoint> points);

// ---------------------------------------------------------------------------
// Cartesian input grids

struct CutPoints {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
};

// Parses "name=v1,v2,..." specs, one per dimension.
CutPoints parse_cutpoints(std::span<const std::string> specs);
// Product of list lengths; throws Error on overflow or an empty list.
std::size_t grid_size(const CutPoints& cuts);
// Visits points in lexicographic order (last dimension fastest).
void for_each_grid_point(const CutPoints& cuts, const std::function<void(std::span<const double>)>& visit);
LabeledDataset generate_grid(const CutPoints& cuts);
// Streams the grid as CSV. With a network, each raw point is classified and a
// label column is appended. Returns the number of rows.
std::size_t write_grid_csv(const CutPoints& cuts, std::ostream& out, const Network* label_with = nullptr);

// ---------------------------------------------------------------------------
// Demo fixtures

struct Semaphore {
  Network network;
  LabeledDataset data;
  std::vector<std::vector<double>> prototypes; // red, yellow, green
};

Semaphore build_semaphore_classifier(std::uint64_t seed = 42);

struct EbsParams {
  int braking_ticks = 2;
  std::vector<int> velocities{0, 1, 2}; // initial velocities; the largest is the top speed
  bool guard = true;                    // outside-region tokens force Class=red
};

struct EbsDemo {
  System m1; // BreakingSystem || Vehicle
  ComponentContract c1;
  DnnContract c2; // stub until the classifier pipeline fills it
  Property p;
  std::vector<std::string> labels;
  AbstractionOptions nn;
};

EbsDemo build_ebs_demo(const EbsParams& params);
// M1 plus the abstract classifier for `contract`.
System ebs_full_system(const EbsDemo& demo, const DnnContract& contract);

struct EbsRun {
  Json report;
  bool conclusion = false;
  System full_system;
  DnnContract contract;
};

struct EbsRunOptions {
  EbsParams params;
  std::uint64_t seed = 42;
  std::size_t workers = 1;
  VerifierOptions verifier;
};

// discover -> verify -> emit -> abstract -> assume-guarantee check.
EbsRun run_ebs_demo(const EbsRunOptions& opt);
// System JSON with a "decomposition" block that check-system understands.
Json ebs_system_json(const EbsDemo& demo, const DnnContract& contract);

// ---------------------------------------------------------------------------

// Command-line entry point. Returns 0 on success, 1 when a property or
// verification fails, 2 on usage or I/O errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace safecomp
