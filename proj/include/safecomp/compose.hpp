#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "safecomp/contracts.hpp"

namespace safecomp {

struct Port {
  std::string name;
  std::vector<std::string> domain;

  // Index of `value` in the domain, or nullopt.
  std::optional<std::size_t> index_of(std::string_view value) const;

  bool operator==(const Port&) const = default;
};

using Domains = std::map<std::string, std::vector<std::string>>;
using Valuation = std::map<std::string, std::string>;

// Finite Moore machine. States may have several successors and there may be
// several initial states; deterministic models have exactly one of each.
struct ComponentModel {
  std::string name;
  std::vector<Port> inputs;
  std::vector<Port> outputs;
  std::vector<std::string> states;
  std::vector<std::size_t> initial;
  // output_map[state][k] is the value index of outputs[k].
  std::vector<std::vector<std::size_t>> output_map;
  // transitions[state][combination] lists successor states. Combinations
  // are mixed-radix over `inputs`, last input varying fastest.
  std::vector<std::vector<std::vector<std::size_t>>> transitions;

  std::size_t combinations() const;
  std::size_t combination_index(std::span<const std::size_t> input_values) const;
  std::vector<std::size_t> combination_values(std::size_t combination) const;
  const std::vector<std::size_t>& successors(std::size_t state, std::span<const std::size_t> input_values) const {
    return transitions[state][combination_index(input_values)];
  }
  std::optional<std::size_t> state_index(std::string_view s) const;

  bool operator==(const ComponentModel&) const = default;
};

// Structural checks. With `require_total`, every (state, input combination)
// needs at least one successor; generated environments may deadlock instead.
void validate(const ComponentModel& m, bool require_total = true);

// Builds a model by enumerating `next` over every state and input valuation.
ComponentModel build_component(
    std::string name, std::vector<Port> inputs, std::vector<Port> outputs,
    std::vector<std::string> states, const std::vector<std::string>& initial,
    const std::function<Valuation(const std::string& state)>& output,
    const std::function<std::vector<std::string>(const std::string& state, const Valuation& in)>& next);

struct Wire {
  std::string from_component;
  std::string from_port;
  std::string to_component;
  std::string to_port;

  bool operator==(const Wire&) const = default;
};

// Signals are global by name. An input port reads, in order of preference,
// its explicit wire, an output port of the same name, or a free environment
// signal of the same name. Outputs sharing a name must agree every tick.
struct System {
  std::string name;
  std::vector<ComponentModel> components;
  std::vector<Wire> wiring;
  double ticks_per_second = 1.0;
  std::vector<std::string> properties;

  bool operator==(const System&) const = default;
};

System parse_system(std::string_view json);
std::string render_system(const System& s);

struct Signal {
  std::string name;
  std::vector<std::string> domain;
  bool free = false;
};

using ProductState = std::vector<std::size_t>;

// Synchronous product. A tick reads every Moore output, picks free signal
// values, then steps all components at once.
class Product {
public:
  explicit Product(System system);

  const System& system() const { return system_; }
  const std::vector<Signal>& signals() const { return signals_; }
  std::optional<std::size_t> signal_index(std::string_view name) const;
  Domains domains() const;

  std::vector<ProductState> initial_states() const;
  std::size_t env_choices() const { return env_choices_; }
  // Full valuation (value index per signal) in `state` under a free choice.
  std::vector<std::size_t> valuation(const ProductState& state, std::size_t env_choice) const;
  std::vector<ProductState> successors(const ProductState& state, std::span<const std::size_t> valuation) const;

  bool consistent(const ProductState& state) const;
  std::size_t count_reachable() const;

private:
  void enumerate(const std::vector<const std::vector<std::size_t>*>& options,
                 std::vector<ProductState>& out) const;

  struct InputSource {
    std::size_t signal;
    std::vector<std::size_t> value_map; // signal value index -> port value index
  };

  System system_;
  std::vector<Signal> signals_;
  std::vector<std::vector<InputSource>> inputs_;    // per component, per input port
  std::vector<std::vector<std::size_t>> outputs_;   // per component, per output port -> signal
  std::vector<std::size_t> free_;                   // free signal indices
  std::size_t env_choices_ = 1;
};

// Collapses the reachable product into a single component whose inputs are
// the free signals and whose outputs are all other signals.
ComponentModel to_component(const Product& product, std::string name);

// ---------------------------------------------------------------------------
// Monitors

// Obligation tracker for one property. State 0 is idle; for G (a => F<=k b)
// states 1..k count the ticks still available to the earliest pending
// obligation; the last state is the absorbing violation.
class Monitor {
public:
  explicit Monitor(Property p);

  const Property& property() const { return p_; }
  int state() const { return state_; }
  bool violated() const { return state_ == violated_state(p_); }
  // Reads one valuation; returns false once the property is violated.
  bool step(const Valuation& v);

  static int violated_state(const Property& p) { return p.deadline ? *p.deadline + 1 : 1; }
  static int next(const Property& p, int state, bool antecedent, bool consequent);

private:
  Property p_;
  int state_ = 0;
};

// Observer with a boolean `ok` output (values "false", "true") that reads
// the contract's ports. Moore latency: `ok` at tick t covers ticks < t.
ComponentModel contract_monitor(const ComponentContract& c, const Domains& domains,
                                std::string ok_port = "ok");
ComponentModel contract_monitor(const Property& p, const Domains& domains, std::string ok_port = "ok");

// Generator emitting exactly the valuation sequences over the contract's
// ports that satisfy it: G may only fail after A already failed.
ComponentModel most_general_environment(const ComponentContract& c, const Domains& domains);
ComponentModel most_general_environment(const Property& p, const Domains& domains, std::string name);
// Unconstrained generator for `ports`.
ComponentModel free_environment(const std::vector<std::string>& ports, const Domains& domains,
                                std::string name);

// ---------------------------------------------------------------------------
// Checking

struct TraceStep {
  std::vector<std::string> states;                            // per component
  std::vector<std::pair<std::string, std::string>> valuation; // signal order
};

struct CheckResult {
  bool holds = true;
  std::vector<TraceStep> trace;
  std::size_t states_explored = 0;
  std::vector<std::string> components;
};

struct CheckOptions {
  std::size_t max_states = 5'000'000;
};

CheckResult check_property(const Product& product, const Property& p, const CheckOptions& opt = {});
CheckResult check_property(const System& system, const Property& p, const CheckOptions& opt = {});

// True when `trace` is a run of `system` on which `p` is first violated at
// the last step. Otherwise `why` (if given) receives the reason.
bool replay_trace(const System& system, const Property& p, const std::vector<TraceStep>& trace,
                  std::string* why = nullptr);

// ---------------------------------------------------------------------------
// Classifier abstraction and the assume-guarantee rule

struct AbstractionOptions {
  std::string name = "NN";
  std::string token_port = "token";
  std::string class_port = "Class";
  std::string outside_token = "outside";
  std::optional<std::string> truth_port;     // ground-truth label output
  std::optional<std::string> failsafe_label; // forced class outside all regions
};

struct DnnAbstraction {
  ComponentModel model;
  std::vector<std::string> warnings;
};

// Reads a perception token (one per contract region, plus `outside`) and
// latches the class it may produce next tick.
DnnAbstraction abstract_dnn_component(const DnnContract& c, const std::vector<std::string>& labels,
                                      const AbstractionOptions& opt = {});

struct DnnSide {
  DnnContract contract;
  std::vector<std::string> labels;
  AbstractionOptions options;
};

struct ComponentSide {
  System system;
  ComponentContract contract;
};

struct PremiseResult {
  std::string name;
  std::string statement;
  bool holds = false;
  std::string detail;
  std::optional<CheckResult> check;
};

struct AgReport {
  std::array<PremiseResult, 3> premises;
  bool conclusion = false;
  std::string conclusion_statement;
};

AgReport check_assume_guarantee(const System& m1, const ComponentContract& c1,
                                const std::variant<DnnSide, ComponentSide>& m2, const Property& p);

} // namespace safecomp
