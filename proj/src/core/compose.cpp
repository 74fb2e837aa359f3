#include "safecomp/compose.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <unordered_map>

#include "safecomp/error.hpp"
#include "safecomp/rng.hpp"

namespace safecomp {

namespace {

std::size_t radix_size(const std::vector<Port>& ports) {
  std::size_t n = 1;
  for (const auto& p : ports) n *= p.domain.size();
  return n;
}

std::vector<std::size_t> decode(std::size_t index, const std::vector<std::size_t>& radices) {
  std::vector<std::size_t> out(radices.size());
  for (std::size_t i = radices.size(); i-- > 0;) {
    out[i] = index % radices[i];
    index /= radices[i];
  }
  return out;
}

std::vector<std::size_t> domain_sizes(const std::vector<Port>& ports) {
  std::vector<std::size_t> out;
  for (const auto& p : ports) out.push_back(p.domain.size());
  return out;
}

struct StateHash {
  std::size_t operator()(const std::vector<std::size_t>& v) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto x : v) h = splitmix64(h ^ x);
    return static_cast<std::size_t>(h);
  }
};

bool holds(const std::vector<Literal>& lits, const Valuation& v) {
  for (const auto& l : lits) {
    auto it = v.find(l.port);
    if (it == v.end()) throw Error("valuation has no port '" + l.port + "'");
    if (it->second != l.value) return false;
  }
  return true;
}

const std::vector<std::string>& domain_of(const Domains& domains, const std::string& port) {
  auto it = domains.find(port);
  if (it == domains.end()) throw Error("no value domain for port '" + port + "'");
  return it->second;
}

void check_values(const Property& p, const Domains& domains) {
  for (const auto* side : {&p.antecedent, &p.consequent})
    for (const auto& l : *side) {
      const auto& d = domain_of(domains, l.port);
      if (std::find(d.begin(), d.end(), l.value) == d.end())
        throw Error("value '" + l.value + "' is not in the domain of port '" + l.port + "'");
    }
}

std::vector<Port> ports_for(const std::vector<std::string>& names, const Domains& domains) {
  std::vector<Port> out;
  for (const auto& n : names) out.push_back({n, domain_of(domains, n)});
  return out;
}

Valuation valuation_of(const std::vector<Port>& ports, const std::vector<std::size_t>& idx) {
  Valuation v;
  for (std::size_t i = 0; i < ports.size(); ++i) v[ports[i].name] = ports[i].domain[idx[i]];
  return v;
}

std::string join_values(const std::vector<Port>& ports, const std::vector<std::size_t>& idx) {
  std::string s;
  for (std::size_t i = 0; i < ports.size(); ++i) {
    if (i) s += ",";
    s += ports[i].name + "=" + ports[i].domain[idx[i]];
  }
  return s;
}

// Joint state of an assumption monitor and a guarantee monitor.
struct ContractTracker {
  const Property* assume = nullptr;
  const Property* guarantee = nullptr;

  static constexpr int broken = -1; // assumption failed: anything goes
  static constexpr int bad = -2;    // guarantee failed under the assumption

  // Packed as assume_state * G_states + guarantee_state, or a sentinel.
  int step(int state, const Valuation& v) const {
    if (state == broken || state == bad) return state;
    const int gs = Monitor::violated_state(*guarantee) + 1;
    int ma = state / gs, mg = state % gs;
    if (assume) {
      ma = Monitor::next(*assume, ma, holds(assume->antecedent, v), holds(assume->consequent, v));
      if (ma == Monitor::violated_state(*assume)) return broken;
    }
    mg = Monitor::next(*guarantee, mg, holds(guarantee->antecedent, v), holds(guarantee->consequent, v));
    if (mg == Monitor::violated_state(*guarantee)) return bad;
    return ma * gs + mg;
  }

  static std::string name(int state) {
    if (state == broken) return "assume_broken";
    if (state == bad) return "violated";
    return "m" + std::to_string(state);
  }
};

} // namespace

std::optional<std::size_t> Port::index_of(std::string_view value) const {
  for (std::size_t i = 0; i < domain.size(); ++i)
    if (domain[i] == value) return i;
  return std::nullopt;
}

std::size_t ComponentModel::combinations() const { return radix_size(inputs); }

std::size_t ComponentModel::combination_index(std::span<const std::size_t> input_values) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) idx = idx * inputs[i].domain.size() + input_values[i];
  return idx;
}

std::vector<std::size_t> ComponentModel::combination_values(std::size_t combination) const {
  return decode(combination, domain_sizes(inputs));
}

std::optional<std::size_t> ComponentModel::state_index(std::string_view s) const {
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i] == s) return i;
  return std::nullopt;
}

void validate(const ComponentModel& m, bool require_total) {
  const std::string ctx = "component '" + m.name + "': ";
  for (const auto* ports : {&m.inputs, &m.outputs}) {
    std::set<std::string> names;
    for (const auto& p : *ports) {
      if (p.domain.empty()) throw Error(ctx + "port '" + p.name + "' has an empty domain");
      if (!names.insert(p.name).second) throw Error(ctx + "duplicate port '" + p.name + "'");
      if (std::set<std::string>(p.domain.begin(), p.domain.end()).size() != p.domain.size())
        throw Error(ctx + "port '" + p.name + "' repeats a value");
    }
  }
  if (m.states.empty()) throw Error(ctx + "no states");
  if (std::set<std::string>(m.states.begin(), m.states.end()).size() != m.states.size())
    throw Error(ctx + "duplicate state names");
  if (m.initial.empty()) throw Error(ctx + "no initial state");
  for (auto s : m.initial)
    if (s >= m.states.size()) throw Error(ctx + "initial state out of range");
  if (m.output_map.size() != m.states.size()) throw Error(ctx + "output map is not total over states");
  for (const auto& row : m.output_map) {
    if (row.size() != m.outputs.size()) throw Error(ctx + "output map row has the wrong width");
    for (std::size_t k = 0; k < row.size(); ++k)
      if (row[k] >= m.outputs[k].domain.size()) throw Error(ctx + "output value out of range");
  }
  if (m.transitions.size() != m.states.size()) throw Error(ctx + "transition table is not total over states");
  const std::size_t combos = m.combinations();
  for (std::size_t s = 0; s < m.states.size(); ++s) {
    if (m.transitions[s].size() != combos) throw Error(ctx + "transition row has the wrong width");
    for (const auto& succ : m.transitions[s]) {
      if (require_total && succ.empty())
        throw Error(ctx + "no transition from state '" + m.states[s] + "' for some input");
      for (auto t : succ)
        if (t >= m.states.size()) throw Error(ctx + "successor out of range");
    }
  }
}

ComponentModel build_component(
    std::string name, std::vector<Port> inputs, std::vector<Port> outputs,
    std::vector<std::string> states, const std::vector<std::string>& initial,
    const std::function<Valuation(const std::string& state)>& output,
    const std::function<std::vector<std::string>(const std::string& state, const Valuation& in)>& next) {
  ComponentModel m;
  m.name = std::move(name);
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  m.states = std::move(states);
  auto index = [&](const std::string& s) {
    auto i = m.state_index(s);
    if (!i) throw Error("component '" + m.name + "': unknown state '" + s + "'");
    return *i;
  };
  for (const auto& s : initial) m.initial.push_back(index(s));
  std::sort(m.initial.begin(), m.initial.end());
  m.initial.erase(std::unique(m.initial.begin(), m.initial.end()), m.initial.end());

  const std::size_t combos = m.combinations();
  m.output_map.resize(m.states.size());
  m.transitions.assign(m.states.size(), std::vector<std::vector<std::size_t>>(combos));
  for (std::size_t s = 0; s < m.states.size(); ++s) {
    const Valuation out = output(m.states[s]);
    for (const auto& p : m.outputs) {
      auto it = out.find(p.name);
      if (it == out.end()) throw Error("component '" + m.name + "': state '" + m.states[s] + "' has no value for " + p.name);
      auto v = p.index_of(it->second);
      if (!v) throw Error("component '" + m.name + "': value '" + it->second + "' outside domain of " + p.name);
      m.output_map[s].push_back(*v);
    }
    for (std::size_t c = 0; c < combos; ++c) {
      auto& succ = m.transitions[s][c];
      for (const auto& t : next(m.states[s], valuation_of(m.inputs, m.combination_values(c))))
        succ.push_back(index(t));
      std::sort(succ.begin(), succ.end());
      succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    }
  }
  validate(m, false);
  return m;
}

// ---------------------------------------------------------------------------

Product::Product(System system) : system_(std::move(system)) {
  const auto& comps = system_.components;
  std::map<std::string, std::size_t> comp_index;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    validate(comps[c], false);
    if (!comp_index.emplace(comps[c].name, c).second)
      throw Error("duplicate component name '" + comps[c].name + "'");
  }

  std::map<std::string, std::size_t> by_name;
  outputs_.resize(comps.size());
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (const auto& p : comps[c].outputs) {
      auto it = by_name.find(p.name);
      if (it == by_name.end()) {
        it = by_name.emplace(p.name, signals_.size()).first;
        signals_.push_back({p.name, p.domain, false});
      } else if (signals_[it->second].domain != p.domain) {
        throw Error("signal '" + p.name + "' is produced with different domains");
      }
      outputs_[c].push_back(it->second);
    }

  std::map<std::pair<std::size_t, std::string>, std::string> wired; // consumer input -> producer port
  for (const auto& w : system_.wiring) {
    auto from = comp_index.find(w.from_component);
    auto to = comp_index.find(w.to_component);
    if (from == comp_index.end() || to == comp_index.end())
      throw Error("wire " + w.from_component + "." + w.from_port + " -> " + w.to_component + "." + w.to_port +
                  " names an unknown component");
    const auto& fo = comps[from->second].outputs;
    if (std::none_of(fo.begin(), fo.end(), [&](const Port& p) { return p.name == w.from_port; }))
      throw Error("wire source " + w.from_component + "." + w.from_port + " is not an output port");
    const auto& ti = comps[to->second].inputs;
    if (std::none_of(ti.begin(), ti.end(), [&](const Port& p) { return p.name == w.to_port; }))
      throw Error("wire target " + w.to_component + "." + w.to_port + " is not an input port");
    if (!wired.emplace(std::make_pair(to->second, w.to_port), w.from_port).second)
      throw Error("input " + w.to_component + "." + w.to_port + " is wired more than once");
  }

  std::map<std::string, std::size_t> free_by_name;
  inputs_.resize(comps.size());
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (const auto& p : comps[c].inputs) {
      std::size_t sig;
      auto w = wired.find({c, p.name});
      if (w != wired.end()) {
        sig = by_name.at(w->second);
      } else if (auto it = by_name.find(p.name); it != by_name.end()) {
        sig = it->second;
      } else if (auto f = free_by_name.find(p.name); f != free_by_name.end()) {
        sig = f->second;
      } else {
        sig = signals_.size();
        free_by_name.emplace(p.name, sig);
        signals_.push_back({p.name, p.domain, true});
        free_.push_back(sig);
      }
      InputSource src{sig, {}};
      for (const auto& v : signals_[sig].domain) {
        auto idx = p.index_of(v);
        if (!idx)
          throw Error("type mismatch: signal '" + signals_[sig].name + "' value '" + v +
                      "' is outside the domain of " + comps[c].name + "." + p.name);
        src.value_map.push_back(*idx);
      }
      inputs_[c].push_back(std::move(src));
    }
  for (auto f : free_) env_choices_ *= signals_[f].domain.size();
}

std::optional<std::size_t> Product::signal_index(std::string_view name) const {
  for (std::size_t i = 0; i < signals_.size(); ++i)
    if (signals_[i].name == name) return i;
  return std::nullopt;
}

Domains Product::domains() const {
  Domains d;
  for (const auto& s : signals_) d[s.name] = s.domain;
  return d;
}

void Product::enumerate(const std::vector<const std::vector<std::size_t>*>& options,
                        std::vector<ProductState>& out) const {
  const auto& comps = system_.components;
  std::vector<long> assigned(signals_.size(), -1);
  ProductState cur(comps.size());
  std::function<void(std::size_t)> rec = [&](std::size_t c) {
    if (c == comps.size()) {
      out.push_back(cur);
      return;
    }
    for (auto s : *options[c]) {
      std::vector<std::size_t> set_here;
      bool ok = true;
      for (std::size_t k = 0; k < outputs_[c].size() && ok; ++k) {
        const std::size_t sig = outputs_[c][k];
        const long v = static_cast<long>(comps[c].output_map[s][k]);
        if (assigned[sig] == -1) {
          assigned[sig] = v;
          set_here.push_back(sig);
        } else if (assigned[sig] != v) {
          ok = false;
        }
      }
      if (ok) {
        cur[c] = s;
        rec(c + 1);
      }
      for (auto sig : set_here) assigned[sig] = -1;
    }
  };
  rec(0);
  std::sort(out.begin(), out.end());
}

std::vector<ProductState> Product::initial_states() const {
  std::vector<const std::vector<std::size_t>*> options;
  for (const auto& c : system_.components) options.push_back(&c.initial);
  std::vector<ProductState> out;
  enumerate(options, out);
  return out;
}

std::vector<std::size_t> Product::valuation(const ProductState& state, std::size_t env_choice) const {
  std::vector<std::size_t> v(signals_.size(), 0);
  const auto& comps = system_.components;
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (std::size_t k = 0; k < outputs_[c].size(); ++k) v[outputs_[c][k]] = comps[c].output_map[state[c]][k];
  for (std::size_t i = free_.size(); i-- > 0;) {
    const std::size_t n = signals_[free_[i]].domain.size();
    v[free_[i]] = env_choice % n;
    env_choice /= n;
  }
  return v;
}

std::vector<ProductState> Product::successors(const ProductState& state,
                                              std::span<const std::size_t> valuation) const {
  const auto& comps = system_.components;
  std::vector<const std::vector<std::size_t>*> options;
  std::vector<std::size_t> in;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    in.clear();
    for (const auto& src : inputs_[c]) in.push_back(src.value_map[valuation[src.signal]]);
    options.push_back(&comps[c].successors(state[c], in));
  }
  std::vector<ProductState> out;
  enumerate(options, out);
  return out;
}

bool Product::consistent(const ProductState& state) const {
  std::vector<std::vector<std::size_t>> singletons;
  for (auto s : state) singletons.push_back({s});
  std::vector<const std::vector<std::size_t>*> options;
  for (const auto& s : singletons) options.push_back(&s);
  std::vector<ProductState> out;
  enumerate(options, out);
  return !out.empty();
}

std::size_t Product::count_reachable() const {
  std::unordered_map<ProductState, std::size_t, StateHash> seen;
  std::deque<ProductState> queue;
  for (auto& s : initial_states())
    if (seen.emplace(s, seen.size()).second) queue.push_back(s);
  while (!queue.empty()) {
    ProductState s = std::move(queue.front());
    queue.pop_front();
    for (std::size_t e = 0; e < env_choices_; ++e)
      for (auto& t : successors(s, valuation(s, e)))
        if (seen.emplace(t, seen.size()).second) queue.push_back(std::move(t));
  }
  return seen.size();
}

ComponentModel to_component(const Product& product, std::string name) {
  const auto& sigs = product.signals();
  ComponentModel m;
  m.name = std::move(name);
  for (const auto& s : sigs) (s.free ? m.inputs : m.outputs).push_back({s.name, s.domain});

  std::map<ProductState, std::size_t> index;
  std::vector<ProductState> order;
  auto intern = [&](const ProductState& s) {
    auto [it, fresh] = index.emplace(s, order.size());
    if (fresh) order.push_back(s);
    return it->second;
  };
  for (const auto& s : product.initial_states()) m.initial.push_back(intern(s));
  for (std::size_t i = 0; i < order.size(); ++i) {
    const ProductState s = order[i];
    std::vector<std::vector<std::size_t>> row;
    for (std::size_t e = 0; e < product.env_choices(); ++e) {
      std::vector<std::size_t> succ;
      for (const auto& t : product.successors(s, product.valuation(s, e))) succ.push_back(intern(t));
      std::sort(succ.begin(), succ.end());
      row.push_back(std::move(succ));
    }
    m.transitions.push_back(std::move(row));
  }
  const auto& comps = product.system().components;
  for (const auto& s : order) {
    std::string nm;
    for (std::size_t c = 0; c < s.size(); ++c) nm += (c ? "|" : "") + comps[c].states[s[c]];
    m.states.push_back(nm);
    const auto v = product.valuation(s, 0);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < sigs.size(); ++k)
      if (!sigs[k].free) out.push_back(v[k]);
    m.output_map.push_back(std::move(out));
  }
  validate(m, false);
  return m;
}

// ---------------------------------------------------------------------------

Monitor::Monitor(Property p) : p_(std::move(p)) {}

int Monitor::next(const Property& p, int state, bool antecedent, bool consequent) {
  const int violated = violated_state(p);
  if (state == violated) return violated;
  if (!p.deadline) return antecedent && !consequent ? violated : 0;
  int r = state;
  if (r > 0) {
    if (consequent)
      r = 0;
    else if (r == 1)
      return violated;
    else
      --r;
  }
  if (antecedent && !consequent && r == 0) r = *p.deadline;
  return r;
}

bool Monitor::step(const Valuation& v) {
  state_ = next(p_, state_, holds(p_.antecedent, v), holds(p_.consequent, v));
  return !violated();
}

ComponentModel contract_monitor(const ComponentContract& c, const Domains& domains, std::string ok_port) {
  if (c.assume) check_values(*c.assume, domains);
  check_values(c.guarantee, domains);
  ContractTracker tr{c.assume ? &*c.assume : nullptr, &c.guarantee};
  const int gs = Monitor::violated_state(c.guarantee) + 1;
  const int as = c.assume ? Monitor::violated_state(*c.assume) : 1;
  std::vector<std::string> states;
  for (int s = 0; s < as * gs; ++s) states.push_back(ContractTracker::name(s));
  states.push_back(ContractTracker::name(ContractTracker::broken));
  states.push_back(ContractTracker::name(ContractTracker::bad));
  auto decode_state = [&](const std::string& n) {
    if (n == ContractTracker::name(ContractTracker::broken)) return ContractTracker::broken;
    if (n == ContractTracker::name(ContractTracker::bad)) return ContractTracker::bad;
    return std::stoi(n.substr(1));
  };
  return build_component(
      "monitor(" + c.name + ")", ports_for(c.ports(), domains), {Port{ok_port, {"false", "true"}}}, states,
      {ContractTracker::name(0)},
      [&](const std::string& s) {
        return Valuation{{ok_port, s == ContractTracker::name(ContractTracker::bad) ? "false" : "true"}};
      },
      [&](const std::string& s, const Valuation& in) {
        return std::vector<std::string>{ContractTracker::name(tr.step(decode_state(s), in))};
      });
}

ComponentModel contract_monitor(const Property& p, const Domains& domains, std::string ok_port) {
  return contract_monitor(ComponentContract{"P", std::nullopt, p}, domains, std::move(ok_port));
}

ComponentModel most_general_environment(const ComponentContract& c, const Domains& domains) {
  if (c.assume) check_values(*c.assume, domains);
  check_values(c.guarantee, domains);
  ContractTracker tr{c.assume ? &*c.assume : nullptr, &c.guarantee};

  ComponentModel m;
  m.name = "MGE(" + c.name + ")";
  m.outputs = ports_for(c.ports(), domains);
  const auto radices = domain_sizes(m.outputs);
  const std::size_t nval = radix_size(m.outputs);
  std::vector<Valuation> vals;
  for (std::size_t i = 0; i < nval; ++i) vals.push_back(valuation_of(m.outputs, decode(i, radices)));

  std::map<std::pair<int, std::size_t>, std::size_t> index;
  std::vector<std::pair<int, std::size_t>> order;
  auto intern = [&](int ts, std::size_t v) {
    auto [it, fresh] = index.emplace(std::make_pair(ts, v), order.size());
    if (fresh) order.emplace_back(ts, v);
    return it->second;
  };
  auto allowed = [&](int from) {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < nval; ++v) {
      const int ts = tr.step(from, vals[v]);
      if (ts != ContractTracker::bad) out.push_back(intern(ts, v));
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  m.initial = allowed(0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto succ = allowed(order[i].first);
    m.transitions.push_back({std::move(succ)});
  }
  for (const auto& [ts, v] : order) {
    m.states.push_back(ContractTracker::name(ts) + "|" + join_values(m.outputs, decode(v, radices)));
    m.output_map.push_back(decode(v, radices));
  }
  if (m.states.empty()) {
    // Contract unsatisfiable at the first tick: a single stuck state that is
    // never initial would violate validation, so expose no behaviour at all.
    throw Error("contract '" + c.name + "' admits no behaviour");
  }
  validate(m, false);
  return m;
}

ComponentModel most_general_environment(const Property& p, const Domains& domains, std::string name) {
  return most_general_environment(ComponentContract{std::move(name), std::nullopt, p}, domains);
}

ComponentModel free_environment(const std::vector<std::string>& ports, const Domains& domains,
                                std::string name) {
  ComponentModel m;
  m.name = std::move(name);
  m.outputs = ports_for(ports, domains);
  const auto radices = domain_sizes(m.outputs);
  const std::size_t n = radix_size(m.outputs);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  m.initial = all;
  for (std::size_t i = 0; i < n; ++i) {
    m.states.push_back(join_values(m.outputs, decode(i, radices)));
    m.output_map.push_back(decode(i, radices));
    m.transitions.push_back({all});
  }
  validate(m);
  return m;
}

// ---------------------------------------------------------------------------

namespace {

struct BoundLiteral {
  std::size_t signal;
  std::size_t value;
};

std::vector<BoundLiteral> bind(const std::vector<Literal>& lits, const Product& prod) {
  std::vector<BoundLiteral> out;
  for (const auto& l : lits) {
    auto s = prod.signal_index(l.port);
    if (!s) throw Error("property refers to unknown port '" + l.port + "'");
    auto v = Port{l.port, prod.signals()[*s].domain}.index_of(l.value);
    if (!v) throw Error("property refers to unknown value '" + l.value + "' of port '" + l.port + "'");
    out.push_back({*s, *v});
  }
  return out;
}

bool holds(const std::vector<BoundLiteral>& lits, std::span<const std::size_t> v) {
  for (const auto& l : lits)
    if (v[l.signal] != l.value) return false;
  return true;
}

TraceStep make_step(const Product& prod, const ProductState& s, const std::vector<std::size_t>& v) {
  TraceStep step;
  const auto& comps = prod.system().components;
  for (std::size_t c = 0; c < comps.size(); ++c) step.states.push_back(comps[c].states[s[c]]);
  for (std::size_t k = 0; k < v.size(); ++k)
    step.valuation.emplace_back(prod.signals()[k].name, prod.signals()[k].domain[v[k]]);
  return step;
}

} // namespace

CheckResult check_property(const Product& prod, const Property& p, const CheckOptions& opt) {
  const auto ante = bind(p.antecedent, prod);
  const auto cons = bind(p.consequent, prod);
  const int violated = Monitor::violated_state(p);

  struct Node {
    ProductState state;
    int mon;
    long parent;
    std::size_t env; // free choice taken in the parent
  };
  std::vector<Node> nodes;
  std::unordered_map<std::vector<std::size_t>, std::size_t, StateHash> seen;
  auto visit = [&](const ProductState& s, int mon, long parent, std::size_t env) {
    std::vector<std::size_t> key = s;
    key.push_back(static_cast<std::size_t>(mon));
    if (seen.emplace(std::move(key), nodes.size()).second) {
      if (nodes.size() >= opt.max_states) throw Error("state limit exceeded while checking property");
      nodes.push_back({s, mon, parent, env});
    }
  };

  CheckResult res;
  for (const auto& c : prod.system().components) res.components.push_back(c.name);
  for (const auto& s : prod.initial_states()) visit(s, 0, -1, 0);
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    for (std::size_t e = 0; e < prod.env_choices(); ++e) {
      const ProductState s = nodes[head].state;
      const auto v = prod.valuation(s, e);
      const int m = Monitor::next(p, nodes[head].mon, holds(ante, v), holds(cons, v));
      if (m == violated) {
        std::vector<std::size_t> chain;
        for (long n = static_cast<long>(head); n >= 0; n = nodes[n].parent) chain.push_back(n);
        std::reverse(chain.begin(), chain.end());
        for (std::size_t i = 0; i < chain.size(); ++i) {
          const std::size_t env = i + 1 < chain.size() ? nodes[chain[i + 1]].env : e;
          res.trace.push_back(make_step(prod, nodes[chain[i]].state, prod.valuation(nodes[chain[i]].state, env)));
        }
        res.holds = false;
        res.states_explored = nodes.size();
        return res;
      }
      for (const auto& t : prod.successors(s, v)) visit(t, m, static_cast<long>(head), e);
    }
  }
  res.states_explored = nodes.size();
  return res;
}

CheckResult check_property(const System& system, const Property& p, const CheckOptions& opt) {
  return check_property(Product(system), p, opt);
}

bool replay_trace(const System& system, const Property& p, const std::vector<TraceStep>& trace,
                  std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  Product prod(system);
  const auto& comps = prod.system().components;
  if (trace.empty()) return fail("empty trace");
  Monitor mon(p);
  ProductState prev;
  std::vector<std::size_t> prev_v;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& step = trace[i];
    const std::string at = "tick " + std::to_string(i) + ": ";
    if (step.states.size() != comps.size()) return fail(at + "wrong number of component states");
    ProductState s;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      auto idx = comps[c].state_index(step.states[c]);
      if (!idx) return fail(at + "unknown state '" + step.states[c] + "' of " + comps[c].name);
      s.push_back(*idx);
    }
    if (i == 0) {
      for (std::size_t c = 0; c < comps.size(); ++c) {
        const auto& init = comps[c].initial;
        if (std::find(init.begin(), init.end(), s[c]) == init.end())
          return fail(at + comps[c].name + " does not start in " + step.states[c]);
      }
    } else {
      const auto succ = prod.successors(prev, prev_v);
      if (std::find(succ.begin(), succ.end(), s) == succ.end()) return fail(at + "not a successor of the previous tick");
    }
    if (!prod.consistent(s)) return fail(at + "outputs disagree");

    std::map<std::string, std::string> given(step.valuation.begin(), step.valuation.end());
    if (given.size() != prod.signals().size()) return fail(at + "valuation does not cover every signal");
    const auto expected = prod.valuation(s, 0);
    std::vector<std::size_t> v(prod.signals().size());
    Valuation named;
    for (std::size_t k = 0; k < prod.signals().size(); ++k) {
      const auto& sig = prod.signals()[k];
      auto it = given.find(sig.name);
      if (it == given.end()) return fail(at + "missing signal " + sig.name);
      auto idx = Port{sig.name, sig.domain}.index_of(it->second);
      if (!idx) return fail(at + "value outside the domain of " + sig.name);
      if (!sig.free && *idx != expected[k]) return fail(at + "signal " + sig.name + " disagrees with the state outputs");
      v[k] = *idx;
      named[sig.name] = it->second;
    }
    for (const auto* side : {&p.antecedent, &p.consequent})
      for (const auto& l : *side)
        if (!named.count(l.port)) return fail("property refers to unknown port '" + l.port + "'");
    const bool ok = mon.step(named);
    if (!ok && i + 1 < trace.size()) return fail(at + "violation before the end of the trace");
    if (ok && i + 1 == trace.size()) return fail("trace ends without a violation");
    prev = std::move(s);
    prev_v = std::move(v);
  }
  return true;
}

// ---------------------------------------------------------------------------

DnnAbstraction abstract_dnn_component(const DnnContract& c, const std::vector<std::string>& labels,
                                      const AbstractionOptions& opt) {
  DnnAbstraction out;
  auto label_idx = [&](const std::string& l) {
    auto it = std::find(labels.begin(), labels.end(), l);
    if (it == labels.end()) throw Error("contract label '" + l + "' is not in the class domain");
    return static_cast<std::size_t>(it - labels.begin());
  };
  if (labels.empty()) throw Error("class domain is empty");
  const std::size_t L = labels.size();
  const bool truth = opt.truth_port.has_value();
  auto state_of = [&](std::size_t t, std::size_t cl) { return truth ? t * L + cl : cl; };

  Port token{opt.token_port, {}};
  std::vector<std::vector<std::size_t>> per_token;
  for (const auto& r : c.regions) {
    if (r.id == opt.outside_token) throw Error("region id '" + r.id + "' clashes with the outside token");
    token.domain.push_back(r.id);
    const std::size_t t = label_idx(r.provenance.expected_label);
    std::vector<std::size_t> succ;
    for (const auto& l : allowed_labels(r.guarantee, labels)) succ.push_back(state_of(t, label_idx(l)));
    if (const auto* ex = std::get_if<LabelNotIn>(&r.guarantee))
      for (const auto& l : ex->labels) label_idx(l);
    std::sort(succ.begin(), succ.end());
    per_token.push_back(std::move(succ));
  }
  token.domain.push_back(opt.outside_token);
  {
    std::vector<std::size_t> succ;
    for (std::size_t t = 0; t < (truth ? L : 1); ++t) {
      if (opt.failsafe_label) {
        succ.push_back(state_of(t, label_idx(*opt.failsafe_label)));
      } else {
        for (std::size_t cl = 0; cl < L; ++cl) succ.push_back(state_of(t, cl));
      }
    }
    std::sort(succ.begin(), succ.end());
    per_token.push_back(std::move(succ));
  }
  if (c.regions.empty())
    out.warnings.push_back(opt.failsafe_label ? "contract has no regions; every token maps to the fail-safe class"
                                              : "contract has no regions; the classifier output is unconstrained");

  ComponentModel& m = out.model;
  m.name = opt.name;
  m.inputs.push_back(token);
  m.outputs.push_back({opt.class_port, labels});
  if (truth) m.outputs.push_back({*opt.truth_port, labels});
  for (std::size_t t = 0; t < (truth ? L : 1); ++t)
    for (std::size_t cl = 0; cl < L; ++cl) {
      m.states.push_back(truth ? labels[t] + "/" + labels[cl] : labels[cl]);
      m.output_map.push_back(truth ? std::vector<std::size_t>{cl, t} : std::vector<std::size_t>{cl});
      m.transitions.push_back(per_token);
    }
  std::set<std::size_t> init;
  for (const auto& s : per_token) init.insert(s.begin(), s.end());
  m.initial.assign(init.begin(), init.end());
  validate(m);
  return out;
}

namespace {

void merge_domains(Domains& into, const Domains& from) {
  for (const auto& [k, v] : from) {
    auto [it, fresh] = into.emplace(k, v);
    if (!fresh && it->second != v) throw Error("port '" + k + "' has different domains on the two sides");
  }
}

Domains model_domains(const ComponentModel& m) {
  Domains d;
  for (const auto* ports : {&m.inputs, &m.outputs})
    for (const auto& p : *ports) d[p.name] = p.domain;
  return d;
}

std::string describe(const CheckResult& r) {
  if (r.holds) return "holds; " + std::to_string(r.states_explored) + " states explored";
  return "violated after " + std::to_string(r.trace.size()) + " ticks; " + std::to_string(r.states_explored) +
         " states explored";
}

PremiseResult model_check_premise(std::string name, std::string statement, const System& sys,
                                  const Property& p) {
  PremiseResult pr{std::move(name), std::move(statement), false, "", std::nullopt};
  pr.check = check_property(sys, p);
  pr.holds = pr.check->holds;
  pr.detail = describe(*pr.check);
  return pr;
}

PremiseResult audit_provenance(const DnnSide& side) {
  PremiseResult pr{"premise 2", "NN |= C2 (" + side.contract.network + ", verifier provenance)", true, "", std::nullopt};
  std::vector<std::string> bad;
  for (const auto& r : side.contract.regions) {
    const auto& pv = r.provenance;
    bool ok = pv.summary == SafetySummary::FullySafe || pv.summary == SafetySummary::TargetedSafe;
    const auto allowed = allowed_labels(r.guarantee, side.labels);
    for (const auto& l : side.labels) {
      if (std::find(allowed.begin(), allowed.end(), l) != allowed.end()) continue;
      auto it = pv.verdicts.find(l);
      ok = ok && it != pv.verdicts.end() && it->second == Status::Safe;
    }
    if (std::find(allowed.begin(), allowed.end(), pv.expected_label) == allowed.end()) ok = false;
    if (!ok) bad.push_back(r.id);
  }
  pr.holds = bad.empty();
  if (bad.empty()) {
    pr.detail = std::to_string(side.contract.regions.size()) + " regions backed by Safe verdicts";
  } else {
    pr.detail = "regions without supporting verdicts:";
    for (const auto& b : bad) pr.detail += " " + b;
  }
  return pr;
}

} // namespace

AgReport check_assume_guarantee(const System& m1, const ComponentContract& c1,
                                const std::variant<DnnSide, ComponentSide>& m2, const Property& p) {
  AgReport rep;
  const std::string m1_name = m1.name.empty() ? "M1" : m1.name;
  Domains domains = Product(m1).domains();

  std::optional<DnnAbstraction> nn;
  std::string m2_name;
  if (const auto* d = std::get_if<DnnSide>(&m2)) {
    nn = abstract_dnn_component(d->contract, d->labels, d->options);
    merge_domains(domains, model_domains(nn->model));
    m2_name = d->options.name;
  } else {
    const auto& cs = std::get<ComponentSide>(m2);
    merge_domains(domains, Product(cs.system).domains());
    m2_name = cs.system.name.empty() ? "M2" : cs.system.name;
  }

  {
    System s1 = m1;
    if (c1.assume) s1.components.push_back(most_general_environment(*c1.assume, domains, "A(" + c1.name + ")"));
    rep.premises[0] = model_check_premise(
        "premise 1",
        m1_name + (c1.assume ? " || MGE(assume of " + c1.name + ")" : std::string()) + " |= " +
            render_property(c1.guarantee),
        s1, c1.guarantee);
  }

  if (const auto* d = std::get_if<DnnSide>(&m2)) {
    rep.premises[1] = audit_provenance(*d);
  } else {
    const auto& cs = std::get<ComponentSide>(m2);
    System s2 = cs.system;
    if (cs.contract.assume)
      s2.components.push_back(
          most_general_environment(*cs.contract.assume, domains, "A(" + cs.contract.name + ")"));
    rep.premises[1] = model_check_premise(
        "premise 2",
        m2_name + (cs.contract.assume ? " || MGE(assume of " + cs.contract.name + ")" : std::string()) + " |= " +
            render_property(cs.contract.guarantee),
        s2, cs.contract.guarantee);
  }

  {
    System s3;
    s3.name = "contracts";
    s3.ticks_per_second = m1.ticks_per_second;
    s3.components.push_back(most_general_environment(c1, domains));
    std::string c2_name;
    if (nn) {
      s3.components.push_back(nn->model);
      c2_name = "C2";
    } else {
      const auto& cs = std::get<ComponentSide>(m2);
      s3.components.push_back(most_general_environment(cs.contract, domains));
      c2_name = cs.contract.name;
    }
    std::vector<std::string> missing;
    for (const auto& port : p.ports()) {
      bool present = false;
      for (const auto& c : s3.components)
        for (const auto* ports : {&c.inputs, &c.outputs})
          for (const auto& q : *ports) present = present || q.name == port;
      if (!present) missing.push_back(port);
    }
    if (!missing.empty()) s3.components.push_back(free_environment(missing, domains, "free"));
    rep.premises[2] = model_check_premise("premise 3",
                                          "MGE(" + c1.name + ") || MGE(" + c2_name + ") |= " + render_property(p),
                                          s3, p);
    if (nn)
      for (const auto& w : nn->warnings) rep.premises[2].detail += "; warning: " + w;
  }

  rep.conclusion = rep.premises[0].holds && rep.premises[1].holds && rep.premises[2].holds;
  rep.conclusion_statement = m1_name + " || " + m2_name + " |= " + render_property(p);
  return rep;
}

} // namespace safecomp
