#include <algorithm>
#include <set>

#include "safecomp/compose_json.hpp"
#include "safecomp/error.hpp"

namespace safecomp {

namespace {

std::string value_text(const Json& v, const std::string& ctx) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  throw Error(ctx + ": port values must be strings or integers");
}

std::vector<Port> ports_from(const Json& j, const std::string& ctx) {
  std::vector<Port> out;
  if (j.is_null()) return out;
  for (const auto& [name, vals] : j.items()) {
    Port p{name, {}};
    for (const auto& v : vals) p.domain.push_back(value_text(v, ctx));
    out.push_back(std::move(p));
  }
  return out;
}

Json ports_json(const std::vector<Port>& ports) {
  Json j = Json::object();
  for (const auto& p : ports) j[p.name] = p.domain;
  return j;
}

Json state_list(const ComponentModel& m, const std::vector<std::size_t>& idx) {
  if (idx.size() == 1) return m.states[idx[0]];
  Json j = Json::array();
  for (auto i : idx) j.push_back(m.states[i]);
  return j;
}

template <class F>
auto json_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, e.byte, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed system JSON: ") + e.what());
  }
}

} // namespace

ComponentModel component_from_json(const Json& j) {
  return json_guard([&] {
    ComponentModel m;
    m.name = j.at("name").get<std::string>();
    const std::string ctx = "component '" + m.name + "'";
    m.inputs = ports_from(j.value("inputs", Json()), ctx);
    m.outputs = ports_from(j.value("outputs", Json()), ctx);
    m.states = j.at("states").get<std::vector<std::string>>();
    auto state = [&](const std::string& s) {
      auto i = m.state_index(s);
      if (!i) throw Error(ctx + ": unknown state '" + s + "'");
      return *i;
    };
    const Json& init = j.at("init");
    if (init.is_string()) {
      m.initial.push_back(state(init.get<std::string>()));
    } else {
      for (const auto& s : init) m.initial.push_back(state(s.get<std::string>()));
      std::sort(m.initial.begin(), m.initial.end());
      m.initial.erase(std::unique(m.initial.begin(), m.initial.end()), m.initial.end());
    }

    const Json& omap = j.value("outputs_map", Json::object());
    for (const auto& s : m.states) {
      std::vector<std::size_t> row;
      for (const auto& p : m.outputs) {
        if (!omap.contains(s) || !omap.at(s).contains(p.name))
          throw Error(ctx + ": outputs_map has no value of " + p.name + " in state '" + s + "'");
        const std::string v = value_text(omap.at(s).at(p.name), ctx);
        auto idx = p.index_of(v);
        if (!idx) throw Error(ctx + ": value '" + v + "' outside the domain of " + p.name);
        row.push_back(*idx);
      }
      m.output_map.push_back(std::move(row));
    }

    const std::size_t combos = m.combinations();
    m.transitions.assign(m.states.size(), std::vector<std::vector<std::size_t>>(combos));
    std::vector<std::vector<bool>> covered(m.states.size(), std::vector<bool>(combos, false));
    for (const auto& row : j.value("transitions", Json::array())) {
      const std::string from = row.at("from").get<std::string>();
      std::vector<std::size_t> froms;
      if (from == "*") {
        for (std::size_t s = 0; s < m.states.size(); ++s) froms.push_back(s);
      } else {
        froms.push_back(state(from));
      }
      // Allowed value indices per input; wildcard when absent or "*".
      std::vector<std::vector<std::size_t>> allowed(m.inputs.size());
      const Json& when = row.value("when", Json::object());
      for (const auto& [port, _] : when.items())
        if (std::none_of(m.inputs.begin(), m.inputs.end(), [&](const Port& p) { return p.name == port; }))
          throw Error(ctx + ": transition refers to unknown input '" + port + "'");
      for (std::size_t i = 0; i < m.inputs.size(); ++i) {
        const auto& p = m.inputs[i];
        if (when.contains(p.name) && value_text(when.at(p.name), ctx) != "*") {
          const std::string v = value_text(when.at(p.name), ctx);
          auto idx = p.index_of(v);
          if (!idx) throw Error(ctx + ": value '" + v + "' outside the domain of " + p.name);
          allowed[i] = {*idx};
        } else {
          for (std::size_t k = 0; k < p.domain.size(); ++k) allowed[i].push_back(k);
        }
      }
      std::vector<std::size_t> to;
      const Json& jt = row.at("to");
      if (jt.is_string()) {
        to.push_back(state(jt.get<std::string>()));
      } else {
        for (const auto& t : jt) to.push_back(state(t.get<std::string>()));
      }
      std::sort(to.begin(), to.end());
      to.erase(std::unique(to.begin(), to.end()), to.end());

      for (std::size_t c = 0; c < combos; ++c) {
        const auto vals = m.combination_values(c);
        bool match = true;
        for (std::size_t i = 0; i < vals.size() && match; ++i)
          match = std::find(allowed[i].begin(), allowed[i].end(), vals[i]) != allowed[i].end();
        if (!match) continue;
        for (auto s : froms) {
          if (covered[s][c]) throw Error(ctx + ": overlapping transition rows for state '" + m.states[s] + "'");
          covered[s][c] = true;
          m.transitions[s][c] = to;
        }
      }
    }
    for (std::size_t s = 0; s < m.states.size(); ++s)
      for (std::size_t c = 0; c < combos; ++c)
        if (!covered[s][c]) throw Error(ctx + ": no transition row covers state '" + m.states[s] + "' for some input");
    validate(m, false);
    return m;
  });
}

Json to_json(const ComponentModel& m) {
  Json j{{"name", m.name}, {"inputs", ports_json(m.inputs)}, {"outputs", ports_json(m.outputs)},
         {"states", m.states}};
  j["init"] = state_list(m, m.initial);
  Json omap = Json::object();
  for (std::size_t s = 0; s < m.states.size(); ++s) {
    Json row = Json::object();
    for (std::size_t k = 0; k < m.outputs.size(); ++k) row[m.outputs[k].name] = m.outputs[k].domain[m.output_map[s][k]];
    omap[m.states[s]] = std::move(row);
  }
  j["outputs_map"] = std::move(omap);
  Json rows = Json::array();
  for (std::size_t s = 0; s < m.states.size(); ++s) {
    const auto& tr = m.transitions[s];
    if (std::all_of(tr.begin(), tr.end(), [&](const auto& x) { return x == tr.front(); })) {
      rows.push_back(Json{{"from", m.states[s]}, {"when", Json::object()}, {"to", state_list(m, tr.front())}});
      continue;
    }
    for (std::size_t c = 0; c < tr.size(); ++c) {
      Json when = Json::object();
      const auto vals = m.combination_values(c);
      for (std::size_t i = 0; i < vals.size(); ++i) when[m.inputs[i].name] = m.inputs[i].domain[vals[i]];
      rows.push_back(Json{{"from", m.states[s]}, {"when", std::move(when)}, {"to", state_list(m, tr[c])}});
    }
  }
  j["transitions"] = std::move(rows);
  return j;
}

System system_from_json(const Json& j) {
  return json_guard([&] {
    System s;
    s.name = j.value("name", std::string());
    s.ticks_per_second = j.value("ticks_per_second", 1.0);
    if (!(s.ticks_per_second > 0.0)) throw Error("ticks_per_second must be positive");
    for (const auto& c : j.at("components")) s.components.push_back(component_from_json(c));
    for (const auto& w : j.value("wiring", Json::array())) {
      auto split = [](const std::string& ref) {
        const auto dot = ref.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == ref.size())
          throw Error("wire endpoint '" + ref + "' must be component.port");
        return std::make_pair(ref.substr(0, dot), ref.substr(dot + 1));
      };
      auto [fc, fp] = split(w.at("from").get<std::string>());
      auto [tc, tp] = split(w.at("to").get<std::string>());
      s.wiring.push_back({fc, fp, tc, tp});
    }
    s.properties = j.value("properties", std::vector<std::string>{});
    for (const auto& p : s.properties) parse_property(p);
    for (const auto& c : s.components) validate(c);
    Product check(s); // wiring and type compatibility
    return s;
  });
}

Json to_json(const System& s) {
  Json comps = Json::array();
  for (const auto& c : s.components) comps.push_back(to_json(c));
  Json wiring = Json::array();
  for (const auto& w : s.wiring)
    wiring.push_back(Json{{"from", w.from_component + "." + w.from_port}, {"to", w.to_component + "." + w.to_port}});
  return Json{{"name", s.name},
              {"ticks_per_second", s.ticks_per_second},
              {"components", comps},
              {"wiring", wiring},
              {"properties", s.properties}};
}

System parse_system(std::string_view json) {
  return json_guard([&] { return system_from_json(Json::parse(json)); });
}

std::string render_system(const System& s) { return to_json(s).dump(2) + "\n"; }

Json to_json(const CheckResult& r) {
  Json j{{"holds", r.holds}, {"states_explored", r.states_explored}};
  if (!r.holds) {
    Json trace = Json::array();
    for (std::size_t t = 0; t < r.trace.size(); ++t) {
      Json states = Json::object();
      for (std::size_t c = 0; c < r.trace[t].states.size(); ++c)
        states[c < r.components.size() ? r.components[c] : std::to_string(c)] = r.trace[t].states[c];
      Json val = Json::object();
      for (const auto& [k, v] : r.trace[t].valuation) val[k] = v;
      trace.push_back(Json{{"tick", t}, {"states", states}, {"valuation", val}});
    }
    j["counterexample"] = std::move(trace);
  }
  return j;
}

Json to_json(const AgReport& r) {
  Json premises = Json::array();
  for (const auto& p : r.premises) {
    Json jp{{"name", p.name}, {"statement", p.statement}, {"holds", p.holds}, {"detail", p.detail}};
    if (p.check) {
      Json c = to_json(*p.check);
      jp["states_explored"] = c["states_explored"];
      if (c.contains("counterexample")) jp["counterexample"] = c["counterexample"];
    }
    premises.push_back(std::move(jp));
  }
  return Json{{"premises", premises}, {"conclusion", r.conclusion}, {"statement", r.conclusion_statement}};
}

} // namespace safecomp
