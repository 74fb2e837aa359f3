#include "safecomp/contracts.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "safecomp/contracts_json.hpp"
#include "safecomp/error.hpp"
#include "safecomp/text.hpp"

namespace safecomp {

namespace {

enum class Tok { ident, lparen, rparen, amp, eq, implies, le, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' || c == '+';
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Tok::lparen, "(", i++});
    } else if (c == ')') {
      out.push_back({Tok::rparen, ")", i++});
    } else if (c == '&') {
      out.push_back({Tok::amp, "&", i++});
    } else if (c == '=' && i + 1 < s.size() && s[i + 1] == '>') {
      out.push_back({Tok::implies, "=>", i});
      i += 2;
    } else if (c == '=') {
      out.push_back({Tok::eq, "=", i++});
    } else if (c == '<' && i + 1 < s.size() && s[i + 1] == '=') {
      out.push_back({Tok::le, "<=", i});
      i += 2;
    } else if (ident_char(c)) {
      const std::size_t start = i;
      while (i < s.size() && ident_char(s[i])) ++i;
      out.push_back({Tok::ident, std::string(s.substr(start, i - start)), start});
    } else {
      throw ParseError(1, i + 1, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::end, "end of input", s.size()});
  return out;
}

class PropertyParser {
public:
  explicit PropertyParser(std::string_view text) : toks_(tokenize(text)) {}

  Property parse() {
    Property p;
    expect_ident("G");
    expect(Tok::lparen, "'('");
    p.antecedent = atoms();
    expect(Tok::implies, "'=>'");
    if (peek().kind == Tok::ident && peek().text == "F" && peek(1).kind == Tok::le) {
      i_ += 2;
      const Token& k = expect(Tok::ident, "tick bound");
      const auto parsed = text::parse_int(k.text);
      if (!parsed) fail(k, "tick bound must be an integer");
      const long long v = *parsed;
      if (v <= 0 || v > 1000000) fail(k, "tick bound must be a positive integer");
      p.deadline = static_cast<int>(v);
      expect(Tok::lparen, "'('");
      p.consequent = atoms();
      expect(Tok::rparen, "')'");
    } else {
      p.consequent = atoms();
    }
    expect(Tok::rparen, "')'");
    expect(Tok::end, "end of input");
    return p;
  }

private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(i_ + ahead, toks_.size() - 1)];
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(1, t.pos + 1, msg + " near '" + t.text + "'");
  }

  const Token& expect(Tok kind, const char* what) {
    const Token& t = peek();
    if (t.kind != kind) fail(t, std::string("expected ") + what);
    ++i_;
    return t;
  }

  void expect_ident(const char* word) {
    const Token& t = peek();
    if (t.kind != Tok::ident || t.text != word) fail(t, std::string("expected '") + word + "'");
    ++i_;
  }

  std::vector<Literal> atoms() {
    if (peek().kind == Tok::ident && peek().text == "true" && peek(1).kind != Tok::eq) {
      ++i_;
      return {};
    }
    std::vector<Literal> out;
    for (;;) {
      Literal lit;
      lit.port = expect(Tok::ident, "port name").text;
      expect(Tok::eq, "'='");
      lit.value = expect(Tok::ident, "value").text;
      out.push_back(std::move(lit));
      if (peek().kind != Tok::amp) break;
      ++i_;
    }
    return out;
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

std::string render_conj(const std::vector<Literal>& lits) {
  if (lits.empty()) return "true";
  std::string out;
  for (std::size_t i = 0; i < lits.size(); ++i) {
    if (i) out += " & ";
    out += lits[i].port + "=" + lits[i].value;
  }
  return out;
}

void add_ports(const Property& p, std::vector<std::string>& out) {
  for (const auto* side : {&p.antecedent, &p.consequent})
    for (const auto& l : *side)
      if (std::find(out.begin(), out.end(), l.port) == out.end()) out.push_back(l.port);
}

template <class F>
auto json_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, e.byte, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed contract JSON: ") + e.what());
  }
}

Json provenance_json(const Provenance& p) {
  Json verdicts = Json::object();
  for (const auto& [label, st] : p.verdicts) verdicts[label] = std::string(to_string(st));
  return Json{{"network", p.network},
              {"summary", std::string(to_string(p.summary))},
              {"member_count", p.member_count},
              {"expected_label", p.expected_label},
              {"verdicts", verdicts}};
}

Provenance provenance_from_json(const Json& j) {
  Provenance p;
  p.network = j.at("network").get<std::string>();
  p.summary = parse_safety_summary(j.at("summary").get<std::string>());
  p.member_count = j.at("member_count").get<std::size_t>();
  p.expected_label = j.at("expected_label").get<std::string>();
  if (j.contains("verdicts"))
    for (const auto& [label, st] : j.at("verdicts").items())
      p.verdicts[label] = parse_status(st.get<std::string>());
  return p;
}

} // namespace

Property parse_property(std::string_view text) { return PropertyParser(text).parse(); }

std::string render_property(const Property& p) {
  std::string out = "G (" + render_conj(p.antecedent) + " => ";
  if (p.deadline)
    out += "F<=" + std::to_string(*p.deadline) + " (" + render_conj(p.consequent) + ")";
  else
    out += render_conj(p.consequent);
  return out + ")";
}

std::vector<std::string> Property::ports() const {
  std::vector<std::string> out;
  add_ports(*this, out);
  return out;
}

std::vector<std::string> ComponentContract::ports() const {
  std::vector<std::string> out;
  if (assume) add_ports(*assume, out);
  add_ports(guarantee, out);
  return out;
}

Json to_json(const ComponentContract& c) {
  return Json{{"name", c.name},
              {"assume", c.assume ? render_property(*c.assume) : std::string("true")},
              {"guarantee", render_property(c.guarantee)}};
}

ComponentContract component_contract_from_json(const Json& j) {
  return json_guard([&] {
    ComponentContract c;
    c.name = j.at("name").get<std::string>();
    const std::string assume{text::trim(j.value("assume", std::string("true")))};
    if (assume != "true") c.assume = parse_property(assume);
    const std::string guarantee{text::trim(j.at("guarantee").get<std::string>())};
    c.guarantee = guarantee == "true" ? Property{} : parse_property(guarantee);
    return c;
  });
}

std::string render_contract(const ComponentContract& c) { return to_json(c).dump(2) + "\n"; }

ComponentContract parse_component_contract(std::string_view json) {
  return json_guard([&] { return component_contract_from_json(Json::parse(json)); });
}

std::vector<std::string> allowed_labels(const Guarantee& g, std::span<const std::string> all_labels) {
  if (const auto* is = std::get_if<LabelIs>(&g)) return {is->label};
  const auto& excluded = std::get<LabelNotIn>(g).labels;
  std::vector<std::string> out;
  for (const auto& l : all_labels)
    if (std::find(excluded.begin(), excluded.end(), l) == excluded.end()) out.push_back(l);
  return out;
}

Region RegionContract::region(const std::vector<std::string>& labels) const {
  Region r;
  r.id = id;
  r.centroid = centroid;
  r.radius = radius;
  r.metric = metric;
  auto it = std::find(labels.begin(), labels.end(), provenance.expected_label);
  if (it == labels.end()) throw Error("region " + id + ": unknown label " + provenance.expected_label);
  r.expected_label = static_cast<std::size_t>(it - labels.begin());
  r.member_count = provenance.member_count;
  return r;
}

bool RegionContract::contains(std::span<const double> x) const {
  if (x.size() != centroid.size()) throw DimensionError("contract region " + id, centroid.size(), x.size());
  return dist(metric, x, centroid) <= radius;
}

void validate(const DnnContract& c) {
  std::set<std::string> ids;
  for (const auto& r : c.regions) {
    if (!ids.insert(r.id).second) throw Error("duplicate region id " + r.id);
    if (!(r.radius >= 0.0)) throw Error("region " + r.id + ": negative radius");
    if (r.uncertainty_max && !(*r.uncertainty_max > 0.0 && *r.uncertainty_max <= 1.0))
      throw Error("region " + r.id + ": uncertainty_max must lie in (0, 1]");
    if (const auto* ex = std::get_if<LabelNotIn>(&r.guarantee)) {
      const auto& l = ex->labels;
      if (std::find(l.begin(), l.end(), r.provenance.expected_label) != l.end())
        throw Error("region " + r.id + ": label_not_in excludes its own expected label");
    }
  }
  for (const auto& a : c.annex)
    if (!ids.insert(a.id).second) throw Error("duplicate region id " + a.id);
}

DnnContract emit_dnn_contract(const Network& net, std::span<const RegionVerification> results,
                              std::optional<double> uncertainty_max) {
  DnnContract c;
  c.network = net.name;
  std::set<std::string> ids;
  for (const auto& rv : results) {
    const Region& reg = rv.region;
    if (!ids.insert(reg.id).second) throw Error("duplicate region id " + reg.id);
    if (reg.expected_label >= net.num_labels()) throw Error("region " + reg.id + ": label out of range");

    Provenance prov;
    prov.network = net.name;
    prov.summary = rv.result.summary;
    prov.member_count = reg.member_count;
    prov.expected_label = net.labels[reg.expected_label];
    for (const auto& [t, v] : rv.result.per_target) prov.verdicts[net.labels.at(t)] = v.status;

    if (rv.result.summary == SafetySummary::FullySafe || rv.result.summary == SafetySummary::TargetedSafe) {
      RegionContract rc;
      rc.id = reg.id;
      rc.metric = reg.metric;
      rc.centroid = reg.centroid;
      rc.radius = reg.radius;
      rc.uncertainty_max = uncertainty_max;
      if (rv.result.summary == SafetySummary::FullySafe) {
        rc.guarantee = LabelIs{prov.expected_label};
      } else {
        LabelNotIn ex;
        for (auto t : rv.result.safe_targets) ex.labels.push_back(net.labels.at(t));
        rc.guarantee = ex;
      }
      rc.provenance = std::move(prov);
      c.regions.push_back(std::move(rc));
    } else {
      AnnexEntry a;
      a.id = reg.id;
      a.metric = reg.metric;
      a.centroid = reg.centroid;
      a.radius = reg.radius;
      for (const auto& [t, v] : rv.result.per_target)
        if (v.counterexample)
          a.counterexamples.push_back({net.labels.at(t), v.counterexample->point, v.counterexample->scores});
      a.provenance = std::move(prov);
      c.annex.push_back(std::move(a));
    }
  }
  std::sort(c.regions.begin(), c.regions.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(c.annex.begin(), c.annex.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  validate(c);
  return c;
}

Json to_json(const DnnContract& c) {
  Json regions = Json::array();
  for (const auto& r : c.regions) {
    Json g;
    if (const auto* is = std::get_if<LabelIs>(&r.guarantee))
      g = Json{{"label_is", is->label}};
    else
      g = Json{{"label_not_in", std::get<LabelNotIn>(r.guarantee).labels}};
    Json jr{{"id", r.id},
            {"metric", std::string(to_string(r.metric))},
            {"centroid", r.centroid},
            {"radius", r.radius},
            {"guarantee", g}};
    if (r.uncertainty_max) jr["uncertainty_max"] = *r.uncertainty_max;
    jr["provenance"] = provenance_json(r.provenance);
    regions.push_back(std::move(jr));
  }
  Json j{{"network", c.network}, {"regions", regions}};
  if (!c.annex.empty()) {
    Json annex = Json::array();
    for (const auto& a : c.annex) {
      Json cex = Json::array();
      for (const auto& x : a.counterexamples)
        cex.push_back(Json{{"target", x.target}, {"point", x.point}, {"scores", x.scores}});
      annex.push_back(Json{{"id", a.id},
                           {"metric", std::string(to_string(a.metric))},
                           {"centroid", a.centroid},
                           {"radius", a.radius},
                           {"provenance", provenance_json(a.provenance)},
                           {"counterexamples", cex}});
    }
    j["annex"] = std::move(annex);
  }
  return j;
}

DnnContract dnn_contract_from_json(const Json& j) {
  return json_guard([&] {
    DnnContract c;
    c.network = j.at("network").get<std::string>();
    for (const auto& jr : j.at("regions")) {
      RegionContract r;
      r.id = jr.at("id").get<std::string>();
      r.metric = parse_metric(jr.at("metric").get<std::string>());
      r.centroid = jr.at("centroid").get<std::vector<double>>();
      r.radius = jr.at("radius").get<double>();
      const Json& g = jr.at("guarantee");
      if (g.contains("label_is"))
        r.guarantee = LabelIs{g.at("label_is").get<std::string>()};
      else if (g.contains("label_not_in"))
        r.guarantee = LabelNotIn{g.at("label_not_in").get<std::vector<std::string>>()};
      else
        throw Error("region " + r.id + ": guarantee needs label_is or label_not_in");
      if (jr.contains("uncertainty_max")) r.uncertainty_max = jr.at("uncertainty_max").get<double>();
      r.provenance = provenance_from_json(jr.at("provenance"));
      c.regions.push_back(std::move(r));
    }
    if (j.contains("annex"))
      for (const auto& ja : j.at("annex")) {
        AnnexEntry a;
        a.id = ja.at("id").get<std::string>();
        a.metric = parse_metric(ja.at("metric").get<std::string>());
        a.centroid = ja.at("centroid").get<std::vector<double>>();
        a.radius = ja.at("radius").get<double>();
        a.provenance = provenance_from_json(ja.at("provenance"));
        for (const auto& x : ja.value("counterexamples", Json::array()))
          a.counterexamples.push_back({x.at("target").get<std::string>(),
                                       x.at("point").get<std::vector<double>>(),
                                       x.at("scores").get<std::vector<double>>()});
        c.annex.push_back(std::move(a));
      }
    validate(c);
    return c;
  });
}

std::string render_contract(const DnnContract& c) { return to_json(c).dump(2) + "\n"; }

DnnContract parse_dnn_contract(std::string_view json) {
  return json_guard([&] { return dnn_contract_from_json(Json::parse(json)); });
}

std::optional<Determination> check_point_against_contract(const DnnContract& c,
                                                          std::span<const double> x) {
  const RegionContract* best = nullptr;
  for (const auto& r : c.regions)
    if (r.contains(x) && (!best || r.id < best->id)) best = &r;
  if (!best) return std::nullopt;
  return Determination{best->id, best->guarantee};
}

} // namespace safecomp
