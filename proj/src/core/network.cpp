#include "safecomp/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "safecomp/error.hpp"
#include "safecomp/text.hpp"

namespace safecomp {

std::string_view to_string(ScoreOrder order) {
  return order == ScoreOrder::min_best ? "min_best" : "max_best";
}

std::string_view to_string(Activation act) {
  return act == Activation::relu ? "relu" : "identity";
}

std::size_t Network::label_index(std::string_view label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end())
    throw Error("unknown label '" + std::string(label) + "' for network '" + name + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

std::vector<double> Network::normalized_min() const { return normalize(*this, input_min); }
std::vector<double> Network::normalized_max() const { return normalize(*this, input_max); }

void validate(const Network& net) {
  if (net.input_dim == 0) throw Error("network has zero inputs");
  if (net.labels.size() < 2) throw Error("network needs at least two labels");
  for (const auto* v : {&net.input_min, &net.input_max, &net.input_mean, &net.input_range})
    if (v->size() != net.input_dim) throw DimensionError("input bounds", net.input_dim, v->size());
  for (std::size_t i = 0; i < net.input_dim; ++i) {
    if (!(net.input_range[i] > 0.0)) throw Error("input_range must be positive");
    if (net.input_min[i] > net.input_max[i]) throw Error("input_min exceeds input_max");
  }
  if (net.layers.empty()) throw Error("network has no layers");
  std::size_t width = net.input_dim;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const Layer& layer = net.layers[k];
    if (layer.in != width)
      throw DimensionError("layer " + std::to_string(k + 1) + " input", width, layer.in);
    if (layer.out == 0) throw Error("layer " + std::to_string(k + 1) + " has no outputs");
    if (layer.weights.size() != layer.out * layer.in)
      throw DimensionError("layer " + std::to_string(k + 1) + " weights", layer.out * layer.in,
                           layer.weights.size());
    if (layer.bias.size() != layer.out)
      throw DimensionError("layer " + std::to_string(k + 1) + " bias", layer.out,
                           layer.bias.size());
    width = layer.out;
  }
  if (width != net.labels.size())
    throw DimensionError("output layer vs labels", net.labels.size(), width);
  if (net.layers.back().activation != Activation::identity)
    throw Error("final layer must use identity activation");
}

namespace {

struct LineReader {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;

  explicit LineReader(std::string_view text) {
    auto raw = text::split(text, '\n');
    lines.reserve(raw.size());
    for (auto l : raw) lines.push_back(l);
  }

  // Next non-blank line with comments stripped; returns false at EOF.
  bool next(std::string_view& out, std::size_t& lineno) {
    while (pos < lines.size()) {
      std::string_view l = lines[pos++];
      if (auto h = l.find('#'); h != std::string_view::npos) l = l.substr(0, h);
      l = text::trim(l);
      if (!l.empty()) {
        out = l;
        lineno = pos;
        return true;
      }
    }
    return false;
  }
};

std::pair<std::string_view, std::string_view> split_key(std::string_view line) {
  const auto sp = line.find_first_of(" \t");
  if (sp == std::string_view::npos) return {line, {}};
  return {line.substr(0, sp), text::trim(line.substr(sp + 1))};
}

std::vector<double> parse_row(std::string_view s, std::size_t lineno, std::size_t expected,
                              const char* what) {
  std::vector<double> out;
  std::size_t col = 1;
  for (auto part : text::split(s, ',')) {
    auto v = text::parse_double(part);
    if (!v)
      throw ParseError(lineno, col, std::string("non-finite or malformed number in ") + what +
                                        ": '" + std::string(text::trim(part)) + "'");
    out.push_back(*v);
    col += part.size() + 1;
  }
  if (out.size() != expected)
    throw ParseError(lineno, 0,
                     std::string(what) + ": dimension mismatch (expected " +
                         std::to_string(expected) + ", got " + std::to_string(out.size()) + ")");
  return out;
}

} // namespace

Network parse_network(std::string_view text_in) {
  LineReader reader(text_in);
  std::string_view line;
  std::size_t lineno = 0;

  if (!reader.next(line, lineno)) throw ParseError(1, 0, "empty network file");
  {
    auto [key, rest] = split_key(line);
    if (key != "RELUNET" || rest != "1")
      throw ParseError(lineno, 0, "malformed header, expected 'RELUNET 1'");
  }

  Network net;
  bool have_name = false, have_labels = false, have_order = false, have_inputs = false;
  std::vector<double>* bound_slots[4] = {&net.input_min, &net.input_max, &net.input_mean,
                                         &net.input_range};
  const char* bound_names[4] = {"input_min", "input_max", "input_mean", "input_range"};
  bool have_bound[4] = {false, false, false, false};

  auto require_inputs = [&](std::size_t ln) {
    if (!have_inputs) throw ParseError(ln, 0, "'inputs' must precede bounds and layers");
  };

  while (reader.next(line, lineno)) {
    auto [key, rest] = split_key(line);
    if (key == "name") {
      if (rest.empty()) throw ParseError(lineno, 0, "empty network name");
      net.name = std::string(rest);
      have_name = true;
    } else if (key == "labels") {
      for (auto l : text::split(rest, ',')) {
        auto t = text::trim(l);
        if (t.empty()) throw ParseError(lineno, 0, "empty label name");
        net.labels.emplace_back(t);
      }
      have_labels = true;
    } else if (key == "score_order") {
      if (rest == "min_best") net.score_order = ScoreOrder::min_best;
      else if (rest == "max_best") net.score_order = ScoreOrder::max_best;
      else throw ParseError(lineno, 0, "unknown score_order '" + std::string(rest) + "'");
      have_order = true;
    } else if (key == "inputs") {
      auto n = text::parse_int(rest);
      if (!n || *n <= 0) throw ParseError(lineno, 0, "inputs must be a positive integer");
      net.input_dim = static_cast<std::size_t>(*n);
      have_inputs = true;
    } else if (key == "meta") {
      auto [mk, mv] = split_key(rest);
      if (mk.empty()) throw ParseError(lineno, 0, "meta needs a key");
      net.metadata[std::string(mk)] = std::string(mv);
    } else if (key == "layer") {
      require_inputs(lineno);
      auto [shape, act] = split_key(rest);
      const auto x = shape.find('x');
      if (x == std::string_view::npos) throw ParseError(lineno, 0, "layer shape must be <out>x<in>");
      auto out = text::parse_int(shape.substr(0, x));
      auto in = text::parse_int(shape.substr(x + 1));
      if (!out || !in || *out <= 0 || *in <= 0)
        throw ParseError(lineno, 0, "layer shape must be positive integers");
      Layer layer;
      layer.out = static_cast<std::size_t>(*out);
      layer.in = static_cast<std::size_t>(*in);
      if (act == "relu") layer.activation = Activation::relu;
      else if (act == "identity") layer.activation = Activation::identity;
      else throw ParseError(lineno, 0, "unknown activation '" + std::string(act) + "'");

      const std::size_t expected_in =
          net.layers.empty() ? net.input_dim : net.layers.back().out;
      if (layer.in != expected_in)
        throw ParseError(lineno, 0,
                         "dimension mismatch: layer " + std::to_string(net.layers.size() + 1) +
                             " input width " + std::to_string(layer.in) + " but previous width is " +
                             std::to_string(expected_in));
      layer.weights.reserve(layer.out * layer.in);
      for (std::size_t o = 0; o < layer.out; ++o) {
        std::string_view row;
        if (!reader.next(row, lineno))
          throw ParseError(lineno, 0, "unexpected end of file in weight rows");
        auto w = parse_row(row, lineno, layer.in, "weight row");
        layer.weights.insert(layer.weights.end(), w.begin(), w.end());
      }
      std::string_view brow;
      if (!reader.next(brow, lineno)) throw ParseError(lineno, 0, "unexpected end of file, missing bias row");
      layer.bias = parse_row(brow, lineno, layer.out, "bias row");
      net.layers.push_back(std::move(layer));
    } else {
      bool matched = false;
      for (int b = 0; b < 4; ++b) {
        if (key == bound_names[b]) {
          require_inputs(lineno);
          *bound_slots[b] = parse_row(rest, lineno, net.input_dim, bound_names[b]);
          have_bound[b] = true;
          matched = true;
        }
      }
      if (!matched) throw ParseError(lineno, 0, "unknown declaration '" + std::string(key) + "'");
    }
  }

  if (!have_name) throw ParseError(lineno, 0, "missing 'name'");
  if (!have_labels) throw ParseError(lineno, 0, "missing 'labels'");
  if (!have_order) throw ParseError(lineno, 0, "missing 'score_order'");
  if (!have_inputs) throw ParseError(lineno, 0, "missing 'inputs'");
  for (int b = 0; b < 4; ++b)
    if (!have_bound[b]) throw ParseError(lineno, 0, std::string("missing '") + bound_names[b] + "'");

  try {
    validate(net);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(lineno, 0, e.what());
  }
  return net;
}

std::string render_network(const Network& net) {
  std::ostringstream os;
  os << "RELUNET 1\n";
  os << "name " << net.name << '\n';
  os << "labels ";
  for (std::size_t i = 0; i < net.labels.size(); ++i) os << (i ? "," : "") << net.labels[i];
  os << '\n';
  os << "score_order " << to_string(net.score_order) << '\n';
  os << "inputs " << net.input_dim << '\n';
  os << "input_min " << text::join_doubles(net.input_min) << '\n';
  os << "input_max " << text::join_doubles(net.input_max) << '\n';
  os << "input_mean " << text::join_doubles(net.input_mean) << '\n';
  os << "input_range " << text::join_doubles(net.input_range) << '\n';
  for (const auto& [k, v] : net.metadata) os << "meta " << k << ' ' << v << '\n';
  for (const auto& layer : net.layers) {
    os << "layer " << layer.out << 'x' << layer.in << ' ' << to_string(layer.activation) << '\n';
    for (std::size_t o = 0; o < layer.out; ++o)
      os << text::join_doubles(std::span(layer.weights).subspan(o * layer.in, layer.in)) << '\n';
    os << text::join_doubles(layer.bias) << '\n';
  }
  return os.str();
}

Network load_network(const std::string& path) { return parse_network(text::read_file(path)); }

std::vector<double> normalize(const Network& net, std::span<const double> raw) {
  if (raw.size() != net.input_dim) throw DimensionError("normalize", net.input_dim, raw.size());
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    out[i] = (raw[i] - net.input_mean[i]) / net.input_range[i];
  return out;
}

std::vector<double> denormalize(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_dim) throw DimensionError("denormalize", net.input_dim, x.size());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * net.input_range[i] + net.input_mean[i];
  return out;
}

std::vector<double> evaluate(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_dim) throw DimensionError("evaluate", net.input_dim, x.size());
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (const Layer& layer : net.layers) {
    next.assign(layer.out, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double acc = layer.bias[o];
      const double* w = layer.weights.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * cur[i];
      next[o] = layer.activation == Activation::relu ? std::max(acc, 0.0) : acc;
    }
    cur.swap(next);
  }
  return cur;
}

std::size_t best_label(std::span<const double> scores, ScoreOrder order) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (better(scores[i], scores[best], order)) best = i;
  return best;
}

std::size_t classify(const Network& net, std::span<const double> x) {
  auto scores = evaluate(net, x);
  return best_label(scores, net.score_order);
}

} // namespace safecomp
