#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace safecomp {

enum class ScoreOrder { min_best, max_best };
enum class Activation { relu, identity };

std::string_view to_string(ScoreOrder order);
std::string_view to_string(Activation act);

// Dense affine layer followed by an activation. Weights are row-major by
// output neuron: weight(o, i) == weights[o * in + i].
struct Layer {
  std::size_t out = 0;
  std::size_t in = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::relu;

  double weight(std::size_t o, std::size_t i) const { return weights[o * in + i]; }
  double& weight(std::size_t o, std::size_t i) { return weights[o * in + i]; }

  bool operator==(const Layer&) const = default;
};

// Feedforward ReLU classifier. Inputs are normalized with
// (raw - input_mean) / input_range before evaluation; all region geometry
// lives in that normalized space.
struct Network {
  std::string name;
  std::vector<std::string> labels;
  ScoreOrder score_order = ScoreOrder::max_best;
  std::size_t input_dim = 0;
  std::vector<Layer> layers;
  std::vector<double> input_min;
  std::vector<double> input_max;
  std::vector<double> input_mean;
  std::vector<double> input_range;
  std::map<std::string, std::string> metadata;

  std::size_t num_labels() const { return labels.size(); }

  // Index of `label`, throws Error when absent.
  std::size_t label_index(std::string_view label) const;

  // Raw input bounds mapped into normalized space.
  std::vector<double> normalized_min() const;
  std::vector<double> normalized_max() const;

  bool operator==(const Network&) const = default;
};

// Throws Error describing the first violated structural invariant.
void validate(const Network& net);

Network parse_network(std::string_view text);
std::string render_network(const Network& net);

Network load_network(const std::string& path);

std::vector<double> normalize(const Network& net, std::span<const double> raw);
std::vector<double> denormalize(const Network& net, std::span<const double> x);

std::vector<double> evaluate(const Network& net, std::span<const double> x);

// Best label under `order`; ties go to the lowest index.
std::size_t best_label(std::span<const double> scores, ScoreOrder order);

std::size_t classify(const Network& net, std::span<const double> x);

// True when score `a` is strictly better than score `b`.
inline bool better(double a, double b, ScoreOrder order) {
  return order == ScoreOrder::min_best ? a < b : a > b;
}

} // namespace safecomp
