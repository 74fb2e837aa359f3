#include <algorithm>

#include "safecomp/app.hpp"
#include "safecomp/rng.hpp"

namespace safecomp {

namespace {

constexpr std::size_t kDim = 8;
constexpr std::size_t kPerClass = 100;
constexpr double kSpread = 0.06;
constexpr double kKnee = 0.25; // second ReLU piece starts this far from the prototype

const std::vector<std::vector<double>>& prototypes() {
  static const std::vector<std::vector<double>> p{
      {0.85, 0.15, 0.10, 0.80, 0.20, 0.15, 0.70, 0.30}, // red
      {0.80, 0.70, 0.15, 0.55, 0.60, 0.25, 0.50, 0.50}, // yellow
      {0.20, 0.80, 0.35, 0.25, 0.70, 0.40, 0.40, 0.60}, // green
  };
  return p;
}

std::size_t nearest_prototype(std::span<const double> x) {
  const auto& protos = prototypes();
  std::size_t best = 0;
  double best_d = dist(Metric::L2, x, protos[0]);
  for (std::size_t c = 1; c < protos.size(); ++c) {
    const double d = dist(Metric::L2, x, protos[c]);
    if (d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

} // namespace

Semaphore build_semaphore_classifier(std::uint64_t seed) {
  const auto& protos = prototypes();
  const std::size_t k = protos.size();
  Semaphore s;
  s.prototypes = protos;

  Network& net = s.network;
  net.name = "semaphore";
  net.labels = {"red", "yellow", "green"};
  net.score_order = ScoreOrder::max_best;
  net.input_dim = kDim;
  net.input_min.assign(kDim, 0.0);
  net.input_max.assign(kDim, 1.0);
  net.input_mean.assign(kDim, 0.0);
  net.input_range.assign(kDim, 1.0);
  net.metadata["description"] = "prototype classifier over synthetic 8-d image features";

  // Hidden unit (c, i, piece): piece 0/1 give |x_i - p_ci|, pieces 2/3 give
  // the excess beyond the knee. Scores are minus a convex surrogate of the
  // squared distance to each prototype.
  Layer hidden{k * kDim * 4, kDim, {}, {}, Activation::relu};
  hidden.weights.assign(hidden.out * hidden.in, 0.0);
  hidden.bias.assign(hidden.out, 0.0);
  Layer out{k, hidden.out, {}, {}, Activation::identity};
  out.weights.assign(out.out * out.in, 0.0);
  out.bias.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < kDim; ++i) {
      const std::size_t base = (c * kDim + i) * 4;
      const double p = protos[c][i];
      const double sign[4] = {1.0, -1.0, 1.0, -1.0};
      const double bias[4] = {-p, p, -p - kKnee, p - kKnee};
      const double gain[4] = {-1.0, -1.0, -2.0, -2.0};
      for (std::size_t piece = 0; piece < 4; ++piece) {
        hidden.weight(base + piece, i) = sign[piece];
        hidden.bias[base + piece] = bias[piece];
        out.weight(c, base + piece) = gain[piece];
      }
    }
  net.layers = {std::move(hidden), std::move(out)};

  Rng rng(mix_seed(seed, fnv1a("semaphore-data")));
  LabeledDataset& data = s.data;
  for (std::size_t i = 0; i < kDim; ++i) data.attributes.push_back("f" + std::to_string(i));
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t n = 0; n < kPerClass; ++n) {
      std::vector<double> x(kDim);
      for (std::size_t i = 0; i < kDim; ++i) x[i] = std::clamp(protos[c][i] + kSpread * rng.normal(), 0.0, 1.0);
      data.labels.push_back(nearest_prototype(x));
      data.points.push_back(std::move(x));
    }
  return s;
}

} // namespace safecomp
