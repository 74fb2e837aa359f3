#pragma once

// Test-only builders and independent oracles. Nothing here calls into the
// verifier; the forward pass below is a separate straight-line rewrite.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "safecomp/network.hpp"
#include "safecomp/regions.hpp"
#include "safecomp/rng.hpp"

namespace fixtures {

using safecomp::Activation;
using safecomp::Layer;
using safecomp::Network;
using safecomp::ScoreOrder;

inline Network make_network(std::size_t inputs, std::size_t labels, ScoreOrder order,
                            double domain_lo = -10.0, double domain_hi = 10.0) {
  Network net;
  net.name = "fixture";
  for (std::size_t i = 0; i < labels; ++i) net.labels.push_back("L" + std::to_string(i));
  net.score_order = order;
  net.input_dim = inputs;
  net.input_min.assign(inputs, domain_lo);
  net.input_max.assign(inputs, domain_hi);
  net.input_mean.assign(inputs, 0.0);
  net.input_range.assign(inputs, 1.0);
  return net;
}

inline Layer dense(std::size_t out, std::size_t in, Activation act, std::vector<double> w,
                   std::vector<double> b) {
  Layer l;
  l.out = out;
  l.in = in;
  l.activation = act;
  l.weights = std::move(w);
  l.bias = std::move(b);
  return l;
}

// n-input identity classifier: score_i = x_i.
inline Network identity_net(std::size_t n, ScoreOrder order) {
  Network net = make_network(n, n, order);
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) w[i * n + i] = 1.0;
  net.layers.push_back(dense(n, n, Activation::identity, w, std::vector<double>(n, 0.0)));
  return net;
}

inline Network random_network(std::uint64_t seed, std::size_t inputs,
                              const std::vector<std::size_t>& hidden, std::size_t labels,
                              ScoreOrder order = ScoreOrder::max_best) {
  safecomp::Rng rng(seed);
  Network net = make_network(inputs, labels, order);
  net.name = "random-" + std::to_string(seed);
  std::size_t width = inputs;
  auto add = [&](std::size_t out, Activation act) {
    Layer l;
    l.out = out;
    l.in = width;
    l.activation = act;
    const double scale = 1.5 / std::sqrt(static_cast<double>(width));
    for (std::size_t k = 0; k < out * width; ++k) l.weights.push_back(scale * rng.normal());
    for (std::size_t k = 0; k < out; ++k) l.bias.push_back(0.5 * rng.normal());
    net.layers.push_back(std::move(l));
    width = out;
  };
  for (auto h : hidden) add(h, Activation::relu);
  add(labels, Activation::identity);
  return net;
}

// Straight-line forward pass written independently of safecomp::evaluate.
inline std::vector<double> reference_forward(const Network& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const Layer& L = net.layers[k];
    std::vector<double> z(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < L.in; ++i)
        s += static_cast<long double>(L.weights[o * L.in + i]) * a[i];
      s += L.bias[o];
      double v = static_cast<double>(s);
      z[o] = (L.activation == Activation::relu && v < 0.0) ? 0.0 : v;
    }
    a = z;
  }
  return a;
}

inline std::size_t reference_argbest(const std::vector<double>& s, ScoreOrder order) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (order == ScoreOrder::max_best ? s[i] > s[best] : s[i] < s[best]) best = i;
  }
  return best;
}

inline double reference_dist(safecomp::Metric m, const std::vector<double>& a,
                             const std::vector<double>& b) {
  double l1 = 0, l2 = 0, li = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
    l1 += d;
    l2 += d * d;
    if (d > li) li = d;
  }
  switch (m) {
    case safecomp::Metric::L1: return l1;
    case safecomp::Metric::L2: return std::sqrt(l2);
    case safecomp::Metric::Linf: return li;
  }
  return 0;
}

// Dense grid sweep of a 2-D region (intersected with the network domain).
// Calls `visit(point, label)` for every in-region grid point.
template <class Visit>
void sweep_region_2d(const Network& net, const safecomp::Region& region, double step, Visit&& visit) {
  const double x0 = std::max(region.centroid[0] - region.radius, net.input_min[0]);
  const double x1 = std::min(region.centroid[0] + region.radius, net.input_max[0]);
  const double y0 = std::max(region.centroid[1] - region.radius, net.input_min[1]);
  const double y1 = std::min(region.centroid[1] + region.radius, net.input_max[1]);
  std::vector<double> p(2);
  for (long i = 0;; ++i) {
    p[0] = x0 + step * static_cast<double>(i);
    if (p[0] > x1) break;
    for (long j = 0;; ++j) {
      p[1] = y0 + step * static_cast<double>(j);
      if (p[1] > y1) break;
      if (reference_dist(region.metric, p, region.centroid) > region.radius) continue;
      visit(p, reference_argbest(reference_forward(net, p), net.score_order));
    }
  }
}

// One Gaussian blob per label around a random center in [0,1]^dim.
inline safecomp::LabeledDataset blob_dataset(std::uint64_t seed, std::size_t dim, std::size_t labels,
                                             std::size_t per_label, double spread) {
  safecomp::Rng rng(seed);
  safecomp::LabeledDataset data;
  for (std::size_t d = 0; d < dim; ++d) data.attributes.push_back("x" + std::to_string(d + 1));
  for (std::size_t l = 0; l < labels; ++l) {
    std::vector<double> c(dim);
    for (auto& v : c) v = rng.uniform();
    for (std::size_t k = 0; k < per_label; ++k) {
      std::vector<double> p(dim);
      for (std::size_t d = 0; d < dim; ++d) p[d] = c[d] + spread * rng.normal();
      data.points.push_back(std::move(p));
      data.labels.push_back(l);
    }
  }
  return data;
}

} // namespace fixtures
