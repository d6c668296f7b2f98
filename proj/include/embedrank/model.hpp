#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "embedrank/errors.hpp"
#include "embedrank/nn.hpp"
#include "embedrank/rng.hpp"

namespace embedrank {

// Three dense layers, PReLU after each (including the last), then L2
// normalization onto the unit hypersphere. Applied unchanged to both the
// image-side and the text-side embeddings.
struct EmbedNetParams {
  std::vector<DenseLayer> layers;
  uint64_t seed = 0;

  int in_dim() const { return layers.front().in_dim(); }
  int out_dim() const { return layers.back().out_dim(); }
};

// Three dense layers with ReLU after the first two; maps the image-side
// embedding back into the text-side space, no output normalization.
struct MlpParams {
  std::vector<DenseLayer> layers;
  uint64_t seed = 0;

  int in_dim() const { return layers.front().in_dim(); }
  int out_dim() const { return layers.back().out_dim(); }
};

// Glorot-uniform weights, zero bias.
inline DenseLayer make_layer(int in_dim, int out_dim, double slope, Rng& rng) {
  DenseLayer layer;
  layer.weights = Matrix(out_dim, in_dim);
  const double limit = std::sqrt(6.0 / (in_dim + out_dim));
  for (double& w : layer.weights.data) w = rng.uniform(-limit, limit);
  layer.bias.assign(static_cast<size_t>(out_dim), 0.0);
  layer.prelu_slopes.assign(static_cast<size_t>(out_dim), slope);
  return layer;
}

inline void check_dims_positive(std::initializer_list<int> dims) {
  for (int d : dims) {
    if (d < 1) throw ConfigError("layer dimension must be >= 1, got " + std::to_string(d));
  }
}

inline EmbedNetParams init_embednet(int in_dim, std::pair<int, int> hidden_dims, int out_dim,
                                    uint64_t seed) {
  check_dims_positive({in_dim, hidden_dims.first, hidden_dims.second, out_dim});
  Rng rng(mix_seed(seed, 0xe3bedULL));
  EmbedNetParams p;
  p.seed = seed;
  p.layers.push_back(make_layer(in_dim, hidden_dims.first, kDefaultPreluSlope, rng));
  p.layers.push_back(make_layer(hidden_dims.first, hidden_dims.second, kDefaultPreluSlope, rng));
  p.layers.push_back(make_layer(hidden_dims.second, out_dim, kDefaultPreluSlope, rng));
  return p;
}

inline MlpParams init_mlp(int in_dim, std::pair<int, int> hidden_dims, uint64_t seed) {
  check_dims_positive({in_dim, hidden_dims.first, hidden_dims.second});
  Rng rng(mix_seed(seed, 0x317cULL));
  MlpParams p;
  p.seed = seed;
  p.layers.push_back(make_layer(in_dim, hidden_dims.first, 0.0, rng));
  p.layers.push_back(make_layer(hidden_dims.first, hidden_dims.second, 0.0, rng));
  p.layers.push_back(make_layer(hidden_dims.second, in_dim, 0.0, rng));
  return p;
}

// Intermediates of one forward pass, kept for backpropagation.
struct ForwardTrace {
  std::vector<Vec> pre;   // pre-activation per layer
  std::vector<Vec> post;  // post-activation per layer
  Vec out;                // network output
};

inline ForwardTrace embednet_forward_trace(const EmbedNetParams& p, const Vec& x) {
  ForwardTrace t;
  const Vec* cur = &x;
  for (const DenseLayer& layer : p.layers) {
    t.pre.push_back(linear_forward(layer, *cur));
    t.post.push_back(prelu(layer.prelu_slopes, t.pre.back()));
    cur = &t.post.back();
  }
  t.out = l2_normalize(t.post.back());
  return t;
}

inline Vec embednet_forward(const EmbedNetParams& p, const Vec& x) {
  Vec cur = x;
  for (const DenseLayer& layer : p.layers) {
    cur = prelu(layer.prelu_slopes, linear_forward(layer, cur));
  }
  return l2_normalize(cur);
}

inline ForwardTrace mlp_forward_trace(const MlpParams& p, const Vec& x) {
  ForwardTrace t;
  t.pre.push_back(linear_forward(p.layers[0], x));
  t.post.push_back(relu(t.pre.back()));
  t.pre.push_back(linear_forward(p.layers[1], t.post.back()));
  t.post.push_back(relu(t.pre.back()));
  t.pre.push_back(linear_forward(p.layers[2], t.post.back()));
  t.post.push_back(t.pre.back());  // no activation after the last layer
  t.out = t.post.back();
  return t;
}

inline Vec mlp_forward(const MlpParams& p, const Vec& x) {
  Vec cur = relu(linear_forward(p.layers[0], x));
  cur = relu(linear_forward(p.layers[1], cur));
  return linear_forward(p.layers[2], cur);
}

}  // namespace embedrank
