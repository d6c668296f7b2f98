#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "embedrank/data.hpp"
#include "embedrank/errors.hpp"
#include "embedrank/mining.hpp"
#include "embedrank/model.hpp"
#include "embedrank/rng.hpp"

namespace embedrank {

struct TrainConfig {
  double gamma = 0.2;            // triplet margin
  double learning_rate = 1e-4;
  int max_epochs = 200;          // 150 is the usual choice for the mlp
  int patience = 10;             // epochs without min_delta improvement before stopping
  double min_delta = 1e-5;
  int batch_size = 256;
  int hidden1 = 1024;
  int hidden2 = 512;
  int out_dim = 128;             // embednet only; the mlp maps back to its input dim
  uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  // learning_rate == 0 is allowed and freezes the parameters, which is handy
  // for smoke tests.
  void validate() const {
    if (learning_rate < 0.0) throw ConfigError("train: learning_rate must be >= 0");
    if (gamma < 0.0) throw ConfigError("train: gamma must be >= 0");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (min_delta < 0.0) throw ConfigError("train: min_delta must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("train: adam betas must be in [0, 1)");
    }
    if (adam_epsilon <= 0.0) throw ConfigError("train: adam epsilon must be > 0");
  }
};

// Gradients (or Adam moments) shaped exactly like a parameter stack.
using Tangent = std::vector<LayerGrads>;

inline Tangent zero_tangent(const std::vector<DenseLayer>& layers) {
  Tangent t;
  t.reserve(layers.size());
  for (const DenseLayer& l : layers) t.push_back(zeros_like(l));
  return t;
}

inline void scale_tangent(Tangent& t, double factor) {
  for (LayerGrads& g : t) {
    for (double& x : g.weights.data) x *= factor;
    for (double& x : g.bias) x *= factor;
    for (double& x : g.prelu_slopes) x *= factor;
  }
}

struct AdamState {
  Tangent m;  // first moments
  Tangent v;  // second moments
  long t = 0; // completed steps
};

inline AdamState init_adam(const std::vector<DenseLayer>& layers) {
  return AdamState{zero_tangent(layers), zero_tangent(layers), 0};
}

namespace detail {

inline void adam_update_array(double* p, const double* g, double* m, double* v, size_t n,
                              const TrainConfig& cfg, double bias1, double bias2) {
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(g[i])) throw NumericalError("adam_step: non-finite gradient");
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
  }
}

}  // namespace detail

// One bias-corrected Adam update, applied elementwise to every parameter.
inline void adam_step(AdamState& state, std::vector<DenseLayer>& params, const Tangent& grads,
                      const TrainConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size()) {
    throw DimensionError("adam_step: parameter/gradient/state shapes disagree");
  }
  ++state.t;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t l = 0; l < params.size(); ++l) {
    DenseLayer& layer = params[l];
    const LayerGrads& g = grads[l];
    LayerGrads& m = state.m[l];
    LayerGrads& v = state.v[l];
    detail::adam_update_array(layer.weights.data.data(), g.weights.data.data(),
                              m.weights.data.data(), v.weights.data.data(),
                              layer.weights.data.size(), cfg, bias1, bias2);
    detail::adam_update_array(layer.bias.data(), g.bias.data(), m.bias.data(), v.bias.data(),
                              layer.bias.size(), cfg, bias1, bias2);
    detail::adam_update_array(layer.prelu_slopes.data(), g.prelu_slopes.data(),
                              m.prelu_slopes.data(), v.prelu_slopes.data(),
                              layer.prelu_slopes.size(), cfg, bias1, bias2);
  }
}

namespace detail {

// Backward through the embednet stack for one forward trace; adds parameter
// gradients into acc and returns nothing (input gradients are not needed).
inline void embednet_backward(const EmbedNetParams& p, const Vec& input, const ForwardTrace& t,
                              Vec grad_out, Tangent& acc) {
  Vec g = l2_normalize_backward(t.post.back(), t.out, grad_out);
  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
    g = prelu_backward(p.layers[l].prelu_slopes, t.pre[l], g, acc[l].prelu_slopes);
    const Vec& layer_input = l == 0 ? input : t.post[l - 1];
    g = linear_backward(p.layers[l], layer_input, g, acc[l]);
  }
}

}  // namespace detail

// Triplet loss and its exact gradient for one (anchor, positive, negative)
// input triple, accumulated into acc. The three forward passes share the
// parameters, so their contributions sum. A clamped (easy) triplet
// contributes exactly zero.
inline double triplet_grads_accumulate(const EmbedNetParams& p, const Vec& anchor,
                                       const Vec& positive, const Vec& negative, double gamma,
                                       Tangent& acc) {
  const ForwardTrace ta = embednet_forward_trace(p, anchor);
  const ForwardTrace tp = embednet_forward_trace(p, positive);
  const ForwardTrace tn = embednet_forward_trace(p, negative);
  const double arg =
      squared_distance(ta.out, tp.out) - squared_distance(ta.out, tn.out) + gamma;
  if (arg <= 0.0) return 0.0;

  const size_t d = ta.out.size();
  Vec ga(d), gp(d), gn(d);
  for (size_t i = 0; i < d; ++i) {
    ga[i] = 2.0 * (tn.out[i] - tp.out[i]);
    gp[i] = 2.0 * (tp.out[i] - ta.out[i]);
    gn[i] = 2.0 * (ta.out[i] - tn.out[i]);
  }
  detail::embednet_backward(p, anchor, ta, std::move(ga), acc);
  detail::embednet_backward(p, positive, tp, std::move(gp), acc);
  detail::embednet_backward(p, negative, tn, std::move(gn), acc);
  return arg;
}

struct GradResult {
  double loss = 0.0;
  Tangent grads;
};

inline GradResult triplet_grads(const EmbedNetParams& p, const Vec& anchor, const Vec& positive,
                                const Vec& negative, double gamma) {
  GradResult r;
  r.grads = zero_tangent(p.layers);
  r.loss = triplet_grads_accumulate(p, anchor, positive, negative, gamma, r.grads);
  return r;
}

// Mean squared error over output coordinates and its exact gradient.
inline double mse_grads_accumulate(const MlpParams& p, const Vec& input, const Vec& target,
                                   Tangent& acc) {
  const ForwardTrace t = mlp_forward_trace(p, input);
  check_same_dim(t.out, target, "mse_grads");
  const double inv_d = 1.0 / static_cast<double>(t.out.size());
  double loss = 0.0;
  Vec g(t.out.size());
  for (size_t i = 0; i < t.out.size(); ++i) {
    const double diff = t.out[i] - target[i];
    loss += diff * diff * inv_d;
    g[i] = 2.0 * diff * inv_d;
  }
  g = linear_backward(p.layers[2], t.post[1], g, acc[2]);
  g = relu_backward(t.pre[1], g);
  g = linear_backward(p.layers[1], t.post[0], g, acc[1]);
  g = relu_backward(t.pre[0], g);
  linear_backward(p.layers[0], input, g, acc[0]);
  return loss;
}

inline GradResult mse_grads(const MlpParams& p, const Vec& input, const Vec& target) {
  GradResult r;
  r.grads = zero_tangent(p.layers);
  r.loss = mse_grads_accumulate(p, input, target, r.grads);
  return r;
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  long hard = 0;
  long semi_hard = 0;
  long easy = 0;
  long mined = 0;      // triplets (or pairs) actually trained on
  double seconds = 0;  // wall time; informational only, not written to the history file
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
  long skipped_no_positive = 0;
};

// Validation triplet loss: mean hinge loss over every (anchor, positive,
// negative) combination of the split under the current model. Easy triplets
// contribute zero to the numerator but stay in the denominator, which keeps
// the signal comparable across epochs as the mined composition shifts.
inline double validation_triplet_loss(const std::vector<WordSample>& val,
                                      const EmbedNetParams& model, double gamma) {
  double sum = 0.0;
  long total = 0;
  for (const WordSample& s : val) {
    const std::vector<int> positives = positive_indices(s);
    if (positives.empty()) continue;
    const std::vector<int> negatives = negative_indices(s);
    if (negatives.empty()) continue;
    const Vec anchor = embednet_forward(model, s.phi);
    std::vector<double> d_ap;
    for (int pi : positives) {
      d_ap.push_back(squared_distance(anchor, embednet_forward(model, positive_vec(s, pi))));
    }
    for (int ni : negatives) {
      const double d_an = squared_distance(anchor, embednet_forward(model, s.hyps[ni].psi));
      for (double ap : d_ap) {
        const double arg = ap - d_an + gamma;
        if (arg > 0.0) sum += arg;
        ++total;
      }
    }
  }
  return total > 0 ? sum / static_cast<double>(total) : 0.0;
}

namespace detail {

struct EarlyStopper {
  double best_so_far = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  // true when training should stop
  bool update(double val_loss, const TrainConfig& cfg) {
    if (val_loss < best_so_far - cfg.min_delta) {
      best_so_far = val_loss;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
    }
    return stale_epochs >= cfg.patience;
  }
};

}  // namespace detail

// Trains the projection network with per-epoch triplet mining and returns the
// parameters of the epoch with the lowest validation loss.
inline std::pair<EmbedNetParams, TrainHistory> train_embednet(
    const std::vector<WordSample>& train, const std::vector<WordSample>& val,
    const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || val.empty()) {
    throw ConfigError("train_embednet: train and val splits must be nonempty");
  }
  const int in_dim = static_cast<int>(train.front().phi.size());
  EmbedNetParams params = init_embednet(in_dim, {cfg.hidden1, cfg.hidden2}, cfg.out_dim, cfg.seed);
  AdamState adam = init_adam(params.layers);

  TrainHistory history;
  EmbedNetParams best = params;
  detail::EarlyStopper stopper;
  Tangent batch_grads = zero_tangent(params.layers);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    MiningStats stats;
    const std::vector<Triplet> triplets =
        mine_triplets(train, params, cfg.gamma, mix_seed(cfg.seed, epoch + 1), &stats);
    history.skipped_no_positive = stats.skipped_no_positive;
    if (triplets.empty()) {
      throw TrainingStalledError(epoch, "no trainable triplets mined at epoch " +
                                            std::to_string(epoch));
    }

    double loss_sum = 0.0;
    size_t cursor = 0;
    while (cursor < triplets.size()) {
      const size_t batch_end = std::min(cursor + cfg.batch_size, triplets.size());
      const size_t batch_n = batch_end - cursor;
      scale_tangent(batch_grads, 0.0);
      for (size_t i = cursor; i < batch_end; ++i) {
        const Triplet& t = triplets[i];
        const WordSample& s = train[t.sample_index];
        loss_sum += triplet_grads_accumulate(params, s.phi, positive_vec(s, t.positive_index),
                                             s.hyps[t.negative_index].psi, cfg.gamma,
                                             batch_grads);
      }
      scale_tangent(batch_grads, 1.0 / static_cast<double>(batch_n));
      adam_step(adam, params.layers, batch_grads, cfg);
      cursor = batch_end;
    }

    const double train_loss = loss_sum / static_cast<double>(triplets.size());
    const double val_loss = validation_triplet_loss(val, params, cfg.gamma);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(EpochRecord{epoch, train_loss, val_loss, stats.hard,
                                         stats.semi_hard, stats.easy,
                                         static_cast<long>(triplets.size()), seconds});
    if (val_loss < history.best_val_loss) {
      history.best_val_loss = val_loss;
      history.best_epoch = epoch;
      best = params;
    }
    if (stopper.update(val_loss, cfg)) break;
  }
  return {std::move(best), std::move(history)};
}

namespace detail {

// (input, target) pairs for the mlp: image embedding -> correct text embedding.
inline std::vector<std::pair<const Vec*, const Vec*>> mse_pairs(
    const std::vector<WordSample>& samples, long* skipped) {
  std::vector<std::pair<const Vec*, const Vec*>> pairs;
  for (const WordSample& s : samples) {
    const std::vector<int> positives = positive_indices(s);
    if (positives.empty()) {
      if (skipped) ++*skipped;
      continue;
    }
    pairs.emplace_back(&s.phi, &positive_vec(s, positives.front()));
  }
  return pairs;
}

}  // namespace detail

// Trains the mlp baseline on (image embedding, correct text embedding) pairs.
inline std::pair<MlpParams, TrainHistory> train_mlp(const std::vector<WordSample>& train,
                                                    const std::vector<WordSample>& val,
                                                    const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || val.empty()) {
    throw ConfigError("train_mlp: train and val splits must be nonempty");
  }
  TrainHistory history;
  auto train_pairs = detail::mse_pairs(train, &history.skipped_no_positive);
  const auto val_pairs = detail::mse_pairs(val, nullptr);
  if (train_pairs.empty() || val_pairs.empty()) {
    throw TrainingStalledError(0, "no (input, target) pairs available for mlp training");
  }

  const int in_dim = static_cast<int>(train.front().phi.size());
  MlpParams params = init_mlp(in_dim, {cfg.hidden1, cfg.hidden2}, cfg.seed);
  AdamState adam = init_adam(params.layers);
  MlpParams best = params;
  detail::EarlyStopper stopper;
  Tangent batch_grads = zero_tangent(params.layers);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(mix_seed(cfg.seed, epoch + 1));
    rng.shuffle(train_pairs);

    double loss_sum = 0.0;
    size_t cursor = 0;
    while (cursor < train_pairs.size()) {
      const size_t batch_end = std::min(cursor + cfg.batch_size, train_pairs.size());
      const size_t batch_n = batch_end - cursor;
      scale_tangent(batch_grads, 0.0);
      for (size_t i = cursor; i < batch_end; ++i) {
        loss_sum +=
            mse_grads_accumulate(params, *train_pairs[i].first, *train_pairs[i].second,
                                 batch_grads);
      }
      scale_tangent(batch_grads, 1.0 / static_cast<double>(batch_n));
      adam_step(adam, params.layers, batch_grads, cfg);
      cursor = batch_end;
    }

    const double train_loss = loss_sum / static_cast<double>(train_pairs.size());
    double val_loss = 0.0;
    for (const auto& [input, target] : val_pairs) {
      const Vec out = mlp_forward(params, *input);
      double acc = 0.0;
      for (size_t i = 0; i < out.size(); ++i) {
        const double diff = out[i] - (*target)[i];
        acc += diff * diff;
      }
      val_loss += acc / static_cast<double>(out.size());
    }
    val_loss /= static_cast<double>(val_pairs.size());

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(EpochRecord{epoch, train_loss, val_loss, 0, 0, 0,
                                         static_cast<long>(train_pairs.size()), seconds});
    if (val_loss < history.best_val_loss) {
      history.best_val_loss = val_loss;
      history.best_epoch = epoch;
      best = params;
    }
    if (stopper.update(val_loss, cfg)) break;
  }
  return {std::move(best), std::move(history)};
}

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// History file: CSV with one row per epoch. Wall time is deliberately not
// written so that identical runs produce identical files.
inline void write_history_csv(const TrainHistory& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open history file for writing: " + path);
  out << "epoch,train_loss,val_loss,hard,semi_hard,easy,mined\n";
  for (const EpochRecord& r : h.epochs) {
    out << r.epoch << ',' << detail::format_double(r.train_loss) << ','
        << detail::format_double(r.val_loss) << ',' << r.hard << ',' << r.semi_hard << ','
        << r.easy << ',' << r.mined << '\n';
  }
  out << "# best_epoch=" << h.best_epoch
      << " best_val_loss=" << detail::format_double(h.best_val_loss) << '\n';
  if (!out) throw IoError("failed writing history file: " + path);
}

}  // namespace embedrank
