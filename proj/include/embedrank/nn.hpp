#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "embedrank/errors.hpp"
#include "embedrank/linalg.hpp"

namespace embedrank {

// Pre-normalization outputs at or below this norm are treated as degenerate.
inline constexpr double kNormEpsilon = 1e-12;

inline constexpr double kDefaultPreluSlope = 0.25;

struct DenseLayer {
  Matrix weights;    // out x in
  Vec bias;          // out
  Vec prelu_slopes;  // out, one learnable slope per unit; all-zero means plain ReLU

  int in_dim() const { return weights.cols; }
  int out_dim() const { return weights.rows; }
};

inline Vec linear_forward(const DenseLayer& layer, const Vec& x) {
  Vec out = matvec(layer.weights, x);
  for (size_t i = 0; i < out.size(); ++i) out[i] += layer.bias[i];
  return out;
}

inline Vec prelu(const Vec& slopes, const Vec& x) {
  check_same_dim(slopes, x, "prelu");
  Vec out(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] > 0.0 ? x[i] : slopes[i] * x[i];
  }
  return out;
}

inline Vec relu(const Vec& x) {
  Vec out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

inline Vec l2_normalize(const Vec& x) {
  const double n = norm(x);
  if (!(n > kNormEpsilon)) {
    throw DegenerateVectorError("l2_normalize: vector norm " + std::to_string(n) +
                                " is below " + std::to_string(kNormEpsilon));
  }
  Vec out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] / n;
  return out;
}

// ---------------------------------------------------------------------------
// Backward passes. Parameter gradients accumulate into LayerGrads so that
// several forward passes sharing one set of parameters can sum contributions.
// ---------------------------------------------------------------------------

struct LayerGrads {
  Matrix weights;
  Vec bias;
  Vec prelu_slopes;
};

inline LayerGrads zeros_like(const DenseLayer& layer) {
  LayerGrads g;
  g.weights = Matrix(layer.out_dim(), layer.in_dim());
  g.bias.assign(layer.bias.size(), 0.0);
  g.prelu_slopes.assign(layer.prelu_slopes.size(), 0.0);
  return g;
}

// Returns dL/dx for y = W x + b given dL/dy; accumulates dL/dW and dL/db.
inline Vec linear_backward(const DenseLayer& layer, const Vec& x, const Vec& grad_out,
                           LayerGrads& grads) {
  if (static_cast<int>(grad_out.size()) != layer.out_dim()) {
    throw DimensionError("linear_backward: bad gradient dimension");
  }
  for (int r = 0; r < layer.out_dim(); ++r) {
    const double g = grad_out[r];
    grads.bias[r] += g;
    double* wrow = &grads.weights.data[static_cast<size_t>(r) * layer.in_dim()];
    for (int c = 0; c < layer.in_dim(); ++c) wrow[c] += g * x[c];
  }
  return matvec_transposed(layer.weights, grad_out);
}

// x is the pre-activation input. The x == 0 kink takes the slope branch.
inline Vec prelu_backward(const Vec& slopes, const Vec& x, const Vec& grad_out,
                          Vec& slope_grads) {
  check_same_dim(x, grad_out, "prelu_backward");
  Vec gx(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) {
      gx[i] = grad_out[i];
    } else {
      gx[i] = slopes[i] * grad_out[i];
      slope_grads[i] += x[i] * grad_out[i];
    }
  }
  return gx;
}

inline Vec relu_backward(const Vec& x, const Vec& grad_out) {
  check_same_dim(x, grad_out, "relu_backward");
  Vec gx(x.size());
  for (size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
  return gx;
}

// x: pre-normalization vector, y = x / ||x||. Jacobian is (I - y y^T) / ||x||.
inline Vec l2_normalize_backward(const Vec& x, const Vec& y, const Vec& grad_out) {
  const double n = norm(x);
  const double g_dot_y = dot(grad_out, y);
  Vec gx(x.size());
  for (size_t i = 0; i < x.size(); ++i) gx[i] = (grad_out[i] - g_dot_y * y[i]) / n;
  return gx;
}

// ---------------------------------------------------------------------------
// Central-difference gradient of a scalar function. This is the oracle all
// analytic gradients in this library are checked against; it never touches
// the backward passes above.
// ---------------------------------------------------------------------------

inline Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                            double eps) {
  if (!(eps > 0.0)) throw DomainError("finite_diff_grad: eps must be positive");
  Vec grad(x.size());
  Vec probe = x;
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double f_plus = f(probe);
    probe[i] = x[i] - eps;
    const double f_minus = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
      throw NumericalError("finite_diff_grad: non-finite function value at coordinate " +
                           std::to_string(i));
    }
    grad[i] = (f_plus - f_minus) / (2.0 * eps);
  }
  return grad;
}

}  // namespace embedrank
