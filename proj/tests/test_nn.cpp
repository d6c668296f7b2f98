#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "embedrank/nn.hpp"
#include "embedrank/rng.hpp"
#include "test_util.hpp"

using namespace embedrank;
using testutil::random_vec;

namespace {

DenseLayer layer_from(int in, int out, Rng& rng) {
  DenseLayer l;
  l.weights = Matrix(out, in);
  for (double& w : l.weights.data) w = rng.normal();
  l.bias = random_vec(out, rng);
  l.prelu_slopes.assign(out, 0.25);
  return l;
}

}  // namespace

TEST(LinearForward, IdentityCase) {
  DenseLayer l;
  l.weights = Matrix(2, 2);
  l.weights(0, 0) = 1.0;
  l.weights(1, 1) = 1.0;
  l.bias = {0.0, 0.0};
  l.prelu_slopes = {0.25, 0.25};
  const Vec out = linear_forward(l, {3.0, -1.0});
  EXPECT_EQ(out, (Vec{3.0, -1.0}));
}

TEST(LinearForward, HandArithmetic) {
  DenseLayer l;
  l.weights = Matrix(2, 2);
  l.weights(0, 0) = 1.0;
  l.weights(0, 1) = 2.0;
  l.weights(1, 0) = 0.0;
  l.weights(1, 1) = 1.0;
  l.bias = {1.0, 0.0};
  l.prelu_slopes = {0.25, 0.25};
  const Vec out = linear_forward(l, {1.0, 1.0});
  EXPECT_EQ(out, (Vec{4.0, 1.0}));
}

// Independent naive triple-loop reference for W x + b.
TEST(LinearForward, MatchesNaiveOracle) {
  Rng rng(42);
  DenseLayer l = layer_from(5, 3, rng);
  const Vec x = random_vec(5, rng);
  const Vec out = linear_forward(l, x);
  for (int r = 0; r < 3; ++r) {
    double expect = l.bias[r];
    for (int c = 0; c < 5; ++c) expect += l.weights(r, c) * x[c];
    EXPECT_DOUBLE_EQ(out[r], expect);
  }
}

TEST(LinearForward, DimensionMismatchThrows) {
  Rng rng(1);
  DenseLayer l = layer_from(4, 2, rng);
  EXPECT_THROW(linear_forward(l, Vec{1.0, 2.0}), DimensionError);
}

TEST(LinearForward, LinearityWithZeroBias) {
  Rng rng(7);
  DenseLayer l = layer_from(6, 4, rng);
  l.bias.assign(4, 0.0);
  const Vec x = random_vec(6, rng);
  const Vec y = random_vec(6, rng);
  const double a = 1.7, b = -0.3;
  Vec combo(6);
  for (int i = 0; i < 6; ++i) combo[i] = a * x[i] + b * y[i];
  const Vec lhs = linear_forward(l, combo);
  const Vec fx = linear_forward(l, x);
  const Vec fy = linear_forward(l, y);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(lhs[i], a * fx[i] + b * fy[i], 1e-12);
}

TEST(Prelu, Definition) {
  EXPECT_EQ(prelu({0.25, 0.25}, {2.0, -4.0}), (Vec{2.0, -1.0}));
}

TEST(Prelu, ZeroFixedPoint) {
  EXPECT_EQ(prelu({0.5, 1.5, 0.1}, {0.0, 0.0, 0.0}), (Vec{0.0, 0.0, 0.0}));
}

TEST(Prelu, SlopeOneIsIdentity) {
  Rng rng(3);
  const Vec x = random_vec(8, rng);
  EXPECT_EQ(prelu(Vec(8, 1.0), x), x);
}

TEST(Prelu, MismatchThrows) {
  EXPECT_THROW(prelu({0.25}, {1.0, 2.0}), DimensionError);
}

TEST(Prelu, PositivelyHomogeneousPerOrthant) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec slopes = random_vec(5, rng, 0.3);
    const Vec x = random_vec(5, rng);
    const double c = std::exp(rng.normal());  // > 0
    Vec scaled(5);
    for (int i = 0; i < 5; ++i) scaled[i] = c * x[i];
    const Vec lhs = prelu(slopes, scaled);
    const Vec rhs = prelu(slopes, x);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(lhs[i], c * rhs[i], 1e-12 * std::abs(c * rhs[i]) + 1e-15);
  }
}

TEST(L2Normalize, ThreeFourFive) {
  const Vec out = l2_normalize({3.0, 4.0});
  EXPECT_DOUBLE_EQ(out[0], 0.6);
  EXPECT_DOUBLE_EQ(out[1], 0.8);
}

TEST(L2Normalize, UnitNormAndIdempotent) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = random_vec(6, rng, 3.0);
    const Vec y = l2_normalize(x);
    EXPECT_NEAR(norm(y), 1.0, 1e-9);
    const Vec y2 = l2_normalize(y);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(y2[i], y[i], 1e-12);
  }
}

TEST(L2Normalize, ZeroVectorThrows) {
  EXPECT_THROW(l2_normalize({0.0, 0.0}), DegenerateVectorError);
}

TEST(FiniteDiff, QuadraticExact) {
  const auto f = [](const Vec& v) { return dot(v, v); };
  const Vec g = finite_diff_grad(f, {1.0, 2.0}, 1e-5);
  EXPECT_NEAR(g[0], 2.0, 1e-6);
  EXPECT_NEAR(g[1], 4.0, 1e-6);
}

TEST(FiniteDiff, ConstantFunction) {
  const auto f = [](const Vec&) { return 3.5; };
  const Vec g = finite_diff_grad(f, {1.0, -2.0, 0.5}, 1e-5);
  for (double x : g) EXPECT_DOUBLE_EQ(x, 0.0);
}

TEST(FiniteDiff, BadEpsThrows) {
  const auto f = [](const Vec& v) { return v[0]; };
  EXPECT_THROW(finite_diff_grad(f, {1.0}, 0.0), DomainError);
}

TEST(FiniteDiff, NonFiniteThrows) {
  const auto f = [](const Vec& v) { return std::log(v[0]); };
  EXPECT_THROW(finite_diff_grad(f, {0.0}, 1e-3), NumericalError);
}

// Jacobian-vector products of every primitive against central differences:
// random probe direction w, scalar f(x) = <w, op(x)>, analytic gradient from
// the backward pass.
TEST(GradOracle, PrimitivesMatchFiniteDifferences) {
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int in = 2 + static_cast<int>(rng.below(7));   // <= 8
    const int out = 1 + static_cast<int>(rng.below(8));  // <= 8
    DenseLayer layer = layer_from(in, out, rng);
    const Vec x = random_vec(in, rng);
    const Vec w = random_vec(out, rng);

    // linear: d<w, Wx+b>/dx = W^T w, d/dW = w x^T, d/db = w
    {
      const auto f = [&](const Vec& v) { return dot(w, linear_forward(layer, v)); };
      const Vec fd = finite_diff_grad(f, x, 1e-6);
      LayerGrads acc = zeros_like(layer);
      const Vec gx = linear_backward(layer, x, w, acc);
      for (int i = 0; i < in; ++i) {
        EXPECT_NEAR(gx[i], fd[i], 1e-5 * std::max(std::abs(fd[i]), 1e-8));
      }
      const auto f_params = [&](const Vec& packed) {
        DenseLayer probe = layer;
        std::copy(packed.begin(), packed.begin() + probe.weights.data.size(),
                  probe.weights.data.begin());
        std::copy(packed.begin() + probe.weights.data.size(), packed.end(), probe.bias.begin());
        return dot(w, linear_forward(probe, x));
      };
      Vec packed(layer.weights.data);
      packed.insert(packed.end(), layer.bias.begin(), layer.bias.end());
      const Vec fd_params = finite_diff_grad(f_params, packed, 1e-6);
      Vec analytic(acc.weights.data);
      analytic.insert(analytic.end(), acc.bias.begin(), acc.bias.end());
      for (size_t i = 0; i < packed.size(); ++i) {
        EXPECT_NEAR(analytic[i], fd_params[i], 1e-5 * std::max(std::abs(fd_params[i]), 1e-8));
      }
    }
    // prelu wrt x and wrt slopes
    {
      Vec xs = x;
      bool near_kink = false;
      for (double v : xs) near_kink |= std::abs(v) < 1e-4;
      if (near_kink) continue;  // finite differences are invalid across the kink
      const Vec slopes = random_vec(in, rng, 0.3);
      const Vec wx = random_vec(in, rng);
      const auto fx = [&](const Vec& v) { return dot(wx, prelu(slopes, v)); };
      const Vec fd_x = finite_diff_grad(fx, xs, 1e-6);
      Vec slope_grads(in, 0.0);
      const Vec gx = prelu_backward(slopes, xs, wx, slope_grads);
      for (int i = 0; i < in; ++i) {
        EXPECT_NEAR(gx[i], fd_x[i], 1e-5 * std::max(std::abs(fd_x[i]), 1e-8));
      }
      const auto fs = [&](const Vec& s) { return dot(wx, prelu(s, xs)); };
      const Vec fd_s = finite_diff_grad(fs, slopes, 1e-6);
      for (int i = 0; i < in; ++i) {
        EXPECT_NEAR(slope_grads[i], fd_s[i], 1e-5 * std::max(std::abs(fd_s[i]), 1e-8));
      }
    }
    // l2 normalize
    {
      const Vec win = random_vec(in, rng);
      const auto f = [&](const Vec& v) { return dot(win, l2_normalize(v)); };
      const Vec fd = finite_diff_grad(f, x, 1e-6);
      const Vec y = l2_normalize(x);
      const Vec gx = l2_normalize_backward(x, y, win);
      for (size_t i = 0; i < x.size(); ++i) {
        EXPECT_NEAR(gx[i], fd[i], 1e-5 * std::max(std::abs(fd[i]), 1e-8));
      }
    }
    ++checked;
  }
  EXPECT_GE(checked, 80);
}
