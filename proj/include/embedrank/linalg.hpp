#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "embedrank/errors.hpp"

namespace embedrank {

using Vec = std::vector<double>;

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

inline bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void check_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

inline double dot(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "dot");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double squared_distance(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "squared_distance");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double distance(const Vec& a, const Vec& b) { return std::sqrt(squared_distance(a, b)); }

inline Vec matvec(const Matrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.cols) {
    throw DimensionError("matvec: matrix has " + std::to_string(m.cols) + " columns, vector has " +
                         std::to_string(x.size()));
  }
  Vec out(static_cast<size_t>(m.rows), 0.0);
  const double* row = m.data.data();
  for (int r = 0; r < m.rows; ++r, row += m.cols) {
    double s = 0.0;
    for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
  return out;
}

// y = M^T x, used when pushing gradients back through a linear layer.
inline Vec matvec_transposed(const Matrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.rows) {
    throw DimensionError("matvec_transposed: matrix has " + std::to_string(m.rows) +
                         " rows, vector has " + std::to_string(x.size()));
  }
  Vec out(static_cast<size_t>(m.cols), 0.0);
  const double* row = m.data.data();
  for (int r = 0; r < m.rows; ++r, row += m.cols) {
    const double xr = x[r];
    for (int c = 0; c < m.cols; ++c) out[c] += row[c] * xr;
  }
  return out;
}

}  // namespace embedrank
