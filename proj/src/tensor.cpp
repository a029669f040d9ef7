// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "s2sw/error.hpp"

namespace s2sw {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str());
  }
}

Tensor Tensor::column(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(n, 1, std::move(values));
}

Tensor Tensor::row(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(1, n, std::move(values));
}

std::string Tensor::shape_str() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double Tensor::squared_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return s;
}

Tensor Tensor::col(std::size_t c) const {
  Tensor out(rows_, 1);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Tensor& Tensor::operator+=(const Tensor& o) {
  if (!same_shape(o)) throw ShapeError("+= shape mismatch " + shape_str() + " vs " + o.shape_str());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul shape mismatch " + a.shape_str() + " * " + b.shape_str());
  }
  Tensor out(a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* o = &out(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* brow = b.data().data() + p * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += av * brow[j];
    }
  }
  return out;
}

void matmul_add_bt(const Tensor& a, const Tensor& b, Tensor& out) {
  // out (n x k) += a (n x m) * b^T (m x k)
  const std::size_t n = a.rows(), m = a.cols(), k = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += a(i, j) * b(p, j);
      out(i, p) += s;
    }
  }
}

void matmul_add_at(const Tensor& a, const Tensor& b, Tensor& out) {
  // out (k x m) += a^T (k x n) * b (n x m)
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      double* o = &out(p, 0);
      const double* brow = b.data().data() + i * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += av * brow[j];
    }
  }
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

Tensor softmax(const Tensor& scores) {
  Tensor out(scores.rows(), scores.cols());
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < scores.rows(); ++r) {
      if (std::isnan(scores(r, c))) throw DivergenceError("softmax input contains NaN");
      mx = std::max(mx, scores(r, c));
    }
    double z = 0.0;
    for (std::size_t r = 0; r < scores.rows(); ++r) {
      out(r, c) = std::exp(scores(r, c) - mx);
      z += out(r, c);
    }
    for (std::size_t r = 0; r < scores.rows(); ++r) out(r, c) /= z;
  }
  return out;
}

Tensor log_softmax(const Tensor& scores) {
  Tensor out(scores.rows(), scores.cols());
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < scores.rows(); ++r) {
      if (std::isnan(scores(r, c))) throw DivergenceError("log_softmax input contains NaN");
      mx = std::max(mx, scores(r, c));
    }
    double z = 0.0;
    for (std::size_t r = 0; r < scores.rows(); ++r) z += std::exp(scores(r, c) - mx);
    const double lz = mx + std::log(z);
    for (std::size_t r = 0; r < scores.rows(); ++r) out(r, c) = scores(r, c) - lz;
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void fill_uniform(Tensor& t, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& x : t.data()) x = dist(rng);
}

void fill_glorot(Tensor& t, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  fill_uniform(t, -limit, limit, rng);
}

}  // namespace s2sw
