// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace s2sw {

/// Dense row-major matrix of doubles. Vectors are (n x 1).
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor column(std::vector<double> values);
  static Tensor column(std::initializer_list<double> values) {
    return column(std::vector<double>(values));
  }
  static Tensor row(std::vector<double> values);
  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const;

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  void fill(double v);
  void set_zero() { fill(0.0); }
  bool all_finite() const;
  double squared_norm() const;

  Tensor col(std::size_t c) const;
  Tensor& operator+=(const Tensor& o);
  Tensor& operator*=(double s);

  bool operator==(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// out = a * b
Tensor matmul(const Tensor& a, const Tensor& b);
/// out += a * b^T
void matmul_add_bt(const Tensor& a, const Tensor& b, Tensor& out);
/// out += a^T * b
void matmul_add_at(const Tensor& a, const Tensor& b, Tensor& out);

Tensor transpose(const Tensor& a);

/// Column-wise softmax with max subtraction.
Tensor softmax(const Tensor& scores);
/// Column-wise log-softmax with max subtraction.
Tensor log_softmax(const Tensor& scores);

double max_abs_diff(const Tensor& a, const Tensor& b);

void fill_uniform(Tensor& t, double lo, double hi, std::mt19937_64& rng);
/// Uniform in +-sqrt(6 / (rows + cols)).
void fill_glorot(Tensor& t, std::mt19937_64& rng);

}  // namespace s2sw
