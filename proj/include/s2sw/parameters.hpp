// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "s2sw/tensor.hpp"

namespace s2sw {

/// A trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Owns parameters with stable addresses, in insertion order.
class ParameterCollection {
 public:
  ParameterCollection() = default;
  ParameterCollection(const ParameterCollection&) = delete;
  ParameterCollection& operator=(const ParameterCollection&) = delete;
  ParameterCollection(ParameterCollection&&) = default;
  ParameterCollection& operator=(ParameterCollection&&) = default;

  /// Zero-initialized; throws ConfigError on a duplicate name.
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.contains(name); }

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  std::size_t num_scalars() const;

  /// Copies values of every same-named parameter; shapes must agree.
  void copy_values_from(const ParameterCollection& other);
  /// Value snapshot keyed by name (for best-dev checkpoints).
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter*> by_name_;
};

}  // namespace s2sw
