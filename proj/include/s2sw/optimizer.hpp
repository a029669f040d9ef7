// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>

#include "s2sw/parameters.hpp"

namespace s2sw {

enum class OptimizerKind { sgd, momentum, adagrad, adam };

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Adam with the usual published defaults (lr 0.001, 0.9, 0.999, 1e-8).
  static OptimizerConfig adam(double lr = 0.001) {
    return {OptimizerKind::adam, lr, 0.9, 0.9, 0.999, 1e-8};
  }
};

/// Applies one update to every parameter from its accumulated gradient, then
/// zeroes the gradients. Auxiliary state (velocity, squared-gradient sums,
/// moment estimates) is kept per parameter.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  void step(ParameterCollection& params);
  void step(Parameter& p);

  const OptimizerConfig& config() const { return config_; }
  double learning_rate() const { return config_.learning_rate; }
  void set_learning_rate(double lr);
  std::uint64_t steps() const { return steps_; }

 private:
  struct Aux {
    Tensor first;   // velocity / squared-gradient sum / first moment
    Tensor second;  // second moment (adam)
    std::uint64_t t = 0;
  };
  OptimizerConfig config_;
  std::unordered_map<const Parameter*, Aux> aux_;
  std::uint64_t steps_ = 0;
};

/// Global L2 norm of all gradients in the collection.
double gradient_norm(const ParameterCollection& params);

/// Rescales every gradient by max_norm / norm when the global norm exceeds
/// max_norm. Returns the norm before clipping.
double clip_gradients(ParameterCollection& params, double max_norm);

}  // namespace s2sw
