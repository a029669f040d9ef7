// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/optimizer.hpp"

#include <cmath>

#include "s2sw/error.hpp"

namespace s2sw {

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "momentum") return OptimizerKind::momentum;
  if (name == "adagrad") return OptimizerKind::adagrad;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::momentum: return "momentum";
    case OptimizerKind::adagrad: return "adagrad";
    case OptimizerKind::adam: return "adam";
  }
  return "?";
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  set_learning_rate(config.learning_rate);
}

void Optimizer::set_learning_rate(double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  config_.learning_rate = lr;
}

void Optimizer::step(ParameterCollection& params) {
  for (auto& p : params) step(*p);
  ++steps_;
}

void Optimizer::step(Parameter& p) {
  auto& value = p.value;
  auto& grad = p.grad;
  const double lr = config_.learning_rate;
  switch (config_.kind) {
    case OptimizerKind::sgd:
      for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * grad[i];
      break;
    case OptimizerKind::momentum: {
      auto& a = aux_[&p];
      if (a.first.empty()) a.first = Tensor(value.rows(), value.cols());
      for (std::size_t i = 0; i < value.size(); ++i) {
        a.first[i] = config_.momentum * a.first[i] + grad[i];
        value[i] -= lr * a.first[i];
      }
      break;
    }
    case OptimizerKind::adagrad: {
      auto& a = aux_[&p];
      if (a.first.empty()) a.first = Tensor(value.rows(), value.cols());
      for (std::size_t i = 0; i < value.size(); ++i) {
        a.first[i] += grad[i] * grad[i];
        value[i] -= lr * grad[i] / (std::sqrt(a.first[i]) + config_.epsilon);
      }
      break;
    }
    case OptimizerKind::adam: {
      auto& a = aux_[&p];
      if (a.first.empty()) {
        a.first = Tensor(value.rows(), value.cols());
        a.second = Tensor(value.rows(), value.cols());
      }
      ++a.t;
      const double b1 = config_.beta1, b2 = config_.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(a.t));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(a.t));
      for (std::size_t i = 0; i < value.size(); ++i) {
        a.first[i] = b1 * a.first[i] + (1.0 - b1) * grad[i];
        a.second[i] = b2 * a.second[i] + (1.0 - b2) * grad[i] * grad[i];
        const double m_hat = a.first[i] / c1;
        const double v_hat = a.second[i] / c2;
        value[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
      break;
    }
  }
  grad.set_zero();
}

double gradient_norm(const ParameterCollection& params) {
  double sq = 0.0;
  for (const auto& p : params) sq += p->grad.squared_norm();
  return std::sqrt(sq);
}

double clip_gradients(ParameterCollection& params, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("max_norm must be positive");
  const double norm = gradient_norm(params);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& p : params) p->grad *= s;
  }
  return norm;
}

}  // namespace s2sw
