// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/parameters.hpp"

#include "s2sw/error.hpp"

namespace s2sw {

Parameter& ParameterCollection::add(const std::string& name, std::size_t rows, std::size_t cols) {
  if (by_name_.contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(rows, cols);
  p->grad = Tensor(rows, cols);
  auto* raw = p.get();
  params_.push_back(std::move(p));
  by_name_.emplace(name, raw);
  return *raw;
}

Parameter& ParameterCollection::get(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ConfigError("no parameter named '" + name + "'");
  return *it->second;
}

const Parameter& ParameterCollection::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ConfigError("no parameter named '" + name + "'");
  return *it->second;
}

void ParameterCollection::zero_grad() {
  for (auto& p : params_) p->grad.set_zero();
}

std::size_t ParameterCollection::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterCollection::copy_values_from(const ParameterCollection& other) {
  for (const auto& src : other.params_) {
    auto it = by_name_.find(src->name);
    if (it == by_name_.end()) continue;
    if (!it->second->value.same_shape(src->value)) {
      throw ShapeError("parameter '" + src->name + "' shape " + it->second->value.shape_str() +
                       " vs " + src->value.shape_str());
    }
    it->second->value = src->value;
  }
}

std::vector<Tensor> ParameterCollection::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterCollection::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) throw ConfigError("snapshot size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) params_[i]->value = values[i];
}

}  // namespace s2sw
