// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include "s2sw/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>

#include "s2sw/error.hpp"

namespace s2sw {

void write_metrics(std::ostream& out, const TrainLog& log) {
  out << std::setprecision(10);
  for (const auto& e : log.epochs) {
    out << e.epoch << '\t' << e.train_loss << '\t' << e.dev_ll << '\t' << e.dev_ppl << '\n';
  }
}

void write_metrics(const std::string& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write metrics file " + path);
  write_metrics(out, log);
}

DevMonitor::Verdict DevMonitor::observe(double dev_ll) {
  Verdict v;
  if (std::isnan(dev_ll)) return v;
  if (dev_ll > best_) {
    best_ = dev_ll;
    stale_ = 0;
    v.improved = true;
    return v;
  }
  ++stale_;
  v.halve_lr = schedule_.decay;
  v.stop = schedule_.patience > 0 && stale_ >= schedule_.patience;
  return v;
}

TrainLog train_units(ParameterCollection& params, std::size_t num_units,
                     const std::function<Expr(ComputationGraph&, std::size_t)>& unit_loss,
                     const std::function<HeldOutScore()>& dev_score, const TrainSchedule& schedule) {
  if (num_units == 0) throw DataError("empty training corpus");
  double lr = schedule.optimizer.learning_rate;
  if (lr < 0.0 || !std::isfinite(lr)) throw ConfigError("learning rate must be non-negative");
  std::optional<Optimizer> opt;
  if (lr > 0.0) opt.emplace(schedule.optimizer);

  std::mt19937_64 rng(schedule.seed);
  std::vector<std::size_t> order(num_units);
  std::iota(order.begin(), order.end(), 0);

  params.zero_grad();
  std::vector<Tensor> best = params.snapshot();
  DevMonitor monitor(schedule);
  TrainLog log;

  for (unsigned epoch = 1; epoch <= schedule.epochs; ++epoch) {
    if (schedule.shuffle) std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t u : order) {
      ComputationGraph cg;
      const Expr loss = unit_loss(cg, u);
      const double value = cg.forward(loss)[0];
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite loss " + std::to_string(value) + " at epoch " + std::to_string(epoch));
      }
      stats.train_loss += value;
      if (!opt) continue;
      cg.backward(loss);
      if (schedule.clip_norm > 0.0) {
        const double norm = clip_gradients(params, schedule.clip_norm);
        if (!std::isfinite(norm)) throw DivergenceError("non-finite gradient norm at epoch " + std::to_string(epoch));
      }
      opt->step(params);
    }
    if (dev_score) {
      const HeldOutScore s = dev_score();
      stats.dev_ll = s.log_likelihood;
      if (s.words > 0) stats.dev_ppl = std::exp(-s.log_likelihood / static_cast<double>(s.words));
      if (!std::isfinite(stats.dev_ll)) throw DivergenceError("non-finite dev log-likelihood");
    }
    log.epochs.push_back(stats);
    const auto verdict = monitor.observe(stats.dev_ll);
    if (verdict.improved) {
      best = params.snapshot();
      log.best_epoch = epoch;
    }
    if (verdict.halve_lr && opt) {
      lr *= 0.5;
      opt->set_learning_rate(lr);
    }
    if (verdict.stop) break;
  }
  if (schedule.keep_best && log.best_epoch > 0) params.restore(best);
  return log;
}

}  // namespace s2sw
