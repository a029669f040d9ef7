// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "s2sw/graph.hpp"
#include "s2sw/optimizer.hpp"

namespace s2sw {

/// Shared knobs for every trainer.
struct TrainSchedule {
  unsigned epochs = 10;
  OptimizerConfig optimizer{OptimizerKind::sgd, 0.1};
  bool shuffle = true;
  /// Halve the learning rate whenever dev log-likelihood fails to improve.
  bool decay = true;
  /// Return the parameters of the best dev epoch instead of the last one.
  bool keep_best = true;
  /// Stop after this many consecutive epochs without dev improvement (0: never).
  unsigned patience = 0;
  /// Global gradient-norm clip; <= 0 disables.
  double clip_norm = 5.0;
  std::size_t batch_size = 1;
  std::uint64_t seed = 42;
};

struct EpochStats {
  unsigned epoch = 0;
  double train_loss = 0.0;  // summed negative log likelihood (or squared error)
  double dev_ll = std::numeric_limits<double>::quiet_NaN();
  double dev_ppl = std::numeric_limits<double>::quiet_NaN();
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  unsigned best_epoch = 0;
};

/// "epoch<TAB>train_loss<TAB>dev_ll<TAB>dev_ppl" per line.
void write_metrics(std::ostream& out, const TrainLog& log);
void write_metrics(const std::string& path, const TrainLog& log);

/// Tracks dev log-likelihood across epochs: decides decay, early stop and
/// whether the current epoch is the best so far.
class DevMonitor {
 public:
  explicit DevMonitor(const TrainSchedule& schedule) : schedule_(schedule) {}

  struct Verdict {
    bool improved = false;
    bool halve_lr = false;
    bool stop = false;
  };
  Verdict observe(double dev_ll);

 private:
  const TrainSchedule& schedule_;
  double best_ = -std::numeric_limits<double>::infinity();
  unsigned stale_ = 0;
};

/// Log-likelihood and counted words of a held-out set.
struct HeldOutScore {
  double log_likelihood = 0.0;
  std::size_t words = 0;
};

/// Generic gradient-descent loop over `num_units` training units (sentences
/// or minibatches). `unit_loss` builds the loss of one unit in a fresh graph;
/// `dev_score`, if set, is evaluated after every epoch and drives decay,
/// early stopping and the best snapshot. A zero learning rate computes losses
/// without updating. Throws DivergenceError on a non-finite loss.
TrainLog train_units(ParameterCollection& params, std::size_t num_units,
                     const std::function<Expr(ComputationGraph&, std::size_t)>& unit_loss,
                     const std::function<HeldOutScore()>& dev_score, const TrainSchedule& schedule);

}  // namespace s2sw
