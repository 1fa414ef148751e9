// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include "tensor.hpp"

namespace sp {

/// RMSprop hyperparameters. lr decays by lr_decay_factor after every
/// lr_decay_period epochs.
struct OptimConfig {
  double learning_rate = 1e-4;
  double weight_decay = 0.0;
  double momentum = 0.0;
  double square_avg_decay = 0.99;
  double lr_decay_factor = 1.0;
  int lr_decay_period = 5;
  double eps = 1e-8;

  void validate() const;
  /// Effective learning rate for a 0-based epoch index.
  double lr_at_epoch(int epoch) const;
};

/// Named trainable tensors together with their RMSprop state.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor init);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  const std::map<std::string, Tensor>& tensors() const { return params_; }
  std::map<std::string, Tensor>& tensors() { return params_; }
  size_t total_elements() const;

  struct State {
    Tensor square_avg;
    Tensor momentum_buf;
  };
  const State& state(const std::string& name) const { return state_.at(name); }

  /// One RMSprop update with momentum; weight decay is added into the
  /// gradient (grad + wd * param). Parameters without a gradient entry are
  /// left untouched. `lr_override`, when >= 0, replaces cfg.learning_rate
  /// (used by the epoch schedule).
  void rmsprop_step(const std::map<std::string, Tensor>& grads, const OptimConfig& cfg,
                    double lr_override = -1.0);

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, State> state_;
};

}  // namespace sp
