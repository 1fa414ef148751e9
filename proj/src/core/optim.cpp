// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#include "optim.hpp"

#include <cmath>
#include <stdexcept>

namespace sp {

void OptimConfig::validate() const {
  if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
  if (weight_decay < 0) throw std::invalid_argument("weight_decay must be >= 0");
  if (momentum < 0 || momentum >= 1) throw std::invalid_argument("momentum must be in [0,1)");
  if (square_avg_decay <= 0 || square_avg_decay >= 1)
    throw std::invalid_argument("square_avg_decay must be in (0,1)");
  if (lr_decay_factor <= 0 || lr_decay_factor > 1)
    throw std::invalid_argument("lr_decay_factor must be in (0,1]");
  if (lr_decay_period < 1) throw std::invalid_argument("lr_decay_period must be >= 1");
}

double OptimConfig::lr_at_epoch(int epoch) const {
  double lr = learning_rate;
  for (int e = lr_decay_period; e <= epoch; e += lr_decay_period) lr *= lr_decay_factor;
  return lr;
}

Tensor& ParamSet::add(const std::string& name, Tensor init) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  auto [it, ok] = params_.emplace(name, std::move(init));
  State st;
  st.square_avg = Tensor::zeros(it->second.shape);
  st.momentum_buf = Tensor::zeros(it->second.shape);
  state_.emplace(name, std::move(st));
  return it->second;
}

Tensor& ParamSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

size_t ParamSet::total_elements() const {
  size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void ParamSet::rmsprop_step(const std::map<std::string, Tensor>& grads, const OptimConfig& cfg,
                            double lr_override) {
  cfg.validate();
  const double lr = lr_override >= 0 ? lr_override : cfg.learning_rate;
  for (auto& [name, p] : params_) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& grad = git->second;
    if (!grad.same_shape(p))
      throw std::invalid_argument("gradient shape mismatch for parameter " + name);
    State& st = state_.at(name);
    for (size_t i = 0; i < p.numel(); ++i) {
      const double g = double(grad.data[i]) + cfg.weight_decay * p.data[i];
      const double sq = cfg.square_avg_decay * st.square_avg.data[i] +
                        (1.0 - cfg.square_avg_decay) * g * g;
      st.square_avg.data[i] = float(sq);
      const double step = g / (std::sqrt(sq) + cfg.eps);
      const double buf = cfg.momentum * st.momentum_buf.data[i] + step;
      st.momentum_buf.data[i] = float(buf);
      p.data[i] = float(p.data[i] - lr * buf);
    }
  }
}

}  // namespace sp
