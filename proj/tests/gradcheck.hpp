// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "core/graph.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace sp::testing {

// Builds a scalar loss from leaf nodes; same builder is reused for perturbed
// evaluations, so it must be a pure function of the leaf values.
using LossBuilder = std::function<int(Graph&, const std::vector<int>&)>;

inline double eval_loss(const std::vector<Tensor>& inputs, const LossBuilder& build) {
  Graph g;
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (const auto& t : inputs) ids.push_back(g.leaf(t, false));
  return g.value(build(g, ids)).data[0];
}

/// Central-difference check of reverse-mode gradients for every element of
/// every input. Returns the max relative error, with a floor of 0.1 on the
/// denominator so near-zero gradients are compared absolutely.
inline double grad_check(const std::vector<Tensor>& inputs, const LossBuilder& build,
                         float h = 1e-3f) {
  Graph g;
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (const auto& t : inputs) ids.push_back(g.leaf(t, true));
  const int loss = build(g, ids);
  g.backward(loss);
  std::vector<Tensor> analytic;
  for (int id : ids) analytic.push_back(g.grad(id));

  double max_err = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    std::vector<Tensor> probe = inputs;
    for (size_t i = 0; i < inputs[k].numel(); ++i) {
      const float orig = probe[k].data[i];
      probe[k].data[i] = orig + h;
      const double lp = eval_loss(probe, build);
      probe[k].data[i] = orig - h;
      const double lm = eval_loss(probe, build);
      probe[k].data[i] = orig;
      const double num = (lp - lm) / (2.0 * double(h));
      const double ana = analytic[k].data[i];
      const double err = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 0.1});
      if (err > max_err) max_err = err;
    }
  }
  return max_err;
}

/// Uniform values in [lo,hi] bumped away from zero, keeping ReLU/hinge kinks
/// out of the finite-difference step.
inline Tensor random_kink_free(std::vector<int> shape, Rng& rng, float lo = -1.0f,
                               float hi = 1.0f, float margin = 5e-3f) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) {
    float x = float(rng.uniform(lo, hi));
    if (std::abs(x) < margin) x = x >= 0 ? margin : -margin;
    v = x;
  }
  return t;
}

/// Random [H,W,J] tensor whose per-location channel values are separated by
/// at least `gap`, so channel_max winners are stable under perturbation.
inline Tensor random_channel_separated(int H, int W, int J, Rng& rng, float gap = 2e-2f) {
  Tensor t({H, W, J});
  std::vector<float> vals(static_cast<size_t>(J), 0.0f);
  for (int i = 0; i < H * W; ++i) {
    for (;;) {
      for (int j = 0; j < J; ++j) vals[size_t(j)] = float(rng.uniform(-1.0, 1.0));
      bool ok = true;
      for (int a = 0; a < J && ok; ++a)
        for (int b = a + 1; b < J && ok; ++b)
          if (std::abs(vals[size_t(a)] - vals[size_t(b)]) < gap) ok = false;
      if (ok) break;
    }
    for (int j = 0; j < J; ++j) t.data[size_t(i) * J + size_t(j)] = vals[size_t(j)];
  }
  return t;
}

struct GradCheckCase {
  std::string name;
  double max_rel_err;
};

/// Finite-difference sweep over every differentiable op and both training
/// losses; one entry per op per seed.
std::vector<GradCheckCase> run_gradient_checks(int num_seeds);

}  // namespace sp::testing
