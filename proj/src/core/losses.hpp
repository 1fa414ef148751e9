// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "tensor.hpp"

namespace sp {

/// Element-wise loss-weight coefficients for the two feature losses.
struct LossWeights {
  float lambda1 = 1.0f;
  float beta1 = 1.0f;
  float lambda2 = 0.3f;
  float beta2 = 0.7f;

  void validate() const;
};

/// Per-element weights lambda1*|s_gt| + beta1 over a [H,W,J] map.
Tensor jhm_weight_map(const Tensor& s_gt, const LossWeights& w);

/// Per-element weights lambda2*||l_gt(h,w,:,c)||_2 + beta2 over a [H,W,2,C]
/// field, replicated across both vector components.
Tensor paf_weight_map(const Tensor& l_gt, const LossWeights& w);

/// sum_j sum_hw alpha_hw^j (s_I - s_R)^2, weights from the visual side.
double jhm_loss(const Tensor& s_i, const Tensor& s_r, const LossWeights& w);

/// sum_c sum_hw alpha_hw^c ||l_I - l_R||^2, weights from the visual side.
double paf_loss(const Tensor& l_i, const Tensor& l_r, const LossWeights& w);

struct FrameFeatures {
  const Tensor* s_i = nullptr;
  const Tensor* s_r = nullptr;
  const Tensor* l_i = nullptr;
  const Tensor* l_r = nullptr;
};

/// Mean over sequences of the per-sequence summed JHM+PAF losses.
double total_cross_modal_loss(const std::vector<std::vector<FrameFeatures>>& sequences,
                              const LossWeights& w);

}  // namespace sp
