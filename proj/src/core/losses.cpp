// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#include "losses.hpp"

#include <cmath>
#include <stdexcept>

namespace sp {

void LossWeights::validate() const {
  if (lambda1 < 0 || beta1 < 0 || lambda2 < 0 || beta2 < 0)
    throw std::invalid_argument("loss weights must be nonnegative");
}

Tensor jhm_weight_map(const Tensor& s_gt, const LossWeights& w) {
  w.validate();
  Tensor out(s_gt.shape);
  for (size_t i = 0; i < s_gt.numel(); ++i)
    out.data[i] = w.lambda1 * std::abs(s_gt.data[i]) + w.beta1;
  return out;
}

Tensor paf_weight_map(const Tensor& l_gt, const LossWeights& w) {
  w.validate();
  if (l_gt.rank() != 4 || l_gt.shape[2] != 2)
    throw std::invalid_argument("paf_weight_map expects [H,W,2,C]");
  const int H = l_gt.shape[0], W = l_gt.shape[1], C = l_gt.shape[3];
  Tensor out(l_gt.shape);
  for (int h = 0; h < H; ++h)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        const float vx = l_gt.at4(h, x, 0, c);
        const float vy = l_gt.at4(h, x, 1, c);
        const float a = w.lambda2 * std::sqrt(vx * vx + vy * vy) + w.beta2;
        out.at4(h, x, 0, c) = a;
        out.at4(h, x, 1, c) = a;
      }
  return out;
}

double jhm_loss(const Tensor& s_i, const Tensor& s_r, const LossWeights& w) {
  if (!s_i.same_shape(s_r)) throw std::invalid_argument("jhm_loss: shape mismatch");
  w.validate();
  double acc = 0.0;
  for (size_t i = 0; i < s_i.numel(); ++i) {
    const double alpha = w.lambda1 * std::abs(s_i.data[i]) + w.beta1;
    const double d = double(s_i.data[i]) - s_r.data[i];
    acc += alpha * d * d;
  }
  return acc;
}

double paf_loss(const Tensor& l_i, const Tensor& l_r, const LossWeights& w) {
  if (!l_i.same_shape(l_r)) throw std::invalid_argument("paf_loss: shape mismatch");
  if (l_i.rank() != 4 || l_i.shape[2] != 2)
    throw std::invalid_argument("paf_loss expects [H,W,2,C]");
  w.validate();
  const int H = l_i.shape[0], W = l_i.shape[1], C = l_i.shape[3];
  double acc = 0.0;
  for (int h = 0; h < H; ++h)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        const double gx = l_i.at4(h, x, 0, c), gy = l_i.at4(h, x, 1, c);
        const double alpha = w.lambda2 * std::sqrt(gx * gx + gy * gy) + w.beta2;
        const double dx = gx - l_r.at4(h, x, 0, c);
        const double dy = gy - l_r.at4(h, x, 1, c);
        acc += alpha * (dx * dx + dy * dy);
      }
  return acc;
}

double total_cross_modal_loss(const std::vector<std::vector<FrameFeatures>>& sequences,
                              const LossWeights& w) {
  if (sequences.empty()) throw std::invalid_argument("total_cross_modal_loss: empty batch");
  double acc = 0.0;
  for (const auto& seq : sequences)
    for (const auto& f : seq)
      acc += jhm_loss(*f.s_i, *f.s_r, w) + paf_loss(*f.l_i, *f.l_r, w);
  return acc / double(sequences.size());
}

}  // namespace sp
