// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#include "render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sp {

Tensor render_jhm(const PoseList& poses, int H, int W, float sigma) {
  if (sigma <= 0) throw std::invalid_argument("render_jhm: sigma must be > 0");
  Tensor out({H, W, kNumKeypoints});
  const float inv2s2 = 1.0f / (2.0f * sigma * sigma);
  const int radius = int(std::ceil(4.5f * sigma));
  for (const auto& pose : poses) {
    for (int j = 0; j < kNumKeypoints; ++j) {
      if (!pose.visible[size_t(j)]) continue;
      const float px = to_px(pose.keypoints[size_t(j)].x, W);
      const float py = to_px(pose.keypoints[size_t(j)].y, H);
      const int h0 = std::max(0, int(std::floor(py)) - radius);
      const int h1 = std::min(H - 1, int(std::ceil(py)) + radius);
      const int w0 = std::max(0, int(std::floor(px)) - radius);
      const int w1 = std::min(W - 1, int(std::ceil(px)) + radius);
      for (int h = h0; h <= h1; ++h) {
        for (int w = w0; w <= w1; ++w) {
          const float dy = float(h) - py;
          const float dx = float(w) - px;
          const float v = std::exp(-(dx * dx + dy * dy) * inv2s2);
          float& cell = out.at3(h, w, j);
          if (v > cell) cell = v;
        }
      }
    }
  }
  return out;
}

Tensor render_paf(const PoseList& poses, int H, int W, float limb_width) {
  if (limb_width <= 0) throw std::invalid_argument("render_paf: limb_width must be > 0");
  Tensor out({H, W, 2, kNumLimbs});
  Tensor counts({H, W, kNumLimbs});
  const auto& limbs = body14_limbs();
  for (const auto& pose : poses) {
    for (int c = 0; c < kNumLimbs; ++c) {
      const auto [ja, jb] = limbs[size_t(c)];
      if (!pose.visible[size_t(ja)] || !pose.visible[size_t(jb)]) continue;
      const float ax = to_px(pose.keypoints[size_t(ja)].x, W);
      const float ay = to_px(pose.keypoints[size_t(ja)].y, H);
      const float bx = to_px(pose.keypoints[size_t(jb)].x, W);
      const float by = to_px(pose.keypoints[size_t(jb)].y, H);
      const float dx = bx - ax, dy = by - ay;
      const float len = std::sqrt(dx * dx + dy * dy);
      if (len < 1e-6f) continue;  // degenerate limb contributes nothing
      const float ux = dx / len, uy = dy / len;
      const int h0 = std::max(0, int(std::floor(std::min(ay, by) - limb_width)));
      const int h1 = std::min(H - 1, int(std::ceil(std::max(ay, by) + limb_width)));
      const int w0 = std::max(0, int(std::floor(std::min(ax, bx) - limb_width)));
      const int w1 = std::min(W - 1, int(std::ceil(std::max(ax, bx) + limb_width)));
      for (int h = h0; h <= h1; ++h) {
        for (int w = w0; w <= w1; ++w) {
          // distance from the pixel to the limb segment
          const float rx = float(w) - ax, ry = float(h) - ay;
          const float along = std::clamp(rx * ux + ry * uy, 0.0f, len);
          const float ex = rx - along * ux, ey = ry - along * uy;
          if (ex * ex + ey * ey > limb_width * limb_width) continue;
          out.at4(h, w, 0, c) += ux;
          out.at4(h, w, 1, c) += uy;
          counts.at3(h, w, c) += 1.0f;
        }
      }
    }
  }
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w)
      for (int c = 0; c < kNumLimbs; ++c) {
        const float n = counts.at3(h, w, c);
        if (n > 1.0f) {
          out.at4(h, w, 0, c) /= n;
          out.at4(h, w, 1, c) /= n;
        }
      }
  return out;
}

}  // namespace sp
