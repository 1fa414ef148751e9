// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "body14.hpp"
#include "tensor.hpp"

namespace sp {

/// Joint heat maps [H,W,J]: per channel, the max over persons of a unit
/// Gaussian centered on the keypoint. Invisible keypoints contribute nothing.
Tensor render_jhm(const PoseList& poses, int H, int W, float sigma);

/// Part affinity fields [H,W,2,C]: pixels within limb_width of a limb
/// segment carry the unit vector along it; overlapping persons are averaged.
Tensor render_paf(const PoseList& poses, int H, int W, float limb_width);

/// Normalized [0,1] coordinate -> pixel coordinate (align-corners).
inline float to_px(float v, int extent) { return v * float(extent - 1); }

}  // namespace sp
