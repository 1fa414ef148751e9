// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <utility>
#include <vector>

namespace sp {

inline constexpr int kNumKeypoints = 14;  // J
inline constexpr int kNumLimbs = 13;      // C

enum Keypoint : int {
  kNose = 0,
  kNeck,
  kRShoulder,
  kLShoulder,
  kRElbow,
  kLElbow,
  kRWrist,
  kLWrist,
  kRHip,
  kLHip,
  kRKnee,
  kLKnee,
  kRAnkle,
  kLAnkle,
};

/// Body-14 skeleton: limbs as keypoint-index pairs forming one tree rooted
/// at the neck.
const std::array<std::pair<int, int>, kNumLimbs>& body14_limbs();
const char* keypoint_name(int j);

struct Vec2 {
  float x = 0.0f;
  float y = 0.0f;
};

/// One person's keypoints in normalized image coordinates [0,1]^2.
struct SkeletonPose {
  int person_id = 0;
  std::array<Vec2, kNumKeypoints> keypoints{};
  std::array<bool, kNumKeypoints> visible{};
};

using PoseList = std::vector<SkeletonPose>;

}  // namespace sp
