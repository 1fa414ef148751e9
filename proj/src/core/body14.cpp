// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#include "body14.hpp"

namespace sp {

const std::array<std::pair<int, int>, kNumLimbs>& body14_limbs() {
  static const std::array<std::pair<int, int>, kNumLimbs> limbs = {{
      {kNose, kNeck},
      {kNeck, kRShoulder},
      {kNeck, kLShoulder},
      {kRShoulder, kRElbow},
      {kLShoulder, kLElbow},
      {kRElbow, kRWrist},
      {kLElbow, kLWrist},
      {kNeck, kRHip},
      {kNeck, kLHip},
      {kRHip, kRKnee},
      {kLHip, kLKnee},
      {kRKnee, kRAnkle},
      {kLKnee, kLAnkle},
  }};
  return limbs;
}

const char* keypoint_name(int j) {
  static const char* names[kNumKeypoints] = {
      "nose",     "neck",     "r_shoulder", "l_shoulder", "r_elbow", "l_elbow", "r_wrist",
      "l_wrist",  "r_hip",    "l_hip",      "r_knee",     "l_knee",  "r_ankle", "l_ankle",
  };
  return (j >= 0 && j < kNumKeypoints) ? names[j] : "?";
}

}  // namespace sp
