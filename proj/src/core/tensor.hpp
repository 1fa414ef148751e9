// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace sp {

class Rng;

/// Dense row-major float32 tensor. Shapes are immutable after creation;
/// values are mutated only through data().
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, std::vector<float> d);

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, float v);
  static Tensor uniform(std::vector<int> s, Rng& rng, float lo, float hi);

  size_t numel() const { return data.size(); }
  int rank() const { return int(shape.size()); }
  int dim(int i) const { return shape[size_t(i)]; }

  float& at(std::initializer_list<int> idx);
  float at(std::initializer_list<int> idx) const;

  // Unchecked fast accessors for the hot paths.
  float& at3(int i, int j, int k) {
    return data[size_t((i * shape[1] + j) * shape[2] + k)];
  }
  float at3(int i, int j, int k) const {
    return data[size_t((i * shape[1] + j) * shape[2] + k)];
  }
  float& at4(int i, int j, int k, int l) {
    return data[size_t(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
  }
  float at4(int i, int j, int k, int l) const {
    return data[size_t(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  std::string shape_str() const;

  /// Returns a copy with a new shape of equal element count.
  Tensor reshaped(std::vector<int> s) const;
};

size_t shape_numel(const std::vector<int>& shape);

}  // namespace sp
