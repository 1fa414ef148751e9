// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#include "tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rng.hpp"

namespace sp {

size_t shape_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
    n *= size_t(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  data.assign(shape_numel(shape), 0.0f);
}

Tensor::Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
  if (shape_numel(shape) != data.size())
    throw std::invalid_argument("tensor data length does not match shape");
}

Tensor Tensor::full(std::vector<int> s, float v) {
  Tensor t(std::move(s));
  for (auto& x : t.data) x = v;
  return t;
}

Tensor Tensor::uniform(std::vector<int> s, Rng& rng, float lo, float hi) {
  Tensor t(std::move(s));
  for (auto& x : t.data) x = float(rng.uniform(lo, hi));
  return t;
}

namespace {
size_t flat_index(const std::vector<int>& shape, std::initializer_list<int> idx) {
  if (idx.size() != shape.size()) throw std::invalid_argument("index rank mismatch");
  size_t off = 0;
  size_t i = 0;
  for (int v : idx) {
    if (v < 0 || v >= shape[i]) throw std::out_of_range("tensor index out of range");
    off = off * size_t(shape[i]) + size_t(v);
    ++i;
  }
  return off;
}
}  // namespace

float& Tensor::at(std::initializer_list<int> idx) { return data[flat_index(shape, idx)]; }

float Tensor::at(std::initializer_list<int> idx) const { return data[flat_index(shape, idx)]; }

bool Tensor::all_finite() const {
  for (float v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::reshaped(std::vector<int> s) const {
  if (shape_numel(s) != numel()) throw std::invalid_argument("reshape changes element count");
  Tensor t;
  t.shape = std::move(s);
  t.data = data;
  return t;
}

}  // namespace sp
