// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "tensor.hpp"

namespace sp {

/// Per-channel running statistics owned by a model, updated by train-mode
/// batch norm and consumed by inference.
struct BnStats {
  Tensor running_mean;
  Tensor running_var;
  bool initialized = false;
};

/// Define-by-run reverse-mode tape. Ops execute eagerly at node creation;
/// backward() walks the tape in reverse. Node ids are indices into the tape,
/// so inputs always precede their consumers.
class Graph {
 public:
  int leaf(Tensor value, bool requires_grad = false);

  // x:[H,W,Cin] w:[k,k,Cin,Cout] b:[Cout]; cross-correlation, zero padding.
  int conv2d(int x, int w, int b, int stride, int padding);
  // x:[T,H,W,Cin] w:[kt,k,k,Cin,Cout]; uniform stride, separate time/space pad.
  int conv3d(int x, int w, int b, int stride, int pad_time, int pad_space);
  int conv3d(int x, int w, int b, int stride, int padding) {
    return conv3d(x, w, b, stride, padding, padding);
  }
  // x:[H,W,C] -> [2H,2W,C], bilinear with align-corners.
  int bilinear_upsample2x(int x);
  // Channels-last batch norm over all leading axes. stats may be null in
  // train mode (no running-average update); inference requires stats.
  int batch_norm(int x, int gamma, int beta, BnStats* stats, bool train,
                 float eps = 1e-5f, float momentum = 0.1f);
  int relu(int x);
  int tanh_op(int x);
  // x:[H,W,J] -> [H,W,1], max over the channel axis.
  int channel_max(int x);
  // x:[n] w:[n,m] b:[m] -> [m].
  int dense(int x, int w, int b);
  int add(int a, int b);
  int reshape(int x, std::vector<int> shape);
  // frames of equal shape -> [M, ...].
  int stack_time(const std::vector<int>& frames);
  int slice_time(int x, int t);
  // [T,...] -> [T+2p,...] replicating edge frames.
  int replicate_pad_time(int x, int pad);
  int sum(int x);
  int sum_sq(int x);
  int sqrt_op(int x);
  int scale(int x, float c);
  // sum_i weights_i * (x_i - target_i)^2 -> scalar.
  int weighted_sse(int x, Tensor target, Tensor weights);
  // max(0, 1 - z*s) for scalar s.
  int hinge(int s, float z);

  const Tensor& value(int id) const { return nodes_[size_t(id)].value; }
  size_t size() const { return nodes_.size(); }

  /// Reverse-mode sweep from a scalar loss. Gradients accumulate on every
  /// node that (transitively) requires grad; repeat calls accumulate.
  void backward(int loss);

  /// Gradient of the last backward() target w.r.t. this node; zeros if the
  /// node did not participate.
  Tensor grad(int id) const;

 private:
  struct Node {
    int op = 0;
    bool requires_grad = false;
    std::vector<int> inputs;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    // op attributes
    int stride = 1, pad = 0, pad2 = 0, index = 0;
    float c0 = 0.0f, c1 = 0.0f;
    bool flag = false;
    BnStats* stats = nullptr;
    Tensor aux0, aux1;            // op-specific saved context
    std::vector<int> arg_indices; // channel_max winners
  };

  int push(Node n);
  Tensor& grad_buf(int id);
  void backprop_node(int id);

  std::vector<Node> nodes_;
};

}  // namespace sp
