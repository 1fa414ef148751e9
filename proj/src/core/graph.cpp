// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#include "graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace sp {
namespace {

enum OpKind {
  kLeaf,
  kConv2d,
  kConv3d,
  kUpsample2x,
  kBatchNorm,
  kRelu,
  kTanh,
  kChannelMax,
  kDense,
  kAdd,
  kReshape,
  kStackTime,
  kSliceTime,
  kRepPadTime,
  kSum,
  kSumSq,
  kSqrt,
  kScale,
  kWeightedSse,
  kHinge,
};

int conv_out_extent(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

void check_conv_pre(int in, int k, int pad, const char* dim) {
  if (k > in + 2 * pad)
    throw std::invalid_argument(std::string("conv kernel exceeds padded input along ") + dim);
}

constexpr int kMaxChannels = 512;

}  // namespace

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

Tensor& Graph::grad_buf(int id) {
  Node& n = nodes_[size_t(id)];
  if (!n.has_grad) {
    n.grad = Tensor::zeros(n.value.shape);
    n.has_grad = true;
  }
  return n.grad;
}

Tensor Graph::grad(int id) const {
  const Node& n = nodes_[size_t(id)];
  if (n.has_grad) return n.grad;
  return Tensor::zeros(n.value.shape);
}

int Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = kLeaf;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  return push(n);
}

int Graph::conv2d(int x, int w, int b, int stride, int padding) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (xv.rank() != 3 || wv.rank() != 4)
    throw std::invalid_argument("conv2d expects input [H,W,Cin] and kernels [k,k,Cin,Cout]");
  const int H = xv.shape[0], W = xv.shape[1], Ci = xv.shape[2];
  const int kh = wv.shape[0], kw = wv.shape[1], Co = wv.shape[3];
  if (wv.shape[2] != Ci)
    throw std::invalid_argument("conv2d: kernel Cin " + std::to_string(wv.shape[2]) +
                                " does not match input channels " + std::to_string(Ci));
  if (bv.rank() != 1 || bv.shape[0] != Co)
    throw std::invalid_argument("conv2d: bias length must equal Cout");
  if (stride < 1 || padding < 0) throw std::invalid_argument("conv2d: bad stride/padding");
  if (Co > kMaxChannels) throw std::invalid_argument("conv2d: Cout too large");
  check_conv_pre(H, kh, padding, "H");
  check_conv_pre(W, kw, padding, "W");

  const int OH = conv_out_extent(H, kh, stride, padding);
  const int OW = conv_out_extent(W, kw, stride, padding);
  Tensor out({OH, OW, Co});

  const float* xp = xv.data.data();
  const float* wp = wv.data.data();
  const float* bp = bv.data.data();
  float* yp = out.data.data();

#pragma omp parallel for schedule(static)
  for (int oh = 0; oh < OH; ++oh) {
    float acc[kMaxChannels];
    for (int ow = 0; ow < OW; ++ow) {
      for (int co = 0; co < Co; ++co) acc[co] = bp[co];
      for (int k1 = 0; k1 < kh; ++k1) {
        const int ih = oh * stride - padding + k1;
        if (ih < 0 || ih >= H) continue;
        for (int k2 = 0; k2 < kw; ++k2) {
          const int iw = ow * stride - padding + k2;
          if (iw < 0 || iw >= W) continue;
          const float* xrow = xp + (size_t(ih) * W + iw) * Ci;
          const float* wrow = wp + size_t((k1 * kw + k2)) * Ci * Co;
          for (int ci = 0; ci < Ci; ++ci) {
            const float v = xrow[ci];
            const float* wc = wrow + size_t(ci) * Co;
            for (int co = 0; co < Co; ++co) acc[co] += v * wc[co];
          }
        }
      }
      std::memcpy(yp + (size_t(oh) * OW + ow) * Co, acc, size_t(Co) * sizeof(float));
    }
  }

  Node n;
  n.op = kConv2d;
  n.inputs = {x, w, b};
  n.requires_grad = nodes_[size_t(x)].requires_grad || nodes_[size_t(w)].requires_grad ||
                    nodes_[size_t(b)].requires_grad;
  n.value = std::move(out);
  n.stride = stride;
  n.pad = padding;
  return push(n);
}

int Graph::conv3d(int x, int w, int b, int stride, int pad_time, int pad_space) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (xv.rank() != 4 || wv.rank() != 5)
    throw std::invalid_argument("conv3d expects input [T,H,W,Cin] and kernels [kt,k,k,Cin,Cout]");
  const int T = xv.shape[0], H = xv.shape[1], W = xv.shape[2], Ci = xv.shape[3];
  const int kt = wv.shape[0], kh = wv.shape[1], kw = wv.shape[2], Co = wv.shape[4];
  if (wv.shape[3] != Ci)
    throw std::invalid_argument("conv3d: kernel Cin does not match input channels");
  if (bv.rank() != 1 || bv.shape[0] != Co)
    throw std::invalid_argument("conv3d: bias length must equal Cout");
  if (stride < 1 || pad_time < 0 || pad_space < 0)
    throw std::invalid_argument("conv3d: bad stride/padding");
  if (Co > kMaxChannels) throw std::invalid_argument("conv3d: Cout too large");
  check_conv_pre(T, kt, pad_time, "T");
  check_conv_pre(H, kh, pad_space, "H");
  check_conv_pre(W, kw, pad_space, "W");

  const int OT = conv_out_extent(T, kt, stride, pad_time);
  const int OH = conv_out_extent(H, kh, stride, pad_space);
  const int OW = conv_out_extent(W, kw, stride, pad_space);
  Tensor out({OT, OH, OW, Co});

  const float* xp = xv.data.data();
  const float* wp = wv.data.data();
  const float* bp = bv.data.data();
  float* yp = out.data.data();

#pragma omp parallel for schedule(static) collapse(2)
  for (int ot = 0; ot < OT; ++ot) {
    for (int oh = 0; oh < OH; ++oh) {
      float acc[kMaxChannels];
      for (int ow = 0; ow < OW; ++ow) {
        for (int co = 0; co < Co; ++co) acc[co] = bp[co];
        for (int k0 = 0; k0 < kt; ++k0) {
          const int it = ot * stride - pad_time + k0;
          if (it < 0 || it >= T) continue;
          for (int k1 = 0; k1 < kh; ++k1) {
            const int ih = oh * stride - pad_space + k1;
            if (ih < 0 || ih >= H) continue;
            for (int k2 = 0; k2 < kw; ++k2) {
              const int iw = ow * stride - pad_space + k2;
              if (iw < 0 || iw >= W) continue;
              const float* xrow = xp + ((size_t(it) * H + ih) * W + iw) * Ci;
              const float* wrow = wp + size_t(((k0 * kh + k1) * kw + k2)) * Ci * Co;
              for (int ci = 0; ci < Ci; ++ci) {
                const float v = xrow[ci];
                const float* wc = wrow + size_t(ci) * Co;
                for (int co = 0; co < Co; ++co) acc[co] += v * wc[co];
              }
            }
          }
        }
        std::memcpy(yp + ((size_t(ot) * OH + oh) * OW + ow) * Co, acc, size_t(Co) * sizeof(float));
      }
    }
  }

  Node n;
  n.op = kConv3d;
  n.inputs = {x, w, b};
  n.requires_grad = nodes_[size_t(x)].requires_grad || nodes_[size_t(w)].requires_grad ||
                    nodes_[size_t(b)].requires_grad;
  n.value = std::move(out);
  n.stride = stride;
  n.pad = pad_time;
  n.pad2 = pad_space;
  return push(n);
}

namespace {
// align-corners source coordinate for a 2x upsample
inline void up2_coord(int i, int in_dim, int& i0, int& i1, float& frac) {
  if (in_dim == 1) {
    i0 = i1 = 0;
    frac = 0.0f;
    return;
  }
  const float f = float(i) * float(in_dim - 1) / float(2 * in_dim - 1);
  i0 = int(f);
  i1 = std::min(i0 + 1, in_dim - 1);
  frac = f - float(i0);
}
}  // namespace

int Graph::bilinear_upsample2x(int x) {
  const Tensor& xv = value(x);
  if (xv.rank() != 3) throw std::invalid_argument("bilinear_upsample2x expects [H,W,C]");
  const int H = xv.shape[0], W = xv.shape[1], C = xv.shape[2];
  Tensor out({2 * H, 2 * W, C});
  const float* xp = xv.data.data();
  float* yp = out.data.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < 2 * H; ++i) {
    int r0, r1;
    float fr;
    up2_coord(i, H, r0, r1, fr);
    for (int j = 0; j < 2 * W; ++j) {
      int c0, c1;
      float fc;
      up2_coord(j, W, c0, c1, fc);
      const float* p00 = xp + (size_t(r0) * W + c0) * C;
      const float* p01 = xp + (size_t(r0) * W + c1) * C;
      const float* p10 = xp + (size_t(r1) * W + c0) * C;
      const float* p11 = xp + (size_t(r1) * W + c1) * C;
      float* od = yp + (size_t(i) * 2 * W + j) * C;
      const float w00 = (1 - fr) * (1 - fc), w01 = (1 - fr) * fc;
      const float w10 = fr * (1 - fc), w11 = fr * fc;
      for (int c = 0; c < C; ++c)
        od[c] = w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
    }
  }
  Node n;
  n.op = kUpsample2x;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = std::move(out);
  return push(n);
}

int Graph::batch_norm(int x, int gamma, int beta, BnStats* stats, bool train, float eps,
                      float momentum) {
  const Tensor& xv = value(x);
  const Tensor& gv = value(gamma);
  const Tensor& bv = value(beta);
  if (xv.rank() < 1) throw std::invalid_argument("batch_norm: empty input");
  const int C = xv.shape.back();
  if (gv.rank() != 1 || gv.shape[0] != C || bv.rank() != 1 || bv.shape[0] != C)
    throw std::invalid_argument("batch_norm: gamma/beta length must equal channel count");
  const size_t N = xv.numel() / size_t(C);

  Tensor mean({C}), inv_std({C});
  if (train) {
    Tensor var({C});
    for (int c = 0; c < C; ++c) {
      double s = 0.0;
      for (size_t i = 0; i < N; ++i) s += xv.data[i * C + c];
      const double mu = s / double(N);
      double v = 0.0;
      for (size_t i = 0; i < N; ++i) {
        const double d = xv.data[i * C + c] - mu;
        v += d * d;
      }
      mean.data[c] = float(mu);
      var.data[c] = float(v / double(N));
      inv_std.data[c] = float(1.0 / std::sqrt(v / double(N) + eps));
    }
    if (stats) {
      if (!stats->initialized) {
        stats->running_mean = mean;
        stats->running_var = var;
        stats->initialized = true;
      } else {
        for (int c = 0; c < C; ++c) {
          stats->running_mean.data[c] =
              (1 - momentum) * stats->running_mean.data[c] + momentum * mean.data[c];
          stats->running_var.data[c] =
              (1 - momentum) * stats->running_var.data[c] + momentum * var.data[c];
        }
      }
    }
  } else {
    if (!stats || !stats->initialized)
      throw std::invalid_argument("batch_norm: inference requires running statistics");
    for (int c = 0; c < C; ++c) {
      mean.data[c] = stats->running_mean.data[c];
      inv_std.data[c] = float(1.0 / std::sqrt(double(stats->running_var.data[c]) + eps));
    }
  }

  Tensor out(xv.shape);
  for (size_t i = 0; i < N; ++i) {
    const float* xr = &xv.data[i * C];
    float* yr = &out.data[i * C];
    for (int c = 0; c < C; ++c)
      yr[c] = gv.data[c] * (xr[c] - mean.data[c]) * inv_std.data[c] + bv.data[c];
  }

  Node n;
  n.op = kBatchNorm;
  n.inputs = {x, gamma, beta};
  n.requires_grad = nodes_[size_t(x)].requires_grad || nodes_[size_t(gamma)].requires_grad ||
                    nodes_[size_t(beta)].requires_grad;
  n.value = std::move(out);
  n.flag = train;
  n.aux0 = std::move(mean);
  n.aux1 = std::move(inv_std);
  return push(n);
}

int Graph::relu(int x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape);
  for (size_t i = 0; i < xv.numel(); ++i) out.data[i] = xv.data[i] > 0 ? xv.data[i] : 0.0f;
  Node n;
  n.op = kRelu;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = std::move(out);
  return push(n);
}

int Graph::tanh_op(int x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape);
  for (size_t i = 0; i < xv.numel(); ++i) out.data[i] = std::tanh(xv.data[i]);
  Node n;
  n.op = kTanh;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = std::move(out);
  return push(n);
}

int Graph::channel_max(int x) {
  const Tensor& xv = value(x);
  if (xv.rank() != 3 || xv.shape[2] < 1)
    throw std::invalid_argument("channel_max expects [H,W,J] with J >= 1");
  const int H = xv.shape[0], W = xv.shape[1], J = xv.shape[2];
  Tensor out({H, W, 1});
  std::vector<int> winners(size_t(H) * W);
  for (int i = 0; i < H * W; ++i) {
    const float* xr = &xv.data[size_t(i) * J];
    int best = 0;
    for (int j = 1; j < J; ++j)
      if (xr[j] > xr[best]) best = j;
    winners[size_t(i)] = best;
    out.data[size_t(i)] = xr[best];
  }
  Node n;
  n.op = kChannelMax;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = std::move(out);
  n.arg_indices = std::move(winners);
  return push(n);
}

int Graph::dense(int x, int w, int b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (xv.rank() != 1 || wv.rank() != 2)
    throw std::invalid_argument("dense expects input [n] and weights [n,m]");
  const int N = xv.shape[0], M = wv.shape[1];
  if (wv.shape[0] != N) throw std::invalid_argument("dense: weight rows must equal input length");
  if (bv.rank() != 1 || bv.shape[0] != M)
    throw std::invalid_argument("dense: bias length must equal output length");
  Tensor out({M});
  std::vector<double> acc(size_t(M), 0.0);
  for (int i = 0; i < N; ++i) {
    const double v = xv.data[size_t(i)];
    const float* wr = &wv.data[size_t(i) * M];
    for (int j = 0; j < M; ++j) acc[size_t(j)] += v * wr[j];
  }
  for (int j = 0; j < M; ++j) out.data[size_t(j)] = float(acc[size_t(j)] + bv.data[size_t(j)]);
  Node n;
  n.op = kDense;
  n.inputs = {x, w, b};
  n.requires_grad = nodes_[size_t(x)].requires_grad || nodes_[size_t(w)].requires_grad ||
                    nodes_[size_t(b)].requires_grad;
  n.value = std::move(out);
  return push(n);
}

int Graph::add(int a, int b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) throw std::invalid_argument("add: shape mismatch");
  Tensor out(av.shape);
  for (size_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] + bv.data[i];
  Node n;
  n.op = kAdd;
  n.inputs = {a, b};
  n.requires_grad = nodes_[size_t(a)].requires_grad || nodes_[size_t(b)].requires_grad;
  n.value = std::move(out);
  return push(n);
}

int Graph::reshape(int x, std::vector<int> shape) {
  Node n;
  n.op = kReshape;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = value(x).reshaped(std::move(shape));
  return push(n);
}

int Graph::stack_time(const std::vector<int>& frames) {
  if (frames.empty()) throw std::invalid_argument("stack_time: no frames");
  const Tensor& f0 = value(frames[0]);
  for (int id : frames)
    if (!value(id).same_shape(f0)) throw std::invalid_argument("stack_time: shape mismatch");
  std::vector<int> shape;
  shape.push_back(int(frames.size()));
  shape.insert(shape.end(), f0.shape.begin(), f0.shape.end());
  Tensor out(shape);
  const size_t stride = f0.numel();
  for (size_t t = 0; t < frames.size(); ++t)
    std::memcpy(&out.data[t * stride], value(frames[size_t(t)]).data.data(),
                stride * sizeof(float));
  Node n;
  n.op = kStackTime;
  n.inputs = frames;
  for (int id : frames) n.requires_grad = n.requires_grad || nodes_[size_t(id)].requires_grad;
  n.value = std::move(out);
  return push(n);
}

int Graph::slice_time(int x, int t) {
  const Tensor& xv = value(x);
  if (xv.rank() < 2) throw std::invalid_argument("slice_time expects rank >= 2");
  const int T = xv.shape[0];
  if (t < 0 || t >= T) throw std::invalid_argument("slice_time: index out of range");
  std::vector<int> shape(xv.shape.begin() + 1, xv.shape.end());
  Tensor out(shape);
  const size_t stride = out.numel();
  std::memcpy(out.data.data(), &xv.data[size_t(t) * stride], stride * sizeof(float));
  Node n;
  n.op = kSliceTime;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = std::move(out);
  n.index = t;
  return push(n);
}

int Graph::replicate_pad_time(int x, int pad) {
  const Tensor& xv = value(x);
  if (xv.rank() < 2 || pad < 0) throw std::invalid_argument("replicate_pad_time: bad input");
  const int T = xv.shape[0];
  std::vector<int> shape = xv.shape;
  shape[0] = T + 2 * pad;
  Tensor out(shape);
  const size_t stride = xv.numel() / size_t(T);
  for (int t = 0; t < T + 2 * pad; ++t) {
    const int src = std::clamp(t - pad, 0, T - 1);
    std::memcpy(&out.data[size_t(t) * stride], &xv.data[size_t(src) * stride],
                stride * sizeof(float));
  }
  Node n;
  n.op = kRepPadTime;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = std::move(out);
  n.pad = pad;
  return push(n);
}

int Graph::sum(int x) {
  const Tensor& xv = value(x);
  double s = 0.0;
  for (float v : xv.data) s += v;
  Node n;
  n.op = kSum;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = Tensor({1}, {float(s)});
  return push(n);
}

int Graph::sum_sq(int x) {
  const Tensor& xv = value(x);
  double s = 0.0;
  for (float v : xv.data) s += double(v) * v;
  Node n;
  n.op = kSumSq;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = Tensor({1}, {float(s)});
  return push(n);
}

int Graph::sqrt_op(int x) {
  const Tensor& xv = value(x);
  if (xv.numel() != 1) throw std::invalid_argument("sqrt_op expects a scalar");
  Node n;
  n.op = kSqrt;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = Tensor({1}, {std::sqrt(std::max(0.0f, xv.data[0]))});
  return push(n);
}

int Graph::scale(int x, float c) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape);
  for (size_t i = 0; i < xv.numel(); ++i) out.data[i] = c * xv.data[i];
  Node n;
  n.op = kScale;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = std::move(out);
  n.c0 = c;
  return push(n);
}

int Graph::weighted_sse(int x, Tensor target, Tensor weights) {
  const Tensor& xv = value(x);
  if (!xv.same_shape(target) || !xv.same_shape(weights))
    throw std::invalid_argument("weighted_sse: shape mismatch");
  double s = 0.0;
  for (size_t i = 0; i < xv.numel(); ++i) {
    const double d = double(xv.data[i]) - target.data[i];
    s += weights.data[i] * d * d;
  }
  Node n;
  n.op = kWeightedSse;
  n.inputs = {x};
  n.requires_grad = nodes_[size_t(x)].requires_grad;
  n.value = Tensor({1}, {float(s)});
  n.aux0 = std::move(target);
  n.aux1 = std::move(weights);
  return push(n);
}

int Graph::hinge(int s, float z) {
  const Tensor& sv = value(s);
  if (sv.numel() != 1) throw std::invalid_argument("hinge expects a scalar score");
  const float m = 1.0f - z * sv.data[0];
  Node n;
  n.op = kHinge;
  n.inputs = {s};
  n.requires_grad = nodes_[size_t(s)].requires_grad;
  n.value = Tensor({1}, {m > 0 ? m : 0.0f});
  n.c0 = z;
  return push(n);
}

void Graph::backward(int loss) {
  if (loss < 0 || loss >= int(nodes_.size())) throw std::invalid_argument("backward: bad node id");
  if (value(loss).numel() != 1)
    throw std::invalid_argument("backward requires a scalar loss");
  grad_buf(loss).data[0] += 1.0f;
  for (int id = loss; id >= 0; --id) {
    const Node& n = nodes_[size_t(id)];
    if (!n.has_grad || !n.requires_grad || n.op == kLeaf) continue;
    backprop_node(id);
  }
}

void Graph::backprop_node(int id) {
  Node& n = nodes_[size_t(id)];
  const Tensor& g = n.grad;
  switch (n.op) {
    case kConv2d: {
      const Tensor& xv = value(n.inputs[0]);
      const Tensor& wv = value(n.inputs[1]);
      const int H = xv.shape[0], W = xv.shape[1], Ci = xv.shape[2];
      const int kh = wv.shape[0], kw = wv.shape[1], Co = wv.shape[3];
      const int OH = n.value.shape[0], OW = n.value.shape[1];
      const int s = n.stride, p = n.pad;
      if (nodes_[size_t(n.inputs[2])].requires_grad) {
        Tensor& db = grad_buf(n.inputs[2]);
        for (int oh = 0; oh < OH; ++oh)
          for (int ow = 0; ow < OW; ++ow) {
            const float* gr = &g.data[(size_t(oh) * OW + ow) * Co];
            for (int co = 0; co < Co; ++co) db.data[size_t(co)] += gr[co];
          }
      }
      if (nodes_[size_t(n.inputs[1])].requires_grad) {
        Tensor& dw = grad_buf(n.inputs[1]);
        float* dwp = dw.data.data();
        const float* xp = xv.data.data();
        const float* gp = g.data.data();
#pragma omp parallel for schedule(static)
        for (int kk = 0; kk < kh * kw; ++kk) {
          const int k1 = kk / kw, k2 = kk % kw;
          float* dwrow = dwp + size_t(kk) * Ci * Co;
          for (int oh = 0; oh < OH; ++oh) {
            const int ih = oh * s - p + k1;
            if (ih < 0 || ih >= H) continue;
            for (int ow = 0; ow < OW; ++ow) {
              const int iw = ow * s - p + k2;
              if (iw < 0 || iw >= W) continue;
              const float* xrow = xp + (size_t(ih) * W + iw) * Ci;
              const float* gr = gp + (size_t(oh) * OW + ow) * Co;
              for (int ci = 0; ci < Ci; ++ci) {
                const float v = xrow[ci];
                float* drow = dwrow + size_t(ci) * Co;
                for (int co = 0; co < Co; ++co) drow[co] += v * gr[co];
              }
            }
          }
        }
      }
      if (nodes_[size_t(n.inputs[0])].requires_grad) {
        Tensor& dx = grad_buf(n.inputs[0]);
        float* dxp = dx.data.data();
        const float* wp = wv.data.data();
        const float* gp = g.data.data();
#pragma omp parallel for schedule(static)
        for (int ih = 0; ih < H; ++ih) {
          for (int k1 = 0; k1 < kh; ++k1) {
            const int num = ih + p - k1;
            if (num < 0 || num % s != 0) continue;
            const int oh = num / s;
            if (oh >= OH) continue;
            for (int iw = 0; iw < W; ++iw) {
              float* dxrow = dxp + (size_t(ih) * W + iw) * Ci;
              for (int k2 = 0; k2 < kw; ++k2) {
                const int num2 = iw + p - k2;
                if (num2 < 0 || num2 % s != 0) continue;
                const int ow = num2 / s;
                if (ow >= OW) continue;
                const float* gr = gp + (size_t(oh) * OW + ow) * Co;
                const float* wrow = wp + size_t((k1 * kw + k2)) * Ci * Co;
                for (int ci = 0; ci < Ci; ++ci) {
                  const float* wc = wrow + size_t(ci) * Co;
                  float acc = 0.0f;
                  for (int co = 0; co < Co; ++co) acc += wc[co] * gr[co];
                  dxrow[ci] += acc;
                }
              }
            }
          }
        }
      }
      break;
    }
    case kConv3d: {
      const Tensor& xv = value(n.inputs[0]);
      const Tensor& wv = value(n.inputs[1]);
      const int T = xv.shape[0], H = xv.shape[1], W = xv.shape[2], Ci = xv.shape[3];
      const int kt = wv.shape[0], kh = wv.shape[1], kw = wv.shape[2], Co = wv.shape[4];
      const int OT = n.value.shape[0], OH = n.value.shape[1], OW = n.value.shape[2];
      const int s = n.stride, pt = n.pad, ps = n.pad2;
      if (nodes_[size_t(n.inputs[2])].requires_grad) {
        Tensor& db = grad_buf(n.inputs[2]);
        const size_t cells = g.numel() / size_t(Co);
        for (size_t i = 0; i < cells; ++i) {
          const float* gr = &g.data[i * Co];
          for (int co = 0; co < Co; ++co) db.data[size_t(co)] += gr[co];
        }
      }
      if (nodes_[size_t(n.inputs[1])].requires_grad) {
        Tensor& dw = grad_buf(n.inputs[1]);
        float* dwp = dw.data.data();
        const float* xp = xv.data.data();
        const float* gp = g.data.data();
#pragma omp parallel for schedule(static)
        for (int kk = 0; kk < kt * kh * kw; ++kk) {
          const int k0 = kk / (kh * kw), k1 = (kk / kw) % kh, k2 = kk % kw;
          float* dwrow = dwp + size_t(kk) * Ci * Co;
          for (int ot = 0; ot < OT; ++ot) {
            const int it = ot * s - pt + k0;
            if (it < 0 || it >= T) continue;
            for (int oh = 0; oh < OH; ++oh) {
              const int ih = oh * s - ps + k1;
              if (ih < 0 || ih >= H) continue;
              for (int ow = 0; ow < OW; ++ow) {
                const int iw = ow * s - ps + k2;
                if (iw < 0 || iw >= W) continue;
                const float* xrow = xp + ((size_t(it) * H + ih) * W + iw) * Ci;
                const float* gr = gp + ((size_t(ot) * OH + oh) * OW + ow) * Co;
                for (int ci = 0; ci < Ci; ++ci) {
                  const float v = xrow[ci];
                  float* drow = dwrow + size_t(ci) * Co;
                  for (int co = 0; co < Co; ++co) drow[co] += v * gr[co];
                }
              }
            }
          }
        }
      }
      if (nodes_[size_t(n.inputs[0])].requires_grad) {
        Tensor& dx = grad_buf(n.inputs[0]);
        float* dxp = dx.data.data();
        const float* wp = wv.data.data();
        const float* gp = g.data.data();
#pragma omp parallel for schedule(static)
        for (int it = 0; it < T; ++it) {
          for (int k0 = 0; k0 < kt; ++k0) {
            const int numt = it + pt - k0;
            if (numt < 0 || numt % s != 0) continue;
            const int ot = numt / s;
            if (ot >= OT) continue;
            for (int ih = 0; ih < H; ++ih) {
              for (int k1 = 0; k1 < kh; ++k1) {
                const int num = ih + ps - k1;
                if (num < 0 || num % s != 0) continue;
                const int oh = num / s;
                if (oh >= OH) continue;
                for (int iw = 0; iw < W; ++iw) {
                  float* dxrow = dxp + ((size_t(it) * H + ih) * W + iw) * Ci;
                  for (int k2 = 0; k2 < kw; ++k2) {
                    const int num2 = iw + ps - k2;
                    if (num2 < 0 || num2 % s != 0) continue;
                    const int ow = num2 / s;
                    if (ow >= OW) continue;
                    const float* gr = gp + ((size_t(ot) * OH + oh) * OW + ow) * Co;
                    const float* wrow = wp + size_t(((k0 * kh + k1) * kw + k2)) * Ci * Co;
                    for (int ci = 0; ci < Ci; ++ci) {
                      const float* wc = wrow + size_t(ci) * Co;
                      float acc = 0.0f;
                      for (int co = 0; co < Co; ++co) acc += wc[co] * gr[co];
                      dxrow[ci] += acc;
                    }
                  }
                }
              }
            }
          }
        }
      }
      break;
    }
    case kUpsample2x: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      const Tensor& xv = value(n.inputs[0]);
      const int H = xv.shape[0], W = xv.shape[1], C = xv.shape[2];
      Tensor& dx = grad_buf(n.inputs[0]);
      for (int i = 0; i < 2 * H; ++i) {
        int r0, r1;
        float fr;
        up2_coord(i, H, r0, r1, fr);
        for (int j = 0; j < 2 * W; ++j) {
          int c0, c1;
          float fc;
          up2_coord(j, W, c0, c1, fc);
          const float* gr = &g.data[(size_t(i) * 2 * W + j) * C];
          const float w00 = (1 - fr) * (1 - fc), w01 = (1 - fr) * fc;
          const float w10 = fr * (1 - fc), w11 = fr * fc;
          float* d00 = &dx.data[(size_t(r0) * W + c0) * C];
          float* d01 = &dx.data[(size_t(r0) * W + c1) * C];
          float* d10 = &dx.data[(size_t(r1) * W + c0) * C];
          float* d11 = &dx.data[(size_t(r1) * W + c1) * C];
          for (int c = 0; c < C; ++c) {
            d00[c] += w00 * gr[c];
            d01[c] += w01 * gr[c];
            d10[c] += w10 * gr[c];
            d11[c] += w11 * gr[c];
          }
        }
      }
      break;
    }
    case kBatchNorm: {
      const Tensor& xv = value(n.inputs[0]);
      const Tensor& gv = value(n.inputs[1]);
      const int C = xv.shape.back();
      const size_t N = xv.numel() / size_t(C);
      const Tensor& mean = n.aux0;
      const Tensor& inv = n.aux1;
      const bool train = n.flag;
      const bool need_dx = nodes_[size_t(n.inputs[0])].requires_grad;
      const bool need_dg = nodes_[size_t(n.inputs[1])].requires_grad;
      const bool need_db = nodes_[size_t(n.inputs[2])].requires_grad;
      std::vector<double> s1(size_t(C), 0.0), s2(size_t(C), 0.0);
      for (size_t i = 0; i < N; ++i) {
        const float* xr = &xv.data[i * C];
        const float* gr = &g.data[i * C];
        for (int c = 0; c < C; ++c) {
          const double xh = (xr[c] - mean.data[c]) * inv.data[c];
          s1[size_t(c)] += gr[c];
          s2[size_t(c)] += gr[c] * xh;
        }
      }
      if (need_db) {
        Tensor& db = grad_buf(n.inputs[2]);
        for (int c = 0; c < C; ++c) db.data[size_t(c)] += float(s1[size_t(c)]);
      }
      if (need_dg) {
        Tensor& dg = grad_buf(n.inputs[1]);
        for (int c = 0; c < C; ++c) dg.data[size_t(c)] += float(s2[size_t(c)]);
      }
      if (need_dx) {
        Tensor& dx = grad_buf(n.inputs[0]);
        if (train) {
          for (size_t i = 0; i < N; ++i) {
            const float* xr = &xv.data[i * C];
            const float* gr = &g.data[i * C];
            float* dr = &dx.data[i * C];
            for (int c = 0; c < C; ++c) {
              const double xh = (xr[c] - mean.data[c]) * inv.data[c];
              const double term = double(gr[c]) - s1[size_t(c)] / double(N) -
                                  xh * s2[size_t(c)] / double(N);
              dr[c] += float(double(gv.data[c]) * inv.data[c] * term);
            }
          }
        } else {
          for (size_t i = 0; i < N; ++i) {
            const float* gr = &g.data[i * C];
            float* dr = &dx.data[i * C];
            for (int c = 0; c < C; ++c) dr[c] += gv.data[c] * inv.data[c] * gr[c];
          }
        }
      }
      break;
    }
    case kRelu: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      const Tensor& xv = value(n.inputs[0]);
      Tensor& dx = grad_buf(n.inputs[0]);
      for (size_t i = 0; i < xv.numel(); ++i)
        if (xv.data[i] > 0) dx.data[i] += g.data[i];
      break;
    }
    case kTanh: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      Tensor& dx = grad_buf(n.inputs[0]);
      for (size_t i = 0; i < n.value.numel(); ++i) {
        const float y = n.value.data[i];
        dx.data[i] += (1.0f - y * y) * g.data[i];
      }
      break;
    }
    case kChannelMax: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      const Tensor& xv = value(n.inputs[0]);
      const int J = xv.shape[2];
      Tensor& dx = grad_buf(n.inputs[0]);
      for (size_t i = 0; i < n.arg_indices.size(); ++i)
        dx.data[i * size_t(J) + size_t(n.arg_indices[i])] += g.data[i];
      break;
    }
    case kDense: {
      const Tensor& xv = value(n.inputs[0]);
      const Tensor& wv = value(n.inputs[1]);
      const int N = xv.shape[0], M = wv.shape[1];
      if (nodes_[size_t(n.inputs[2])].requires_grad) {
        Tensor& db = grad_buf(n.inputs[2]);
        for (int j = 0; j < M; ++j) db.data[size_t(j)] += g.data[size_t(j)];
      }
      if (nodes_[size_t(n.inputs[1])].requires_grad) {
        Tensor& dw = grad_buf(n.inputs[1]);
        for (int i = 0; i < N; ++i) {
          const float v = xv.data[size_t(i)];
          float* dr = &dw.data[size_t(i) * M];
          for (int j = 0; j < M; ++j) dr[j] += v * g.data[size_t(j)];
        }
      }
      if (nodes_[size_t(n.inputs[0])].requires_grad) {
        Tensor& dx = grad_buf(n.inputs[0]);
        for (int i = 0; i < N; ++i) {
          const float* wr = &wv.data[size_t(i) * M];
          float acc = 0.0f;
          for (int j = 0; j < M; ++j) acc += wr[j] * g.data[size_t(j)];
          dx.data[size_t(i)] += acc;
        }
      }
      break;
    }
    case kAdd: {
      for (int k = 0; k < 2; ++k) {
        if (!nodes_[size_t(n.inputs[size_t(k)])].requires_grad) continue;
        Tensor& d = grad_buf(n.inputs[size_t(k)]);
        for (size_t i = 0; i < g.numel(); ++i) d.data[i] += g.data[i];
      }
      break;
    }
    case kReshape: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      Tensor& dx = grad_buf(n.inputs[0]);
      for (size_t i = 0; i < g.numel(); ++i) dx.data[i] += g.data[i];
      break;
    }
    case kStackTime: {
      const size_t stride = g.numel() / n.inputs.size();
      for (size_t t = 0; t < n.inputs.size(); ++t) {
        if (!nodes_[size_t(n.inputs[t])].requires_grad) continue;
        Tensor& d = grad_buf(n.inputs[t]);
        for (size_t i = 0; i < stride; ++i) d.data[i] += g.data[t * stride + i];
      }
      break;
    }
    case kSliceTime: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      Tensor& dx = grad_buf(n.inputs[0]);
      const size_t stride = g.numel();
      for (size_t i = 0; i < stride; ++i) dx.data[size_t(n.index) * stride + i] += g.data[i];
      break;
    }
    case kRepPadTime: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      const Tensor& xv = value(n.inputs[0]);
      const int T = xv.shape[0];
      const int pad = n.pad;
      Tensor& dx = grad_buf(n.inputs[0]);
      const size_t stride = xv.numel() / size_t(T);
      for (int t = 0; t < T + 2 * pad; ++t) {
        const int src = std::clamp(t - pad, 0, T - 1);
        const float* gr = &g.data[size_t(t) * stride];
        float* dr = &dx.data[size_t(src) * stride];
        for (size_t i = 0; i < stride; ++i) dr[i] += gr[i];
      }
      break;
    }
    case kSum: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      Tensor& dx = grad_buf(n.inputs[0]);
      const float gv = g.data[0];
      for (size_t i = 0; i < dx.numel(); ++i) dx.data[i] += gv;
      break;
    }
    case kSumSq: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      const Tensor& xv = value(n.inputs[0]);
      Tensor& dx = grad_buf(n.inputs[0]);
      const float gv = g.data[0];
      for (size_t i = 0; i < dx.numel(); ++i) dx.data[i] += 2.0f * xv.data[i] * gv;
      break;
    }
    case kSqrt: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      Tensor& dx = grad_buf(n.inputs[0]);
      const float y = n.value.data[0];
      if (y > 0) dx.data[0] += g.data[0] / (2.0f * y);
      break;
    }
    case kScale: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      Tensor& dx = grad_buf(n.inputs[0]);
      for (size_t i = 0; i < g.numel(); ++i) dx.data[i] += n.c0 * g.data[i];
      break;
    }
    case kWeightedSse: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      const Tensor& xv = value(n.inputs[0]);
      Tensor& dx = grad_buf(n.inputs[0]);
      const float gv = g.data[0];
      for (size_t i = 0; i < xv.numel(); ++i)
        dx.data[i] += 2.0f * n.aux1.data[i] * (xv.data[i] - n.aux0.data[i]) * gv;
      break;
    }
    case kHinge: {
      if (!nodes_[size_t(n.inputs[0])].requires_grad) break;
      if (n.value.data[0] > 0) grad_buf(n.inputs[0]).data[0] += -n.c0 * g.data[0];
      break;
    }
    default:
      throw std::logic_error("backprop_node: unhandled op");
  }
}

}  // namespace sp
