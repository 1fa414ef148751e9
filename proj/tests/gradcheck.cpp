// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradcheck.hpp"

#include "core/losses.hpp"

namespace sp::testing {
namespace {

// conv outputs must sit away from the downstream ReLU kink for finite
// differences to be meaningful; retry with fresh draws until they do.
bool conv_relu_inputs(Rng& rng, Tensor& x, Tensor& w, Tensor& b) {
  x = Tensor::uniform({5, 5, 2}, rng, -1.0f, 1.0f);
  w = Tensor::uniform({3, 3, 2, 3}, rng, -0.5f, 0.5f);
  b = Tensor::uniform({3}, rng, -0.2f, 0.2f);
  Graph g;
  const int y = g.conv2d(g.leaf(x), g.leaf(w), g.leaf(b), 1, 1);
  for (float v : g.value(y).data)
    if (std::abs(v) < 2e-2f) return false;
  return true;
}

}  // namespace

std::vector<GradCheckCase> run_gradient_checks(int num_seeds) {
  std::vector<GradCheckCase> results;
  // Normalize each objective to O(1): float32 central differences at h=1e-3
  // otherwise lose the small-gradient elements to rounding of the stored
  // loss. The scale is frozen from the unperturbed loss so the builder stays
  // a fixed function across perturbed evaluations.
  auto record = [&](const std::string& name, const std::vector<Tensor>& inputs,
                    const LossBuilder& build) {
    const double l0 = std::abs(eval_loss(inputs, build));
    const float c = float(1.0 / std::max(1.0, l0));
    LossBuilder scaled = [build, c](Graph& g, const std::vector<int>& in) {
      return g.scale(build(g, in), c);
    };
    results.push_back({name, grad_check(inputs, scaled)});
  };

  for (int seed = 0; seed < num_seeds; ++seed) {
    Rng rng(0x5ecu * 1000003u + uint64_t(seed));

    {
      Rng r = rng.fork("conv2d");
      record("conv2d",
             {Tensor::uniform({5, 5, 2}, r, -1, 1), Tensor::uniform({3, 3, 2, 3}, r, -1, 1),
              Tensor::uniform({3}, r, -1, 1)},
             [](Graph& g, const std::vector<int>& in) {
               return g.sum_sq(g.conv2d(in[0], in[1], in[2], 1, 1));
             });
      record("conv2d_stride2",
             {Tensor::uniform({6, 6, 2}, r, -1, 1), Tensor::uniform({3, 3, 2, 2}, r, -1, 1),
              Tensor::uniform({2}, r, -1, 1)},
             [](Graph& g, const std::vector<int>& in) {
               return g.sum_sq(g.conv2d(in[0], in[1], in[2], 2, 0));
             });
    }
    {
      Rng r = rng.fork("conv3d");
      record("conv3d",
             {Tensor::uniform({3, 4, 4, 2}, r, -1, 1),
              Tensor::uniform({3, 3, 3, 2, 2}, r, -1, 1), Tensor::uniform({2}, r, -1, 1)},
             [](Graph& g, const std::vector<int>& in) {
               return g.sum_sq(g.conv3d(in[0], in[1], in[2], 1, 1));
             });
    }
    {
      Rng r = rng.fork("upsample");
      record("bilinear_upsample2x", {Tensor::uniform({3, 3, 2}, r, -1, 1)},
             [](Graph& g, const std::vector<int>& in) {
               return g.sum_sq(g.bilinear_upsample2x(in[0]));
             });
    }
    {
      Rng r = rng.fork("bn");
      record("batch_norm",
             {Tensor::uniform({4, 4, 3}, r, -1, 1), Tensor::uniform({3}, r, 0.5f, 1.5f),
              Tensor::uniform({3}, r, -0.5f, 0.5f)},
             [](Graph& g, const std::vector<int>& in) {
               return g.sum_sq(g.batch_norm(in[0], in[1], in[2], nullptr, true));
             });
    }
    {
      Rng r = rng.fork("relu");
      record("relu", {random_kink_free({4, 4, 3}, r)},
             [](Graph& g, const std::vector<int>& in) { return g.sum_sq(g.relu(in[0])); });
    }
    {
      Rng r = rng.fork("tanh");
      record("tanh", {Tensor::uniform({4, 4, 2}, r, -2, 2)},
             [](Graph& g, const std::vector<int>& in) { return g.sum_sq(g.tanh_op(in[0])); });
    }
    {
      Rng r = rng.fork("chmax");
      record("channel_max", {random_channel_separated(4, 4, 5, r)},
             [](Graph& g, const std::vector<int>& in) {
               return g.sum_sq(g.channel_max(in[0]));
             });
    }
    {
      Rng r = rng.fork("dense");
      record("dense",
             {Tensor::uniform({8}, r, -1, 1), Tensor::uniform({8, 4}, r, -1, 1),
              Tensor::uniform({4}, r, -1, 1)},
             [](Graph& g, const std::vector<int>& in) {
               return g.sum_sq(g.dense(in[0], in[1], in[2]));
             });
    }
    {
      Rng r = rng.fork("add");
      record("add", {Tensor::uniform({3, 3}, r, -1, 1), Tensor::uniform({3, 3}, r, -1, 1)},
             [](Graph& g, const std::vector<int>& in) { return g.sum_sq(g.add(in[0], in[1])); });
    }
    {
      Rng r = rng.fork("timeops");
      record("stack_pad_slice",
             {Tensor::uniform({2, 3, 2}, r, -1, 1), Tensor::uniform({2, 3, 2}, r, -1, 1)},
             [](Graph& g, const std::vector<int>& in) {
               const int st = g.stack_time({in[0], in[1]});
               const int pd = g.replicate_pad_time(st, 1);
               return g.sum_sq(g.slice_time(pd, 1));
             });
    }
    {
      Rng r = rng.fork("sqrt");
      record("sqrt_of_sum_sq", {random_kink_free({6}, r, -1, 1, 0.1f)},
             [](Graph& g, const std::vector<int>& in) { return g.sqrt_op(g.sum_sq(in[0])); });
    }
    {
      Rng r = rng.fork("scale_sum");
      record("scale_sum", {Tensor::uniform({5}, r, -1, 1)},
             [](Graph& g, const std::vector<int>& in) {
               return g.scale(g.sum_sq(g.scale(in[0], 0.7f)), 1.3f);
             });
    }
    {
      Rng r = rng.fork("hinge");
      const float z = (seed % 2 == 0) ? 1.0f : -1.0f;
      record("hinge", {Tensor::uniform({1}, r, -0.9f, 0.9f)},
             [z](Graph& g, const std::vector<int>& in) { return g.hinge(in[0], z); });
    }
    {
      // Eq. 6 / Eq. 7 style losses with weights derived from the target side.
      Rng r = rng.fork("losses");
      LossWeights lw;
      Tensor s_gt = Tensor::uniform({5, 5, 3}, r, 0, 1);
      Tensor wj = jhm_weight_map(s_gt, lw);
      record("jhm_loss", {Tensor::uniform({5, 5, 3}, r, -1, 1)},
             [s_gt, wj](Graph& g, const std::vector<int>& in) {
               return g.weighted_sse(in[0], s_gt, wj);
             });
      Tensor l_gt = Tensor::uniform({5, 5, 2, 3}, r, -1, 1);
      Tensor wp = paf_weight_map(l_gt, lw);
      record("paf_loss", {Tensor::uniform({5, 5, 2, 3}, r, -1, 1)},
             [l_gt, wp](Graph& g, const std::vector<int>& in) {
               return g.weighted_sse(in[0], l_gt, wp);
             });
    }
    {
      // conv2d -> relu -> sum composite
      Rng r = rng.fork("composite");
      Tensor x, w, b;
      int attempts = 0;
      while (!conv_relu_inputs(r, x, w, b) && attempts < 200) ++attempts;
      record("conv_relu_sum", {x, w, b}, [](Graph& g, const std::vector<int>& in) {
        return g.sum(g.relu(g.conv2d(in[0], in[1], in[2], 1, 1)));
      });
    }
  }
  return results;
}

}  // namespace sp::testing
