// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "core/optim.hpp"

using namespace sp;

TEST_SUITE("optim") {

TEST_CASE("config validation") {
  OptimConfig cfg;
  cfg.validate();
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = OptimConfig{};
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("lr schedule decays every period") {
  OptimConfig cfg;
  cfg.learning_rate = 1e-5;
  cfg.lr_decay_factor = 0.3;
  cfg.lr_decay_period = 5;
  CHECK(cfg.lr_at_epoch(0) == doctest::Approx(1e-5));
  CHECK(cfg.lr_at_epoch(4) == doctest::Approx(1e-5));
  CHECK(cfg.lr_at_epoch(5) == doctest::Approx(3e-6));
  CHECK(cfg.lr_at_epoch(14) == doctest::Approx(9e-7));
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  ParamSet ps;
  ps.add("w", Tensor({3}, {1.0f, -2.0f, 0.5f}));
  OptimConfig cfg;
  cfg.weight_decay = 0.0;
  cfg.momentum = 0.9;
  std::map<std::string, Tensor> grads;
  grads.emplace("w", Tensor({3}));
  ps.rmsprop_step(grads, cfg);
  CHECK(ps.get("w").data == std::vector<float>{1.0f, -2.0f, 0.5f});
}

TEST_CASE("single scalar hand-computed update") {
  // p=1, g=0.5, wd=0.01, rho=0.99, mu=0.9, lr=0.1, eps=1e-8
  ParamSet ps;
  ps.add("p", Tensor({1}, {1.0f}));
  OptimConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.01;
  cfg.momentum = 0.9;
  cfg.square_avg_decay = 0.99;
  cfg.eps = 1e-8;
  std::map<std::string, Tensor> grads;
  grads.emplace("p", Tensor({1}, {0.5f}));
  ps.rmsprop_step(grads, cfg);

  const double g = 0.5 + 0.01 * 1.0;
  const double sq = 0.01 * g * g;
  const double step = g / (std::sqrt(sq) + 1e-8);
  const double buf = step;  // momentum buffer starts at zero
  const double expect = 1.0 - 0.1 * buf;
  CHECK(std::abs(ps.get("p").data[0] - expect) < 1e-8);
  CHECK(ps.state("p").square_avg.data[0] == doctest::Approx(sq));
}

TEST_CASE("two-step momentum matches scripted oracle") {
  ParamSet ps;
  ps.add("p", Tensor({1}, {0.3f}));
  OptimConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.0;
  cfg.momentum = 0.9;
  cfg.square_avg_decay = 0.99;
  cfg.eps = 1e-8;

  // scripted reference in double precision but with float state rounding
  float p = 0.3f, sq = 0.0f, buf = 0.0f;
  for (float gv : {0.2f, -0.4f}) {
    std::map<std::string, Tensor> grads;
    grads.emplace("p", Tensor({1}, {gv}));
    ps.rmsprop_step(grads, cfg);

    const double g = gv;
    const double sqd = 0.99 * sq + 0.01 * g * g;
    sq = float(sqd);
    const double step = g / (std::sqrt(sqd) + 1e-8);
    const double bufd = 0.9 * buf + step;
    buf = float(bufd);
    p = float(p - 0.05 * bufd);
  }
  CHECK(ps.get("p").data[0] == doctest::Approx(p).epsilon(1e-7));
  CHECK(ps.state("p").momentum_buf.data[0] == doctest::Approx(buf).epsilon(1e-7));
}

TEST_CASE("gradient shape mismatch rejected") {
  ParamSet ps;
  ps.add("w", Tensor({3}));
  std::map<std::string, Tensor> grads;
  grads.emplace("w", Tensor({4}));
  OptimConfig cfg;
  CHECK_THROWS_AS(ps.rmsprop_step(grads, cfg), std::invalid_argument);
}

}  // TEST_SUITE
