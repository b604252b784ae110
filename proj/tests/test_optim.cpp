#include <cmath>

#include "doctest.h"
#include "hamlearn/autodiff.hpp"
#include "hamlearn/errors.hpp"
#include "hamlearn/optim.hpp"

using namespace hamlearn;
using autodiff::Matrix;
using autodiff::Parameter;

TEST_SUITE_BEGIN("optim");

TEST_CASE("one step on f(w) = w^2 decreases f") {
  Parameter w("w", Matrix::Ones(1, 1));
  std::vector<Parameter> params;
  params.push_back(std::move(w));
  params[0].grad(0, 0) = 2.0;  // df/dw at w=1
  AdamW opt;
  opt.step(params, 0.1);
  const double v = params[0].value(0, 0);
  CHECK(v * v < 1.0);
}

TEST_CASE("zero weight decay reproduces the hand-computed Adam step") {
  // w=1, g=2, beta1=0.9, beta2=0.999, eps=1e-8, lr=0.1:
  //   m=0.2, v=0.004, m_hat=2, v_hat=4, w' = 1 - 0.1*2/(2+1e-8)
  std::vector<Parameter> params;
  params.emplace_back("w", Matrix::Ones(1, 1));
  params[0].grad(0, 0) = 2.0;
  AdamW opt;
  opt.step(params, 0.1);
  const double expected = 1.0 - 0.1 * 2.0 / (2.0 + 1e-8);
  CHECK(params[0].value(0, 0) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("decoupled decay shrinks weights even with zero gradients on later steps") {
  std::vector<Parameter> params;
  params.emplace_back("w", Matrix::Ones(1, 1));
  AdamWConfig cfg;
  cfg.weight_decay = 0.1;
  AdamW opt(cfg);
  params[0].grad(0, 0) = 0.0;
  opt.step(params, 0.5);
  CHECK(params[0].value(0, 0) == doctest::Approx(1.0 - 0.5 * 0.1).epsilon(1e-15));
}

TEST_CASE("zero gradients and zero decay leave parameters unchanged") {
  std::vector<Parameter> params;
  params.emplace_back("w", 3.25 * Matrix::Ones(2, 2));
  AdamW opt;
  opt.step(params, 0.1);
  opt.step(params, 0.1);
  CHECK((params[0].value.array() == 3.25).all());
}

TEST_CASE("AdamW converges on a quadratic") {
  std::vector<Parameter> params;
  params.emplace_back("w", 5.0 * Matrix::Ones(1, 1));
  AdamW opt;
  for (int i = 0; i < 400; ++i) {
    params[0].grad(0, 0) = 2.0 * params[0].value(0, 0);
    opt.step(params, 0.05);
  }
  CHECK(std::abs(params[0].value(0, 0)) < 1e-2);
}

TEST_CASE("learning rate ramp endpoints and midpoint") {
  CHECK(lr_schedule(0, 550) == doctest::Approx(5e-3).epsilon(1e-15));
  CHECK(lr_schedule(549, 550) == doctest::Approx(2.5e-4).epsilon(1e-15));
  // Odd total so the midpoint epoch exists exactly.
  CHECK(lr_schedule(275, 551) == doctest::Approx((5e-3 + 2.5e-4) / 2).epsilon(1e-12));
  CHECK_THROWS_AS(lr_schedule(550, 550), ContractError);
  CHECK_THROWS_AS(lr_schedule(-1, 550), ContractError);
}

TEST_SUITE_END();
