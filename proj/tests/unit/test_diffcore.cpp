//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "confdiff/diffcore.hpp"
#include "confdiff/errors.hpp"
#include "confdiff/gradcheck.hpp"

namespace confdiff::diff {
namespace {

Tensor random_tensor(int r, int c, std::mt19937_64 &rng) {
  std::normal_distribution<double> n;
  Tensor t(r, c);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    t.data()[i] = n(rng);
  return t;
}

TEST(Tape, SquaredNormGradient) {
  Tape tape;
  Tensor x0(1, 2);
  x0 << 1, 2;
  const Var x = tape.variable(x0);
  tape.backward(sum(row_sqnorm(x)));
  EXPECT_EQ(tape.grad(x), (Tensor(1, 2) << 2, 4).finished());
}

TEST(Tape, BackwardNeedsScalarRoot) {
  Tape tape;
  const Var x = tape.variable(Tensor::Ones(2, 2));
  EXPECT_THROW(tape.backward(x), ShapeError);
}

TEST(Tape, ShapeMismatchThrows) {
  Tape tape;
  const Var a = tape.variable(Tensor::Ones(2, 3));
  const Var b = tape.variable(Tensor::Ones(2, 2));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(matmul(a, a), ShapeError);
}

TEST(Tape, LinearWeightGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(41);
  const Tensor x = random_tensor(3, 4, rng);
  ParameterStore store;
  store.add("w", random_tensor(4, 2, rng));
  store.add("b", random_tensor(1, 2, rng));
  const GradientCheckReport r = check_parameter_gradients(
      [&](Tape &tape, const ParameterStore &p) {
        return sum(linear(tape.constant(x), tape.parameter(p, "w"), tape.parameter(p, "b")));
      },
      store);
  EXPECT_TRUE(r.passed(1e-6)) << r.worst();
  // Closed form: d sum(xW + b) / dW = x^T 1.
  const auto fb = forward_backward([&](Tape &tape) {
    return sum(linear(tape.constant(x), tape.parameter(store, "w"), tape.parameter(store, "b")));
  });
  EXPECT_TRUE(fb.gradients.at("w").isApprox(x.transpose() * Tensor::Ones(3, 2)));
  EXPECT_TRUE(fb.gradients.at("b").isApprox(Tensor::Constant(1, 2, 3.0)));
}

TEST(Tape, EveryOpPassesInputGradientCheck) {
  std::mt19937_64 rng(42);
  const std::vector<int> index = {2, 0, 2, 1};
  const std::vector<Tensor> inputs = {random_tensor(3, 2, rng), random_tensor(3, 2, rng),
                                      random_tensor(2, 2, rng), random_tensor(1, 2, rng),
                                      random_tensor(3, 1, rng)};
  const GradientCheckReport r = check_input_gradients(
      [&](Tape &, std::span<const Var> v) {
        Var a = silu(add(v[0], scale(v[1], 0.7)));
        a = mul(a, sub(v[0], v[1]));
        a = add_row(matmul(a, v[2]), v[3]);
        a = mul_col(a, v[4]);
        Var g = gather_rows(a, index);
        Var s = scatter_add_rows(g, index, 3);
        const Var parts[] = {s, row_sqnorm(a)};
        return sum(row_sqnorm(concat_cols(parts)));
      },
      inputs);
  EXPECT_TRUE(r.passed(1e-6)) << r.worst();
}

TEST(Tape, GatherScatterSemantics) {
  Tape tape(false);
  Tensor a(3, 1);
  a << 1, 2, 3;
  const std::vector<int> idx = {2, 2, 0};
  EXPECT_EQ(tape.value(gather_rows(tape.constant(a), idx)), (Tensor(3, 1) << 3, 3, 1).finished());
  EXPECT_EQ(tape.value(scatter_add_rows(tape.constant(a), idx, 3)),
            (Tensor(3, 1) << 3, 0, 3).finished());
}

TEST(Adam, ZeroGradientDecaysMoments) {
  ParameterStore store;
  store.add("w", Tensor::Constant(1, 1, 2.0));
  store.at("w").first_moment.setConstant(1.0);
  store.at("w").second_moment.setConstant(1.0);
  adam_step(store, {{"w", Tensor::Zero(1, 1)}}, {});
  EXPECT_NEAR(store.value("w")(0, 0), 2.0 - 1e-3 * (0.9 / 0.1) / (std::sqrt(0.999 / 0.001) + 1e-8), 1e-12);
  EXPECT_DOUBLE_EQ(store.at("w").first_moment(0, 0), 0.9);
  EXPECT_DOUBLE_EQ(store.at("w").second_moment(0, 0), 0.999);
}

TEST(Adam, ZeroGradientFromFreshStateIsNoOp) {
  ParameterStore store;
  store.add("w", Tensor::Constant(2, 2, 3.0));
  adam_step(store, {}, {});
  EXPECT_EQ(store.value("w"), Tensor::Constant(2, 2, 3.0));
  EXPECT_EQ(store.step(), 1);
}

TEST(Adam, HandComputedBiasCorrectedTrajectory) {
  ParameterStore store;
  store.add("w", Tensor::Zero(1, 1));
  AdamOptions opt;
  opt.lr = 0.1;
  double w = 0, m = 0, v = 0;
  for (int k = 1; k <= 3; ++k) {
    adam_step(store, {{"w", Tensor::Ones(1, 1)}}, opt);
    m = 0.9 * m + 0.1;
    v = 0.999 * v + 0.001;
    const double mh = m / (1 - std::pow(0.9, k)), vh = v / (1 - std::pow(0.999, k));
    w -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(store.value("w")(0, 0), w, 1e-14) << "step " << k;
  }
  EXPECT_NEAR(w, -0.3, 1e-6);
}

TEST(Adam, ConvergesOnQuadraticBowl) {
  std::mt19937_64 rng(43);
  const Tensor target = random_tensor(1, 5, rng);
  ParameterStore store;
  store.add("w", Tensor::Zero(1, 5));
  AdamOptions opt;
  opt.lr = 0.05;
  for (int k = 0; k < 2000; ++k) {
    const auto fb = forward_backward([&](Tape &tape) {
      return sum(row_sqnorm(sub(tape.parameter(store, "w"), tape.constant(target))));
    });
    adam_step(store, fb.gradients, opt);
  }
  EXPECT_LT((store.value("w") - target).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Adam, NonFiniteGradientThrowsWithoutMutating) {
  ParameterStore store;
  store.add("a", Tensor::Ones(1, 1));
  store.add("b", Tensor::Ones(1, 1));
  Tensor bad = Tensor::Ones(1, 1);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  try {
    adam_step(store, {{"a", Tensor::Ones(1, 1)}, {"b", bad}}, {});
    FAIL() << "expected TrainingError";
  } catch (const TrainingError &e) {
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
  }
  EXPECT_EQ(store.value("a")(0, 0), 1.0);
  EXPECT_EQ(store.step(), 0);
}

TEST(ParameterStore, DuplicateNameThrows) {
  ParameterStore store;
  store.add("w", Tensor::Ones(1, 1));
  EXPECT_THROW(store.add("w", Tensor::Ones(1, 1)), InvalidInput);
  EXPECT_EQ(store.scalar_count(), 1u);
}

}  // namespace
}  // namespace confdiff::diff
