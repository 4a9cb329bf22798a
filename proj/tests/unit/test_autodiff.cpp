#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fct/attention/normalizers.hpp"
#include "fct/autodiff/gradcheck.hpp"
#include "fct/autodiff/ops.hpp"
#include "fct/autodiff/suite.hpp"
#include "fct/core/error.hpp"
#include "fct/core/rng.hpp"

namespace fct::ad {
namespace {

TEST(Tape, SumGivesAllOnesGradient) {
  Tape tape;
  Var x = tape.input(RealTensor::matrix({{1, -2}, {3, 0.5}}));
  tape.backward(sum(x));
  EXPECT_EQ(tape.grad(x), RealTensor::filled({2, 2}, 1.0));
}

TEST(Tape, LogmaxGraphMatchesModuleGradient) {
  Rng rng(1);
  RealTensor xv = rng.uniform_tensor({3, 5}, 3.0, 80.0);
  RealTensor w = rng.normal_tensor({3, 5});
  Tape tape;
  Var x = tape.input(xv);
  tape.backward(weighted_sum(logmax_rows(x), w));
  EXPECT_LT(max_abs_diff(tape.grad(x), attention::logmax_grad(xv, w, 1)), 1e-15);
}

TEST(Tape, UntouchedParameterGetsExactZero) {
  ParamStore store;
  store.add("a", RealTensor::vector({1, 2}));
  store.add("b", RealTensor::vector({3, 4}));
  Tape tape;
  Var a = tape.parameter(store, "a");
  tape.parameter(store, "b");
  tape.backward(sum(mul(a, a)));
  GradientSet g = tape.gradients(store);
  EXPECT_EQ(g.grads[0], RealTensor::vector({2, 4}));
  EXPECT_EQ(g.grads[1], RealTensor::vector({0, 0}));
}

TEST(Tape, SharedParameterAccumulatesOnce) {
  ParamStore store;
  store.add("w", RealTensor::vector({2}));
  Tape tape;
  Var w1 = tape.parameter(store, "w");
  Var w2 = tape.parameter(store, "w");
  EXPECT_EQ(w1.id(), w2.id());
  tape.backward(sum(mul(w1, w2)));
  EXPECT_EQ(tape.gradients(store).grads[0], RealTensor::vector({4}));
}

TEST(Tape, SecondBackwardIsAnError) {
  Tape tape;
  Var x = tape.input(RealTensor::vector({1}));
  Var y = sum(mul(x, x));
  tape.backward(y);
  EXPECT_THROW(tape.backward(y), std::logic_error);
}

TEST(Tape, ReplayInTestModeIsIdempotent) {
  Rng rng(2);
  Tape tape;
  tape.allow_replay(true);
  Var x = tape.input(rng.normal_tensor({4, 4}));
  Var y = sum(gelu(matmul(x, x)));
  tape.backward(y);
  RealTensor first = tape.grad(x);
  tape.backward(y);
  EXPECT_EQ(tape.grad(x), first);
}

TEST(Tape, InferenceTapeRefusesBackward) {
  Tape tape(false);
  Var x = tape.input(RealTensor::vector({1}));
  EXPECT_THROW(tape.backward(sum(x)), std::logic_error);
}

TEST(Tape, NonScalarLossRejected) {
  Tape tape;
  Var x = tape.input(RealTensor::vector({1, 2}));
  EXPECT_THROW(tape.backward(x), DimensionError);
}

TEST(Gradcheck, QuadraticIsExact) {
  auto f = [](const RealTensor& x) { return sum(mul(x, x)); };
  FdReport r = finite_diff_check(f, RealTensor::vector({1, 2}), RealTensor::vector({2, 4}), 1e-9);
  EXPECT_TRUE(r.passed) << r.max_rel_err;
  EXPECT_LT(r.max_rel_err, 1e-9);
}

TEST(Gradcheck, ConstantHasZeroGradient) {
  auto f = [](const RealTensor&) { return 3.25; };
  RealTensor g = finite_diff_gradient(f, RealTensor::vector({1, -4, 9}));
  EXPECT_EQ(g, RealTensor({3}));
}

TEST(Gradcheck, SoftmaxCrossEntropyIsProbabilitiesMinusOneHot) {
  Rng rng(3);
  RealTensor logits = rng.normal_tensor({1, 5});
  const std::size_t label = 2;
  Tape tape;
  Var z = tape.input(logits);
  tape.backward(cross_entropy(z, label));
  RealTensor p = attention::softmax(logits, 1);
  p[label] -= 1.0;
  EXPECT_LT(max_abs_diff(tape.grad(z), p), 1e-15);
  auto f = [&](const RealTensor& x) {
    Tape t(false);
    return cross_entropy(t.constant(x), label).value().item();
  };
  EXPECT_TRUE(finite_diff_check(f, logits, p, 1e-7).passed);
}

TEST(Gradcheck, FlagsNonFiniteProbes) {
  auto f = [](const RealTensor& x) { return x[0] > 1.0 ? std::nan("") : x[0]; };
  FdReport r = finite_diff_check(f, RealTensor::vector({1.0}), RealTensor::vector({1.0}), 1e-6);
  EXPECT_TRUE(r.non_finite);
}

TEST(TreeReduce, ResultIndependentOfProductionOrder) {
  Rng rng(4);
  std::vector<GradientSet> parts(13);
  for (auto& p : parts) p.grads = {rng.normal_tensor({3, 3}, 1e3), rng.normal_tensor({5}, 1e-3)};
  GradientSet forward = tree_reduce(parts);
  // Parts produced by workers in a different order land in the same slots.
  std::vector<GradientSet> slots(parts.size());
  for (std::size_t i = parts.size(); i-- > 0;) slots[i] = parts[i];
  GradientSet again = tree_reduce(slots);
  EXPECT_EQ(forward.grads[0], again.grads[0]);
  EXPECT_EQ(forward.grads[1], again.grads[1]);
  GradientSet serial = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) serial.add_inplace(parts[i]);
  EXPECT_LE(max_abs_diff(forward.grads[0], serial.grads[0]), 1e-12 * max_abs(serial.grads[0]));
}

TEST(Ops, LayerNormMatchesFiniteDifferences) {
  Rng rng(5);
  RealTensor x = rng.normal_tensor({3, 6});
  RealTensor g = rng.normal_tensor({6}), b = rng.normal_tensor({6}), w = rng.normal_tensor({3, 6});
  Tape tape;
  Var xv = tape.input(x);
  tape.backward(weighted_sum(layer_norm(xv, tape.constant(g), tape.constant(b)), w));
  auto f = [&](const RealTensor& v) {
    Tape t(false);
    return sum(mul(layer_norm(t.constant(v), t.constant(g), t.constant(b)).value(), w));
  };
  EXPECT_TRUE(finite_diff_check(f, x, tape.grad(xv), 1e-6).passed);
}

TEST(Ops, CheckFiniteNamesStage) {
  Tape tape(false);
  Var x = tape.constant(RealTensor::vector({1, std::nan("")}));
  try {
    check_finite(x, "stage3.block1.csa.attn_r");
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_EQ(e.stage(), "stage3.block1.csa.attn_r");
  }
}

TEST(Ops, PatchifyMatchesScalarLoop) {
  Rng rng(6);
  const std::size_t h = 4, w = 6, c = 2, p = 2;
  RealTensor x = rng.normal_tensor({h * w, c});
  Tape tape(false);
  RealTensor got = patchify(tape.constant(x), h, w, p).value();
  ASSERT_EQ(got.shape(), (Shape{(h / p) * (w / p), p * p * c}));
  for (std::size_t py = 0; py < h / p; ++py)
    for (std::size_t px = 0; px < w / p; ++px)
      for (std::size_t dy = 0; dy < p; ++dy)
        for (std::size_t dx = 0; dx < p; ++dx)
          for (std::size_t ch = 0; ch < c; ++ch)
            EXPECT_EQ(got.at(py * (w / p) + px, (dy * p + dx) * c + ch), x.at((py * p + dy) * w + px * p + dx, ch));
}

TEST(GradientSuite, SingleSeedPasses) {
  for (const SuiteEntry& e : gradient_suite(1)) {
    EXPECT_TRUE(e.report.passed) << e.op << " max_rel_err " << e.report.max_rel_err;
  }
}

}  // namespace
}  // namespace fct::ad
