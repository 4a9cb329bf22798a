#include <gtest/gtest.h>

#include <complex>
#include <filesystem>

#include "fct/core/error.hpp"
#include "fct/core/rng.hpp"
#include "fct/core/tensor.hpp"
#include "fct/core/tensor_io.hpp"
#include "oracles.hpp"

namespace fct {
namespace {

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  RealTensor id = RealTensor::matrix({{1, 0}, {0, 1}});
  RealTensor m = RealTensor::matrix({{2.5, -1}, {7, 0.25}});
  EXPECT_EQ(matmul(id, m), m);
}

TEST(Matmul, HandExpandedTwoByTwo) {
  RealTensor a = RealTensor::matrix({{1, 2}, {3, 4}});
  RealTensor b = RealTensor::matrix({{5, 6}, {7, 8}});
  EXPECT_EQ(matmul(a, b), RealTensor::matrix({{19, 22}, {43, 50}}));
}

TEST(Matmul, RowTimesColumnOfOnesSumsLength) {
  const std::size_t k = 17;
  RealTensor out = matmul(RealTensor::filled({1, k}, 1.0), RealTensor::filled({k, 1}, 1.0));
  ASSERT_EQ(out.shape(), (Shape{1, 1}));
  EXPECT_EQ(out[0], static_cast<double>(k));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(RealTensor({2, 3}), RealTensor({4, 5}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos) << what;
    EXPECT_NE(what.find("4x5"), std::string::npos) << what;
  }
}

TEST(Matmul, TransposedVariantsAgreeWithExplicitTranspose) {
  Rng rng(3);
  RealTensor a = rng.normal_tensor({4, 6});
  RealTensor b = rng.normal_tensor({5, 6});
  RealTensor c = rng.normal_tensor({4, 3});
  EXPECT_LT(max_abs_diff(matmul_nt(a, b), oracle::matmul(a, transpose(b))), 1e-14);
  EXPECT_LT(max_abs_diff(matmul_tn(a, c), oracle::matmul(transpose(a), c)), 1e-14);
}

TEST(Matmul, AssociativeOnRandomEightByEight) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    RealTensor a = rng.normal_tensor({8, 8}), b = rng.normal_tensor({8, 8}), c = rng.normal_tensor({8, 8});
    EXPECT_LT(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))), 1e-10);
  }
}

TEST(ComplexMatmul, UnitIdentityIsNeutral) {
  Rng rng(1);
  ComplexTensor m(rng.normal_tensor({3, 4}), rng.normal_tensor({3, 4}));
  RealTensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  ComplexTensor out = complex_matmul(ComplexTensor(eye, RealTensor({3, 3})), m);
  EXPECT_EQ(out.re, m.re);
  EXPECT_EQ(out.im, m.im);
}

TEST(ComplexMatmul, ImaginaryUnitSquaredIsMinusOne) {
  ComplexTensor j(RealTensor::matrix({{0}}), RealTensor::matrix({{1}}));
  ComplexTensor out = complex_matmul(j, j);
  EXPECT_EQ(out.re[0], -1.0);
  EXPECT_EQ(out.im[0], 0.0);
}

TEST(ComplexMatmul, MatchesScalarLoopOnAllShapesUpToEight) {
  Rng rng(11);
  for (std::size_t m = 1; m <= 8; ++m)
    for (std::size_t k = 1; k <= 8; ++k)
      for (std::size_t n = 1; n <= 8; n += 3) {
        ComplexTensor a(rng.normal_tensor({m, k}), rng.normal_tensor({m, k}));
        ComplexTensor b(rng.normal_tensor({k, n}), rng.normal_tensor({k, n}));
        ComplexTensor got = complex_matmul(a, b);
        RealTensor want_re({m, n}), want_im({m, n});
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            std::complex<double> acc = 0.0;
            for (std::size_t t = 0; t < k; ++t)
              acc += std::complex<double>(a.re.at(i, t), a.im.at(i, t)) *
                     std::complex<double>(b.re.at(t, j), b.im.at(t, j));
            want_re.at(i, j) = acc.real();
            want_im.at(i, j) = acc.imag();
          }
        EXPECT_LE(relative_error(got.re, want_re), 1e-12);
        EXPECT_LE(relative_error(got.im, want_im), 1e-12);
      }
}

TEST(ComplexMatmul, MismatchedPlanesRejected) {
  EXPECT_THROW(ComplexTensor(RealTensor({2, 2}), RealTensor({2, 3})), DimensionError);
}

TEST(Elementwise, Examples) {
  EXPECT_EQ(abs(RealTensor::vector({-3, 4})), RealTensor::vector({3, 4}));
  RealTensor l = log(RealTensor::vector({1, std::exp(1.0)}));
  EXPECT_EQ(l[0], 0.0);
  EXPECT_NEAR(l[1], 1.0, 1e-15);
  EXPECT_EQ(scale(RealTensor::vector({1, 2, 3}), 0.0), RealTensor::vector({0, 0, 0}));
}

TEST(Elementwise, LogOfNonPositiveIsDomainError) {
  EXPECT_THROW(log(RealTensor::vector({1, 0})), DomainError);
  EXPECT_THROW(log(RealTensor::vector({-2})), DomainError);
}

TEST(Elementwise, OnlyScalarOrEqualShapeBroadcast) {
  RealTensor a = RealTensor::vector({1, 2, 3});
  EXPECT_EQ(add(a, RealTensor::scalar(1)), RealTensor::vector({2, 3, 4}));
  EXPECT_THROW(add(a, RealTensor::vector({1, 2})), DimensionError);
  EXPECT_THROW(mul(RealTensor({2, 3}), RealTensor({3, 2})), DimensionError);
}

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(RealTensor({2, 2}, {1, 2, 3}), DimensionError);
  EXPECT_THROW(RealTensor({2, 0}), DimensionError);
}

TEST(Rng, EqualSeedsGiveEqualStreams) {
  Rng a(2024), b(2024), c(2025);
  bool differs = false;
  for (int i = 0; i < 10000; ++i) {
    std::uint64_t va = a.next_u64();
    ASSERT_EQ(va, b.next_u64());
    differs |= va != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, ForkIsIndependentOfParentPosition) {
  Rng a(5), b(5);
  b.next_u64();
  EXPECT_EQ(a.fork(9).next_u64(), b.fork(9).next_u64());
  EXPECT_NE(a.fork(9).next_u64(), a.fork(10).next_u64());
}

TEST(Rng, NormalMomentsAreStandard) {
  Rng rng(8);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Rng, BelowStaysInRange) {
  Rng rng(4);
  std::vector<int> hits(7);
  for (int i = 0; i < 7000; ++i) ++hits.at(rng.below(7));
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(TensorIo, RoundTripsBothPrecisions) {
  Rng rng(2);
  RealTensor t = rng.normal_tensor({3, 1, 5});
  EXPECT_EQ(decode_fctt(encode_fctt(t)), t);
  RealTensor narrowed = decode_fctt(encode_fctt(t, DType::f32));
  EXPECT_LT(relative_error(narrowed, t), 1e-6);
  EXPECT_EQ(decode_fctt(encode_fctt(RealTensor::scalar(4.5))), RealTensor::scalar(4.5));
}

TEST(TensorIo, RejectsTruncatedAndForeignBytes) {
  auto bytes = encode_fctt(RealTensor::vector({1, 2, 3}));
  bytes.pop_back();
  EXPECT_THROW(decode_fctt(bytes), FormatError);
  EXPECT_THROW(decode_fctt({'N', 'O', 'P', 'E', 0, 0}), FormatError);
}

TEST(TensorIo, FileRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "fct_tensor_io_test.fctt";
  RealTensor t = RealTensor::matrix({{1, 2}, {3, 4}});
  write_fctt(path, t);
  EXPECT_EQ(read_fctt(path), t);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace fct
