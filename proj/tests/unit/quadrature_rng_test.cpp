#include <gtest/gtest.h>

#include <cmath>

#include "invlearn/errors.hpp"
#include "invlearn/quadrature.hpp"
#include "invlearn/rng.hpp"

using namespace invlearn;

TEST(Quadrature, SingleMidpoint) {
  const auto g = quadrature_grid(1);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g.nodes()[0], 0.5);
  EXPECT_DOUBLE_EQ(g.weights()[0], 1.0);
}

TEST(Quadrature, ZeroNodesIsDomainError) { EXPECT_THROW(quadrature_grid(0), DomainError); }

TEST(Quadrature, MidpointExactOnLinear) {
  for (std::size_t q : {1u, 2u, 7u, 512u}) {
    EXPECT_NEAR(quadrature_grid(q).integrate([](double s) { return s; }), 0.5, 1e-15) << q;
  }
}

TEST(Quadrature, SecondOrderConvergence) {
  for (auto rule : {QuadratureRule::midpoint, QuadratureRule::trapezoid}) {
    double prev = 0.0;
    // the trapezoid spacing is 1 / (q - 1)
    const std::size_t extra = rule == QuadratureRule::trapezoid ? 1 : 0;
    for (std::size_t q : {8u, 16u, 32u, 64u}) {
      const double err = std::abs(quadrature_grid(q + extra, rule).integrate([](double s) { return s * s; }) - 1.0 / 3.0);
      if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.3);
      prev = err;
    }
  }
}

TEST(Quadrature, GridInvariants) {
  const auto g = quadrature_grid(100, QuadratureRule::trapezoid);
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    sum += g.weights()[i];
    EXPECT_GE(g.weights()[i], 0.0);
    if (i > 0) EXPECT_GT(g.nodes()[i], g.nodes()[i - 1]);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_THROW(QuadratureGrid({0.5, 0.2}, {0.5, 0.5}), DomainError);
  EXPECT_THROW(QuadratureGrid({0.2, 0.5}, {0.5, 0.6}), DomainError);
  EXPECT_THROW(QuadratureGrid({0.2}, {0.5, 0.5}), ContractError);
}

TEST(Rng, SameSeedAndStreamAreBitIdentical) {
  RngStream a(99, 4);
  RngStream b(99, 4);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  RngStream c(99, 4);
  RngStream d(99, 4);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(c.normal(), d.normal());
}

TEST(Rng, StreamsDiffer) {
  RngStream a(99, 4);
  RngStream b(99, 5);
  RngStream c = a.child(1);
  EXPECT_NE(a.next_u64(), b.next_u64());
  EXPECT_NE(RngStream(99, 4).next_u64(), c.next_u64());
  EXPECT_NE(RngStream::key({1, 2}), RngStream::key({2, 1}));
}

TEST(Rng, Distributions) {
  RngStream rng(5, 0);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  std::size_t hits[7] = {};
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    ++hits[rng.index(7)];
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
  for (auto h : hits) EXPECT_NEAR(static_cast<double>(h) / n, 1.0 / 7.0, 0.005);
}
