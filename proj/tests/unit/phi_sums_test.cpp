#include <gtest/gtest.h>

#include <cmath>

#include "invlearn/errors.hpp"
#include "invlearn/phi_sums.hpp"

using namespace invlearn;

TEST(Phi, Values) {
  EXPECT_DOUBLE_EQ(phi(1, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(phi(0, 0.5), 1.0);
  for (int j : {0, 1, 7, 1000}) EXPECT_DOUBLE_EQ(phi(j, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(phi(3, 0.5), std::sqrt(0.5 / 3.5));
  EXPECT_THROW(phi(1, 1.5), DomainError);
  EXPECT_THROW(phi(1, -0.1), DomainError);
  EXPECT_THROW(phi(-1, 0.5), DomainError);
}

TEST(PhiSum, FirstInequalityByDirectSummation) {
  const auto res = phi_sum_check(1, 10, 0.3, 0.0);
  double lhs = 0.0;
  for (int j = 1; j <= 10; ++j) lhs += std::sqrt(0.5 / (0.5 + 10 - j)) * std::pow(j, -0.3);
  const double rhs = std::beta(0.5, 0.7) * std::pow(11.0, 0.2);
  EXPECT_NEAR(res.lhs, lhs, 1e-13);
  EXPECT_NEAR(res.rhs, rhs, 1e-13);
  EXPECT_TRUE(res.pass);
}

TEST(PhiSum, FourthInequalityTrivialExponent) {
  for (int t : {2, 5, 50}) {
    const auto res = phi_sum_check(4, t, 0.0, 1.0, 0.0);
    EXPECT_DOUBLE_EQ(res.lhs, t);
    EXPECT_DOUBLE_EQ(res.rhs, t + 1.0);
    EXPECT_TRUE(res.pass);
  }
}

TEST(PhiSum, ThirdInequalitySweep) {
  for (int k = 2; k <= 200; ++k) EXPECT_TRUE(phi_sum_check(3, k, 0.5, 0.25).pass) << k;
}

TEST(PhiSum, FullSweepHasNoCounterexample) {
  int checked = 0;
  for (int k = 2; k <= 200; ++k) {
    for (double b : {0.0, 0.25, 0.5, 0.75}) {
      ASSERT_TRUE(phi_sum_check(1, k, b, 0.0).pass) << k << " " << b;
      for (double d : {0.25, 0.5, 1.0}) {
        ASSERT_TRUE(phi_sum_check(2, k, b, d).pass) << k << " " << b << " " << d;
        ASSERT_TRUE(phi_sum_check(3, k, b, d).pass) << k << " " << b << " " << d;
        checked += 2;
      }
      ++checked;
    }
    for (double d : {0.25, 0.5, 1.0}) {
      for (double v : {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0}) {
        ASSERT_TRUE(phi_sum_check(4, k, 0.0, d, v).pass) << k << " " << d << " " << v;
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 199 * (4 * 7 + 24));
}

TEST(PhiSum, ParameterErrors) {
  EXPECT_THROW(phi_sum_check(1, 1, 0.3, 0.0), DomainError);
  EXPECT_THROW(phi_sum_check(5, 10, 0.3, 0.0), DomainError);
  EXPECT_THROW(phi_sum_check(1, 10, 1.0, 0.0), DomainError);
  EXPECT_THROW(phi_sum_check(2, 10, 0.3, 0.0), DomainError);
  EXPECT_THROW(phi_sum_check(4, 10, 0.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(phi_sum_check(4, 10, 0.0, 1.0, -1.0), DomainError);
}
