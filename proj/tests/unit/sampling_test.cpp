#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "invlearn/errors.hpp"
#include "invlearn/forward_model.hpp"
#include "invlearn/sampling.hpp"
#include "invlearn/tangent.hpp"

using namespace invlearn;

namespace {

ModelPtr linear_model() {
  ModelConfig c;
  c.p = 64;
  return make_model(c);
}

}  // namespace

TEST(DrawDesign, Reproducible) {
  RngStream a(5, 1);
  RngStream b(5, 1);
  const auto one = draw_design(1, a);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one, draw_design(1, b));
  EXPECT_EQ(draw_design(100, a), draw_design(100, b));
  EXPECT_THROW(draw_design(0, a), ContractError);
}

TEST(DrawDesign, LawOfLargeNumbers) {
  RngStream rng(6, 0);
  const auto xs = draw_design(100000, rng);
  double mean = 0.0;
  for (double x : xs) {
    ASSERT_GE(x, 0.0);
    ASSERT_LE(x, 1.0);
    mean += x;
  }
  EXPECT_NEAR(mean / 1e5, 0.5, 0.01);
}

TEST(Noise, CenteredWithinClt) {
  for (auto kind : {NoiseKind::uniform_bounded, NoiseKind::truncated_gaussian}) {
    const NoiseModel noise{kind, 0.3};
    RngStream rng(7, 0);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double e = noise.draw(rng);
      ASSERT_LE(std::abs(e), noise.bound());
      sum += e;
    }
    EXPECT_LE(std::abs(sum / 1e5), 3.0 * 0.3 / std::sqrt(1e5));
  }
  EXPECT_DOUBLE_EQ((NoiseModel{NoiseKind::truncated_gaussian, 0.5}.bound()), 2.0);
  EXPECT_EQ(noise_kind_from_string("uniform-bounded"), NoiseKind::uniform_bounded);
  EXPECT_THROW(noise_kind_from_string("cauchy"), ConfigError);
}

TEST(GenerateSamples, NoiselessEqualsForward) {
  const auto model = linear_model();
  RngStream rng(8, 0);
  const auto s = generate_samples(*model, model->default_truth(), NoiseModel{NoiseKind::none, 0.0}, 64, rng);
  EXPECT_EQ(s.ys, model->apply(model->default_truth(), s.xs));
  EXPECT_NO_THROW(s.validate());
}

TEST(GenerateSamples, BoundedOutputs) {
  const auto model = linear_model();
  const auto grid = quadrature_grid(512);
  const NoiseModel noise{NoiseKind::uniform_bounded, 0.2};
  const auto bc = bernstein_constants(*model, model->default_truth(), noise, grid);
  RngStream rng(9, 0);
  const auto s = generate_samples(*model, model->default_truth(), noise, 2000, rng);
  const Vector clean = model->apply(model->default_truth(), grid.nodes());
  const double sup = clean.cwiseAbs().maxCoeff();
  EXPECT_LE(s.ys.cwiseAbs().maxCoeff(), 0.2 + sup + 1e-3);
  EXPECT_DOUBLE_EQ(bc.M, std::max(0.2, sup));
  EXPECT_DOUBLE_EQ(bc.Sigma, 2.0 * bc.M);
}

TEST(GenerateSamples, SeedDeterminismAndCsvRoundTrip) {
  const auto model = linear_model();
  const NoiseModel noise{};
  RngStream a(10, 3);
  RngStream b(10, 3);
  const auto s1 = generate_samples(*model, model->default_truth(), noise, 50, a);
  const auto s2 = generate_samples(*model, model->default_truth(), noise, 50, b);
  EXPECT_EQ(s1.xs, s2.xs);
  EXPECT_EQ(s1.ys, s2.ys);
  EXPECT_EQ(s1.seed, 10u);
  EXPECT_EQ(s1.stream, 3u);

  const auto path = std::filesystem::temp_directory_path() / "invlearn_samples_test.csv";
  write_csv(s1, path);
  const auto back = read_csv(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.xs, s1.xs);
  EXPECT_EQ(back.ys, s1.ys);
  EXPECT_EQ(back.seed, s1.seed);
  EXPECT_EQ(back.stream, s1.stream);
  EXPECT_EQ(back.fingerprint, s1.fingerprint);
}

TEST(SampleSet, ValidationErrors) {
  SampleSet s;
  s.xs = {0.5, 1.5};
  s.ys = Vector::Zero(2);
  EXPECT_THROW(s.validate(), ContractError);
  s.xs = {0.5};
  EXPECT_THROW(s.validate(), ContractError);
}

class MakeTruthTest : public ::testing::Test {
 protected:
  void SetUp() override {
    model = linear_model();
    f0 = model->default_truth();
    t = sym_eig(population_T(*model, f0, grid));
  }
  ModelPtr model;
  QuadratureGrid grid = quadrature_grid(256);
  ParamVector f0;
  SpectralDecomposition t;
};

TEST_F(MakeTruthTest, ZeroSmoothness) {
  ParamVector g = ParamVector::LinSpaced(64, -1.0, 1.0);
  const auto truth = make_truth(*model, f0, 0.0, g, 0.3, grid);
  EXPECT_LE((truth.f1 - (f0 - 0.3 * g / g.norm())).norm(), 1e-12);
  EXPECT_NEAR(truth.g.norm(), 0.3, 1e-14);
}

TEST_F(MakeTruthTest, TopEigenvector) {
  const ParamVector v1 = t.eigenvectors.col(0);
  const auto truth = make_truth(*model, f0, 0.5, v1, 0.5, grid);
  EXPECT_LE((truth.f1 - (f0 - 0.5 * std::sqrt(t.eigenvalues(0)) * v1)).norm(), 1e-10);
}

TEST_F(MakeTruthTest, PseudoInverseRoundTrip) {
  RngStream rng(11, 0);
  const ParamVector g = critical_source_direction(t, rng);
  const auto truth = make_truth(*model, f0, 0.5, g, 1.0, grid);
  EXPECT_LE(((f0 - truth.f1) - apply_frac_power(truth.t_pop, 0.5, truth.g)).norm(), 1e-10 * truth.g.norm());
  // T^(-r) on the range of T
  const Vector coeff = t.eigenvectors.transpose() * (f0 - truth.f1);
  double norm2 = 0.0;
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    if (t.eigenvalues(j) > 1e-12 * t.eigenvalues(0)) norm2 += coeff(j) * coeff(j) / t.eigenvalues(j);
  }
  EXPECT_NEAR(std::sqrt(norm2), 1.0, 1e-8);
}

TEST_F(MakeTruthTest, InfeasibleSourceNorm) {
  ModelConfig c;
  c.kind = ModelKind::diffusion_pde;
  c.p = 32;
  const auto pde = make_model(c);
  const auto tp = sym_eig(population_T(*pde, pde->default_truth(), grid));
  try {
    make_truth(*pde, pde->default_truth(), 0.0, tp.eigenvectors.col(0), 50.0, grid);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "source construction infeasible: reduce D");
  }
}

TEST(Bernstein, Examples) {
  RngStream rng(12, 0);
  const auto none = verify_bernstein(NoiseModel{NoiseKind::none, 0.0}, 1.0, 2.0, 8, 1000, rng);
  EXPECT_TRUE(none.pass);
  for (const auto& mom : none.moments) EXPECT_EQ(mom.estimate, 0.0);

  const NoiseModel uni{NoiseKind::uniform_bounded, 0.2};
  const auto ok = verify_bernstein(uni, 0.2, 0.4, 8, 1000000, rng);
  EXPECT_TRUE(ok.pass);
  ASSERT_EQ(ok.moments.size(), 7u);
  EXPECT_NEAR(ok.moments[0].estimate, 0.04 / 3.0, 1e-4);

  const auto bad = verify_bernstein(uni, 0.2, 0.02, 8, 100000, rng);
  EXPECT_FALSE(bad.pass);
  EXPECT_FALSE(bad.moments[0].pass);
  EXPECT_THROW(verify_bernstein(uni, 0.2, 0.4, 1, 100, rng), DomainError);
}
