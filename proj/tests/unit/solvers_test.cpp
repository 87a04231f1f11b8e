#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "invlearn/errors.hpp"
#include "invlearn/forward_model.hpp"
#include "invlearn/sampling.hpp"
#include "invlearn/solvers.hpp"
#include "invlearn/tangent.hpp"

using namespace invlearn;

namespace {

ModelPtr model_of(ModelKind kind, Eigen::Index p = 32) {
  ModelConfig c;
  c.kind = kind;
  c.p = p;
  return make_model(c);
}

struct Problem {
  ModelPtr model;
  SampleSet data;
  TruthSpec truth;
};

Problem problem(ModelKind kind, std::size_t n, std::uint64_t seed = 1) {
  Problem pr;
  pr.model = model_of(kind);
  const auto grid = quadrature_grid(256);
  const ParamVector f0 = pr.model->default_truth();
  const auto t = sym_eig(population_T(*pr.model, f0, grid));
  RngStream g_rng(seed, 99);
  const double D = kind == ModelKind::diffusion_pde ? 0.1 : 1.0;
  pr.truth = make_truth(*pr.model, f0, 0.5, critical_source_direction(t, g_rng), D, grid);
  RngStream rng(seed, 0);
  pr.data = generate_samples(*pr.model, f0, NoiseModel{}, n, rng);
  return pr;
}

/// (1 - eta s)^k, and sum_{i<k} (1 - eta s)^i eta, without cancellation.
double residual_filter(double eta, double s, double k) { return std::exp(k * std::log1p(-eta * s)); }
double spectral_filter(double eta, double s, double k) {
  if (s <= 1e-300) return k * eta;
  return -std::expm1(k * std::log1p(-eta * s)) / s;
}

}  // namespace

TEST(SolverConfig, StepCap) {
  OperatorConstants c;
  c.lip = 2.0;
  EXPECT_NO_THROW(SolverConfig(0.24, 10, c));
  try {
    SolverConfig(0.25, 10, c);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("0.25"), std::string::npos) << e.what();
  }
  EXPECT_THROW(SolverConfig(0.0, 10, c), DomainError);
  EXPECT_THROW(SolverConfig(0.1, 0, c), DomainError);
  SolverConfig ok(0.1, 10, c);
  EXPECT_THROW(ok.with_batch(0), DomainError);
  EXPECT_THROW(ok.with_record_every(0), DomainError);
}

TEST(GradientDescent, MatchesSpectralFilterOnLinearModel) {
  auto pr = problem(ModelKind::linear_integral, 300);
  const auto& model = *pr.model;
  const double eta = 0.9 * model.constants().step_cap();
  const SolverConfig cfg = SolverConfig(eta, 400, model.constants()).with_record_every(37);
  const auto run = gd_run(model, pr.data, pr.truth.f1, cfg, &pr.truth);
  ASSERT_EQ(run.status, RunStatus::completed);

  const auto ops = build_tangent(model, pr.truth.f_dagger, pr.data.xs);
  const auto& d = sym_eig(ops.t_hat);
  const Matrix jac = model.at(pr.data.xs)->jacobian(pr.truth.f_dagger);
  const Vector z = d.eigenvectors.transpose() * (jac.transpose() * pr.data.ys / static_cast<double>(pr.data.size()));
  const Vector c1 = d.eigenvectors.transpose() * pr.truth.f1;
  for (const auto& snap : run.snapshots) {
    const double k = static_cast<double>(snap.t - 1);
    Vector c(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double s = std::max(d.eigenvalues(i), 0.0);
      c(i) = residual_filter(eta, s, k) * c1(i) + spectral_filter(eta, s, k) * z(i);
    }
    EXPECT_LE((d.eigenvectors * c - snap.f).norm(), 1e-8) << snap.t;
  }
  EXPECT_EQ(run.snapshots.front().t, 1u);
  EXPECT_EQ(run.snapshots.back().t, 400u);
}

TEST(GradientDescent, RecordsAtScheduleAndLastIteration) {
  auto pr = problem(ModelKind::linear_integral, 64);
  const auto run =
      gd_run(*pr.model, pr.data, pr.truth.f1, SolverConfig(0.5, 25, pr.model->constants()).with_record_every(10));
  std::vector<std::size_t> ts;
  for (const auto& r : run.trace) ts.push_back(r.t);
  EXPECT_EQ(ts, (std::vector<std::size_t>{1, 10, 20, 25}));
  EXPECT_TRUE(std::isnan(run.trace[0].err_u0));
  EXPECT_EQ(run.final_t, 25u);
}

TEST(GradientDescent, ErrorOrderingAndContainment) {
  auto pr = problem(ModelKind::pointwise_nonlinear, 512);
  const double eta = 0.5 * pr.model->constants().step_cap();
  const auto run = gd_run(*pr.model, pr.data, pr.truth.f1, SolverConfig(eta, 30, pr.model->constants()), &pr.truth);
  const double top = pr.truth.t_pop.max_eigenvalue();
  for (const auto& r : run.trace) EXPECT_LE(r.err_u05, std::sqrt(top) * r.err_u0 + 1e-9);
  EXPECT_TRUE(run.stayed_in_ball());
  EXPECT_TRUE(run.monotone_u0());
}

TEST(GradientDescent, DivergenceIsReported) {
  auto pr = problem(ModelKind::linear_integral, 64);
  OperatorConstants loose = pr.model->constants();
  loose.lip = 1e-3;  // admits a step far beyond the true cap
  try {
    gd_run(*pr.model, pr.data, pr.truth.f1, SolverConfig(1e4, 100, loose));
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.iteration(), 1u);
    EXPECT_LT(e.iteration(), 100u);
  }
}

TEST(GradientDescent, DomainExitRejectOrProject) {
  auto pr = problem(ModelKind::diffusion_pde, 64);
  OperatorConstants loose = pr.model->constants();
  loose.lip = 1e-3;
  const auto rejected = gd_run(*pr.model, pr.data, pr.truth.f1, SolverConfig(3e3, 20, loose), &pr.truth);
  EXPECT_EQ(rejected.status, RunStatus::domain_exit);
  EXPECT_NE(rejected.message.find("a_min"), std::string::npos) << rejected.message;
  EXPECT_LT(rejected.final_t, 20u);

  const auto projected = gd_run(*pr.model, pr.data, pr.truth.f1,
                                SolverConfig(3e3, 20, loose).with_policy(DomainPolicy::project), &pr.truth);
  EXPECT_EQ(projected.status, RunStatus::completed);
  EXPECT_TRUE(pr.model->in_domain(projected.final_iterate));
}

TEST(StochasticGradient, BatchLargerThanSampleIsRejected) {
  auto pr = problem(ModelKind::linear_integral, 16);
  EXPECT_THROW(sgd_run(*pr.model, pr.data, pr.truth.f1, SolverConfig(0.5, 5, pr.model->constants()).with_batch(17)),
               DomainError);
}

TEST(StochasticGradient, SeedDeterminism) {
  auto pr = problem(ModelKind::pointwise_nonlinear, 128);
  const auto cfg = SolverConfig(0.3, 50, pr.model->constants()).with_batch(8).with_seed(5, 2);
  const auto a = sgd_run(*pr.model, pr.data, pr.truth.f1, cfg);
  const auto b = sgd_run(*pr.model, pr.data, pr.truth.f1, cfg);
  EXPECT_EQ(a.final_iterate, b.final_iterate);
  const auto c = sgd_run(*pr.model, pr.data, pr.truth.f1,
                         SolverConfig(0.3, 50, pr.model->constants()).with_batch(8).with_seed(5, 3));
  EXPECT_NE(a.final_iterate, c.final_iterate);
}

TEST(StochasticGradient, FullBatchDiffersPathwiseButAgreesInMean) {
  auto pr = problem(ModelKind::linear_integral, 100);
  const auto& model = *pr.model;
  const std::size_t n = pr.data.size();
  const SolverConfig base(0.5, 20, model.constants());
  const auto gd = gd_run(model, pr.data, pr.truth.f1, base);

  const int reps = 200;
  const Eigen::Index p = model.dim();
  Vector mean = Vector::Zero(p);
  Vector sq = Vector::Zero(p);
  int identical = 0;
  for (int r = 0; r < reps; ++r) {
    auto cfg = base;
    cfg.with_batch(n).with_seed(77, static_cast<std::uint64_t>(r));
    const ParamVector f = sgd_run(model, pr.data, pr.truth.f1, cfg).final_iterate;
    if ((f - gd.final_iterate).norm() < 1e-12) ++identical;
    mean += f;
    sq += f.cwiseProduct(f);
  }
  mean /= reps;
  const Vector var = (sq / reps - mean.cwiseProduct(mean)) * (reps / (reps - 1.0));
  EXPECT_EQ(identical, 0);
  // linear model: E[SGD iterate] equals the GD iterate at every t
  EXPECT_LE((mean - gd.final_iterate).norm(), 4.0 * std::sqrt(var.sum() / reps));
}

TEST(StochasticGradient, SingleStepIsUnbiased) {
  auto pr = problem(ModelKind::pointwise_nonlinear, 256);
  const auto& model = *pr.model;
  const double eta = 0.5;
  const auto gd = gd_run(model, pr.data, pr.truth.f1, SolverConfig(eta, 2, model.constants()));
  const int draws = 10000;
  const Eigen::Index p = model.dim();
  Vector mean = Vector::Zero(p);
  Vector sq = Vector::Zero(p);
  for (int k = 0; k < draws; ++k) {
    const auto cfg = SolverConfig(eta, 2, model.constants()).with_batch(4).with_seed(31, static_cast<std::uint64_t>(k));
    const ParamVector f = sgd_run(model, pr.data, pr.truth.f1, cfg).final_iterate;
    mean += f;
    sq += f.cwiseProduct(f);
  }
  mean /= draws;
  const Vector se = ((sq / draws - mean.cwiseProduct(mean)) / (draws - 1.0)).cwiseSqrt();
  for (Eigen::Index i = 0; i < p; ++i) EXPECT_LE(std::abs(mean(i) - gd.final_iterate(i)), 4.0 * se(i) + 1e-15) << i;
}

TEST(RunRecord, CsvAndMeta) {
  auto pr = problem(ModelKind::linear_integral, 32);
  const auto run = gd_run(*pr.model, pr.data, pr.truth.f1, SolverConfig(0.5, 5, pr.model->constants()), &pr.truth);
  const auto meta = run.meta_json();
  EXPECT_EQ(meta["status"], "completed");
  EXPECT_TRUE(meta["first_exit"].is_null());
  const auto path = std::filesystem::temp_directory_path() / "invlearn_run_test.csv";
  run.write_csv(path);
  EXPECT_TRUE(std::filesystem::exists(path));
  std::filesystem::remove(path);
}
