#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "invlearn/errors.hpp"
#include "invlearn/harness/config.hpp"
#include "invlearn/harness/report.hpp"
#include "invlearn/harness/study.hpp"
#include "invlearn/schedule.hpp"

using namespace invlearn;
using namespace invlearn::harness;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const json& j) {
  try {
    parse_config_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

/// Small, fast GD configuration.
ExperimentConfig small_config() {
  ExperimentConfig c = sample_config();
  c.model.p = 48;
  c.n_grid = {128, 256, 512, 1024};
  c.replicates = 10;
  c.quadrature_nodes = 256;
  c.seed = 4242;
  return c;
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

TEST(Config, RoundTrip) {
  const auto c = sample_config();
  const json j = to_json(c);
  EXPECT_EQ(to_json(parse_config_json(j)), j);

  TempDir dir("invlearn_config_test");
  std::filesystem::create_directories(dir.path());
  std::ofstream(dir.path() / "c.json") << j.dump();
  EXPECT_EQ(to_json(parse_config(dir.path() / "c.json")), j);
}

TEST(Config, SchemaErrorsNameTheKey) {
  json j = to_json(sample_config());
  j.erase("eta");
  EXPECT_NE(config_error(j).find("'eta'"), std::string::npos);

  j = to_json(sample_config());
  j["replicates"] = "fifty";
  EXPECT_NE(config_error(j).find("config key 'replicates': expected"), std::string::npos) << config_error(j);

  j = to_json(sample_config());
  j["model"]["p"] = 1.5;
  EXPECT_NE(config_error(j).find("'model.p'"), std::string::npos) << config_error(j);

  j = to_json(sample_config());
  j["colour"] = "blue";
  EXPECT_NE(config_error(j).find("colour"), std::string::npos);

  j = to_json(sample_config());
  j["n_grid"] = json::array({512, 256, 1024, 2048});
  EXPECT_FALSE(config_error(j).empty());

  EXPECT_THROW(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, StepAboveCapPrintsTheCap) {
  json j = to_json(sample_config());
  j["eta"] = 1.5;  // the linear model has kappa1 = 1
  const std::string msg = config_error(j);
  EXPECT_NE(msg.find("1/kappa1^2 = 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("1.5"), std::string::npos) << msg;
}

TEST(Config, SgdNeedsScheduleOrExplicitTriple) {
  json j = to_json(sample_config());
  j["solver"] = "sgd";
  j.erase("eta");
  EXPECT_FALSE(config_error(j).empty());
  j["cases"] = json::array({"b", "c"});
  EXPECT_TRUE(config_error(j).empty()) << config_error(j);
}

TEST(Exponents, FormulaArithmetic) {
  EXPECT_NEAR(gd_rate_exponent(0.5, 0.5, 0.0), 0.2, 1e-15);
  EXPECT_NEAR(gd_rate_exponent(0.5, 0.5, 0.5), 0.4, 1e-15);
  EXPECT_NEAR(gd_rate_exponent(2.0, 0.5, 0.0), 0.2, 1e-15);  // saturates at r = 1/2
  EXPECT_NEAR(sgd_rate_exponent(0.5, 0.5, 0.0), 1.0 / 2.5, 1e-15);
  EXPECT_NEAR(sgd_rate_exponent(0.25, 0.5, 0.5), 1.5 / 2.0, 1e-15);
}

TEST(Schedule, StoppingTime) {
  // n^(1/(q+nu+1)) / eta with q = 1, nu = 1/2: 1024^(0.4) = 16
  EXPECT_EQ(stopping_time(1024, 0.5, 0.5, 1.0), 16u);
  EXPECT_EQ(stopping_time(1024, 0.5, 0.5, 0.25), 64u);
  EXPECT_EQ(stopping_time(1, 0.5, 0.5, 0.9), 1u);
  EXPECT_EQ(saturated_smoothness(0.25), 0.5);
  EXPECT_EQ(saturated_smoothness(3.0), 1.0);
}

TEST(Schedule, PresetPassesAtN1024) {
  const std::size_t n = 1024;
  const std::size_t expected[] = {256, 4, 16, 16};
  const ScheduleCase cases[] = {ScheduleCase::a, ScheduleCase::b, ScheduleCase::c, ScheduleCase::d};
  for (int i = 0; i < 4; ++i) {
    const auto p = schedule_preset(cases[i], n, 0.5, 0.5, 1.0);
    EXPECT_EQ(p.passes, expected[i]) << to_string(cases[i]);
    EXPECT_LT(p.eta, 1.0);
    // batch condition at the horizon, with the asymptotic slack of a factor 2
    EXPECT_LE(min_batch_bound(p.eta, static_cast<double>(p.t_max), 0.5, 0.5), 2.0 * static_cast<double>(p.batch))
        << to_string(cases[i]);
    EXPECT_EQ(schedule_case_from_string(to_string(cases[i])), cases[i]);
  }
  EXPECT_EQ(schedule_preset(ScheduleCase::c, n, 0.5, 0.5, 1.0).batch, n);
  EXPECT_EQ(schedule_preset(ScheduleCase::d, n, 0.5, 0.5, 1.0).batch, 1u);
}

TEST(FitLogLog, ExactPowerData) {
  std::vector<double> x, y;
  for (double n : {256.0, 512.0, 1024.0, 2048.0, 4096.0}) {
    x.push_back(n);
    y.push_back(3.0 * std::pow(n, -0.2));
  }
  const auto f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, -0.2, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
  EXPECT_NEAR(f.slope_se, 0.0, 1e-12);
}

TEST(ParallelFor, EveryIndexOnce) {
  for (std::size_t jobs : {1u, 3u, 16u}) {
    std::vector<std::atomic<int>> hits(101);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(ReplicateStream, PurposesAreIndependent) {
  auto a = replicate_stream(1, 256, 0, Purpose::data);
  auto b = replicate_stream(1, 256, 0, Purpose::solver);
  auto c = replicate_stream(1, 256, 1, Purpose::data);
  const auto x = a.next_u64();
  EXPECT_NE(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  EXPECT_EQ(x, replicate_stream(1, 256, 0, Purpose::data).next_u64());
}

TEST(EmitReport, EmptyReport) {
  TempDir dir("invlearn_empty_report");
  StudyReport rep;
  rep.kind = "rate";
  emit_report(rep, dir.path());
  EXPECT_EQ(slurp(dir.path() / "results.csv"), "n,rep,err_u0,err_u05,err_pred,t_stop,in_ball,wall_ns\n");
  const json summary = json::parse(slurp(dir.path() / "summary.json"));
  EXPECT_EQ(summary["kind"], "rate");
  EXPECT_TRUE(summary["fits"].empty());
}

TEST(RateStudy, NoiselessLinearFollowsTheExactBiasCurve) {
  auto c = small_config();
  c.noise = NoiseModel{NoiseKind::none, 0.0};
  c.replicates = 20;
  const auto rep = rate_study(c, 2);
  ASSERT_EQ(rep.fits.size(), 1u);
  const auto& fit = rep.fits[0];
  const double nu = rep.extra["context"]["nu"].get<double>();
  EXPECT_NEAR(fit.exponent, gd_rate_exponent(c.truth.r, nu, 0.0), 1e-15);

  // population bias ||(I - eta T)^(T_n - 1) (f1 - f_dagger)|| at each n
  const auto ctx = prepare_context(c);
  const auto& t = ctx.truth.t_pop;
  const Vector e1 = t.eigenvectors.transpose() * (ctx.truth.f1 - ctx.truth.f_dagger);
  std::vector<double> ns, bias;
  for (const auto& p : fit.points) {
    double b2 = 0.0;
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      const double s = std::max(t.eigenvalues(j), 0.0);
      b2 += std::pow(1.0 - *c.eta * s, 2.0 * static_cast<double>(p.t_stop - 1)) * e1(j) * e1(j);
    }
    ns.push_back(static_cast<double>(p.n));
    bias.push_back(std::sqrt(b2));
  }
  EXPECT_NEAR(fit.fit.slope, fit_loglog(ns, bias).slope, 0.03);

  auto noisy = small_config();
  noisy.replicates = 20;
  EXPECT_LE(fit.fit.slope, rate_study(noisy, 2).fits[0].fit.slope + 0.02);
}

TEST(RateStudy, DeterministicBytesAcrossRunsAndJobCounts) {
  const auto c = small_config();
  TempDir a("invlearn_det_a");
  TempDir b("invlearn_det_b");
  TempDir d("invlearn_det_c");
  emit_report(rate_study(c, 1), a.path());
  emit_report(rate_study(c, 1), b.path());
  emit_report(rate_study(c, 3), d.path());
  const std::string bytes = slurp(a.path() / "results.csv");
  EXPECT_GT(bytes.size(), 100u);
  EXPECT_EQ(bytes, slurp(b.path() / "results.csv"));
  EXPECT_EQ(bytes, slurp(d.path() / "results.csv"));
  EXPECT_EQ(slurp(a.path() / "summary.json"), slurp(d.path() / "summary.json"));
  EXPECT_TRUE(std::filesystem::exists(a.path() / "plots" / "rate_gd.svg"));
}

TEST(DescentProfile, NoiselessLinearIsAlwaysMonotone) {
  auto c = small_config();
  c.noise = NoiseModel{NoiseKind::none, 0.0};
  c.extend_factor = 1.0;
  const auto rep = descent_profile(c, 2);
  EXPECT_TRUE(rep.pass);
  for (const auto& row : rep.extra["descent"]) {
    EXPECT_DOUBLE_EQ(row["fraction_monotone"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(row["fraction_contained"].get<double>(), 1.0);
  }
}

TEST(ScheduleStudy, ReportsPassesAndFullBatchCase) {
  auto c = small_config();
  c.solver = SolverKind::sgd;
  c.cases = {ScheduleCase::b, ScheduleCase::c};
  c.replicates = 10;
  const auto rep = schedule_study(c, 2);
  ASSERT_EQ(rep.fits.size(), 2u);
  for (const auto& p : rep.fits[1].points) EXPECT_EQ(p.batch, p.n);
  EXPECT_TRUE(rep.extra.contains("error_ratio_at_largest_n"));
  EXPECT_TRUE(rep.fits[0].squared);
}
