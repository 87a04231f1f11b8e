#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "invlearn/forward_model.hpp"
#include "invlearn/harness/config.hpp"
#include "invlearn/quadrature.hpp"
#include "invlearn/sampling.hpp"

namespace invlearn::harness {

/// One (n, replicate) outcome.
struct ReplicateResult {
  std::size_t n = 0;
  std::size_t rep = 0;
  double err_u0 = 0.0;
  double err_u05 = 0.0;
  double err_pred = 0.0;
  std::size_t t_stop = 0;
  bool in_ball = true;
  std::int64_t wall_ns = 0;
  bool excluded = false;  // divergence or domain exit
  std::string note;
};

struct SeriesPoint {
  std::size_t n = 0;
  double mean = 0.0;     // mean of the regressed quantity
  double sd = 0.0;       // replicate standard deviation of it
  double mean_err = 0.0; // mean of the (unsquared) error norm
  double eta = 0.0;
  std::size_t batch = 0;
  std::size_t t_stop = 0;
  std::size_t passes = 0;
  std::size_t used = 0;
  std::size_t excluded = 0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

/// Ordinary least squares of log y on log x.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// One regression of a replicate-averaged error functional on log n.
struct SeriesFit {
  std::string label;
  bool squared = false;  // SGD regresses the mean squared norm
  std::vector<SeriesPoint> points;
  LineFit fit;
  double exponent = 0.0;        // theoretical decay exponent
  double expected_slope = 0.0;  // -exponent
  double tolerance = 0.15;
  std::size_t excluded = 0;
  std::size_t total = 0;
  bool slope_pass = false;
  bool exclusion_pass = true;  // at most 20% of replicates excluded
  bool pass() const { return slope_pass && exclusion_pass; }
};

struct Series {
  std::string label;
  std::vector<ReplicateResult> rows;
};

struct StudyReport {
  std::string kind;  // rate | descent | schedules | concentration
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<Series> series;
  std::vector<SeriesFit> fits;
  std::vector<std::string> warnings;
  nlohmann::json extra = nlohmann::json::object();
  bool pass = false;
};

/// Everything shared by the replicates of a study.
struct StudyContext {
  ModelPtr model;
  QuadratureGrid grid;
  TruthSpec truth;
  double nu = 0.5;
  nlohmann::json describe() const;
};

StudyContext prepare_context(const ExperimentConfig& cfg);

/// Decay parameter for the configured source: the config value, or a fit on
/// the population tangent operator / the output kernel operator.
double resolve_nu(const ExperimentConfig& cfg, const ForwardModel& model, const SpectralDecomposition& t_pop,
                  const QuadratureGrid& grid);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results must be
/// written to pre-sized slots so that output order never depends on timing.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// Random stream of a replicate; purposes keep data and solver draws apart.
enum class Purpose : std::uint64_t { data = 1, solver = 2 };
RngStream replicate_stream(std::uint64_t seed, std::size_t n, std::size_t rep, Purpose purpose);

/// Errors at the stopping time vs n, regressed on log n (GD: mean norm,
/// SGD: mean squared norm, one series per schedule case).
StudyReport rate_study(const ExperimentConfig& cfg, std::size_t jobs = 1);

/// GD only: monotonicity of ||e_t|| and ball containment for t <= T_n.
StudyReport descent_profile(const ExperimentConfig& cfg, std::size_t jobs = 1);

/// SGD over the schedule cases (all four when none are configured):
/// per-case slopes, passes over data, and the factor-3 agreement at the largest n.
StudyReport schedule_study(const ExperimentConfig& cfg, std::size_t jobs = 1);

/// Monte Carlo of the sampling-error quantities on the admissible lambda grid.
StudyReport concentration_study(const ExperimentConfig& cfg, std::size_t jobs = 1);

}  // namespace invlearn::harness
