#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "invlearn/forward_model.hpp"
#include "invlearn/linalg.hpp"
#include "invlearn/quadrature.hpp"
#include "invlearn/rng.hpp"
#include "invlearn/sampling.hpp"
#include "invlearn/tangent.hpp"

namespace invlearn {

struct ErrorPair {
  double u0 = 0.0;    // ||e||
  double u05 = 0.0;   // ||T^(1/2) e||
  double pred = 0.0;  // ||A(f) - A(f_dagger)|| in L2 of the design measure
};

/// `t` is the spectral decomposition of T; e = f - f_dagger.
ErrorPair error_pair(const SpectralDecomposition& t, const ParamVector& e, const ForwardModel& model,
                     const ParamVector& f, const ParamVector& f_dagger, const QuadratureGrid& grid);
ErrorPair error_pair(const TangentOperators& t_ops, const ParamVector& e, const ForwardModel& model,
                     const ParamVector& f, const ParamVector& f_dagger, const QuadratureGrid& grid);

/// (1 + (c_r / 2) u0) u05, the bound on the prediction error.
double prediction_bound(const ErrorPair& e, double c_r);

/// Sampling-error quantities at one lambda. L and its empirical version are
/// represented by T and T_hat in parameter coordinates, which carry the
/// same nonzero spectrum; S^* e maps to J^T e / n.
struct ConcentrationSample {
  double lambda = 0.0;
  double psi = 0.0;      // ||(L + lambda)^(-1/2) (L_hat - L)||_HS
  double theta = 0.0;    // ||(L + lambda)^(-1/2) S_hat^* e||, e = A(f_dagger)(x) - y
  double upsilon = 0.0;  // Tr[(L + lambda)^(-1) (L - L_hat)]
  double xi_half = 0.0;  // ||(L_hat + lambda)^(-1/2) (L + lambda)^(1/2)||
  double xi_one = 0.0;   // ||(L_hat + lambda)^(-1) (L + lambda)||
};

/// Holds the population operator so that many samples can share it.
class ConcentrationSampler {
 public:
  ConcentrationSampler(const ForwardModel& model, const ParamVector& f_dagger, const QuadratureGrid& grid);

  const SpectralDecomposition& population() const noexcept { return t_pop_; }

  std::vector<ConcentrationSample> sample(const SampleSet& data, std::span<const double> lambdas) const;
  /// Same quantities with the empirical operator given directly as a list of
  /// weighted points (weights sum to one).
  std::vector<ConcentrationSample> sample_weighted(std::span<const double> points, std::span<const double> weights,
                                                   const Vector& noise, std::span<const double> lambdas) const;

 private:
  const ForwardModel& model_;
  ParamVector f_dagger_;
  SpectralDecomposition t_pop_;
};

ConcentrationSample concentration_sample(const ForwardModel& model, const ParamVector& f_dagger,
                                         const SampleSet& data, const QuadratureGrid& grid, double lambda);

/// Constants entering the concentration bounds.
struct ConcentrationConstants {
  double kappa = 1.0;
  double nu = 0.5;
  double c_nu = 1.0;  // N(lambda) <= c_nu^2 lambda^(-nu)
  double M = 0.0;
  double Sigma = 0.0;
  double c_kappa = 0.0;      // 2 (kappa^2 + kappa c_nu)
  double c_kappa_m_s = 0.0;  // 2 (kappa M + Sigma c_nu)
};

struct ConcentrationRow {
  double lambda = 0.0;
  bool in_range = true;  // n^(-1/(1+nu)) <= lambda <= 1
  ConcentrationSample quantile;  // empirical (1 - delta)-quantiles, upsilon in absolute value
  double bound_upsilon = 0.0;
  double bound_psi = 0.0;       // c_kappa (n lambda^nu)^(-1/2) log(6/delta)
  double bound_psi_sqrt = 0.0;  // c_kappa sqrt(lambda) log(6/delta)
  double bound_theta = 0.0;
  double bound_xi_half = 0.0;
  double bound_xi_one = 0.0;
  bool pass_upsilon = false;
  bool pass_psi = false;
  bool pass_theta = false;
  bool pass_xi = false;
  bool pass() const { return pass_upsilon && pass_psi && pass_theta && pass_xi; }
};

struct ConcentrationReport {
  std::size_t n = 0;
  double delta = 0.1;
  std::size_t reps = 0;
  ConcentrationConstants constants;
  std::vector<ConcentrationRow> rows;
  /// Every in-range row passes.
  bool pass() const;
  nlohmann::json to_json() const;
};

/// Constants for the given nu: kappa = max(kappa0, sup_x ||B_x||), c_nu from
/// a log grid of lambda in [1e-8, 1], (M, Sigma) from bernstein_constants.
ConcentrationConstants concentration_constants(const ForwardModel& model, const ParamVector& f_dagger,
                                               const NoiseModel& noise, const SpectralDecomposition& t_pop,
                                               double nu, const QuadratureGrid& grid);

/// Monte Carlo over `reps` fresh samples of size n. reps < 20 raises DomainError.
/// `nu` defaults to fit_decay on the population operator.
ConcentrationReport check_concentration(const ForwardModel& model, const ParamVector& f_dagger,
                                        const NoiseModel& noise, std::size_t n, std::span<const double> lambdas,
                                        double delta, std::size_t reps, const RngStream& rng,
                                        std::optional<double> nu = std::nullopt,
                                        const QuadratureGrid& grid = quadrature_grid(kDefaultQuadratureNodes));

/// Admissible lambda grid: `points` log-spaced values in [n^(-1/(1+nu)), 1].
std::vector<double> admissible_lambdas(std::size_t n, double nu, std::size_t points);

struct TaylorSample {
  double remainder = 0.0;  // ||A(f) - A(f_dagger) - A'(f_dagger)(f - f_dagger)||
  double err = 0.0;        // ||f - f_dagger||
  double lin = 0.0;        // ||A'(f_dagger)(f - f_dagger)||
};

struct TaylorReport {
  double c_r = 0.0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;     // remainder / ((c_r / 2) err lin)
  double max_constant = 0.0;  // sup of 2 remainder / (err lin)
};

/// Draws ball points around f_dagger and evaluates the Taylor remainder.
std::vector<TaylorSample> taylor_samples(const ForwardModel& model, const ParamVector& f_dagger, double radius,
                                         std::size_t n_samples, const QuadratureGrid& grid, RngStream& rng);

/// Compares every sample against (c_r / 2) ||f - f_dagger|| ||B (f - f_dagger)||.
TaylorReport taylor_remainder_check(const ForwardModel& model, const ParamVector& f_dagger, double radius,
                                    std::size_t n_samples, const QuadratureGrid& grid, RngStream& rng,
                                    std::optional<double> c_r = std::nullopt);

/// Twice the largest observed 2 ||remainder|| / (||e|| ||B e||).
double calibrate_c_r(const ForwardModel& model, const ParamVector& f_dagger, double radius, std::size_t n_samples,
                     const QuadratureGrid& grid, RngStream& rng);

}  // namespace invlearn
