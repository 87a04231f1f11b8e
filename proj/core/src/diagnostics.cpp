#include "invlearn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "invlearn/errors.hpp"

namespace invlearn {
namespace {

Matrix spectral_function(const SpectralDecomposition& d, double lambda, double power) {
  const Vector s = (d.clipped().array() + lambda).pow(power).matrix();
  return d.eigenvectors * s.asDiagonal() * d.eigenvectors.transpose();
}

// Smallest order statistic with at least a fraction `level` of the sample at or below it.
double empirical_quantile(std::vector<double> v, double level) {
  std::sort(v.begin(), v.end());
  auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(v.size()) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, v.size());
  return v[k - 1];
}

}  // namespace

ErrorPair error_pair(const SpectralDecomposition& t, const ParamVector& e, const ForwardModel& model,
                     const ParamVector& f, const ParamVector& f_dagger, const QuadratureGrid& grid) {
  if (e.size() != t.size()) throw ContractError("error_pair: dimension mismatch");
  ErrorPair out;
  out.u0 = e.norm();
  out.u05 = apply_frac_power(t, 0.5, e).norm();
  const auto op = model.at(grid.nodes());
  out.pred = l2_norm(grid, op->apply(f) - op->apply(f_dagger), model.output_dim());
  return out;
}

ErrorPair error_pair(const TangentOperators& t_ops, const ParamVector& e, const ForwardModel& model,
                     const ParamVector& f, const ParamVector& f_dagger, const QuadratureGrid& grid) {
  return error_pair(t_ops.decomp_t, e, model, f, f_dagger, grid);
}

double prediction_bound(const ErrorPair& e, double c_r) { return (1.0 + 0.5 * c_r * e.u0) * e.u05; }

ConcentrationSampler::ConcentrationSampler(const ForwardModel& model, const ParamVector& f_dagger,
                                           const QuadratureGrid& grid)
    : model_(model), f_dagger_(f_dagger), t_pop_(sym_eig(population_T(model, f_dagger, grid))) {}

std::vector<ConcentrationSample> ConcentrationSampler::sample(const SampleSet& data,
                                                              std::span<const double> lambdas) const {
  data.validate();
  const std::vector<double> w(data.size(), 1.0 / static_cast<double>(data.size()));
  const Vector eps = model_.apply(f_dagger_, data.xs) - data.ys;
  return sample_weighted(data.xs, w, eps, lambdas);
}

std::vector<ConcentrationSample> ConcentrationSampler::sample_weighted(std::span<const double> points,
                                                                       std::span<const double> weights,
                                                                       const Vector& noise,
                                                                       std::span<const double> lambdas) const {
  const int m = model_.output_dim();
  if (weights.size() != points.size() || noise.size() != static_cast<Eigen::Index>(points.size()) * m) {
    throw ContractError("concentration: points, weights and noise disagree");
  }
  const Matrix jac = model_.at(points)->jacobian(f_dagger_);
  Vector w(jac.rows());
  for (std::size_t j = 0; j < weights.size(); ++j) {
    for (int c = 0; c < m; ++c) w(static_cast<Eigen::Index>(j) * m + c) = weights[j];
  }
  Matrix t_hat = jac.transpose() * w.asDiagonal() * jac;
  t_hat = 0.5 * (t_hat + t_hat.transpose());
  const SpectralDecomposition emp = sym_eig(SymMatrix(t_hat));
  const Matrix t_pop = t_pop_.eigenvectors * t_pop_.clipped().asDiagonal() * t_pop_.eigenvectors.transpose();
  const Matrix diff = t_pop - t_hat;
  const Vector s_eps = jac.transpose() * w.cwiseProduct(noise);

  std::vector<ConcentrationSample> out;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw DomainError("concentration: lambda must be positive");
    ConcentrationSample s;
    s.lambda = lambda;
    const Matrix inv_half = spectral_function(t_pop_, lambda, -0.5);
    const Matrix inv = spectral_function(t_pop_, lambda, -1.0);
    s.psi = (inv_half * diff).norm();
    s.upsilon = (inv * diff).trace();
    s.theta = (inv_half * s_eps).norm();
    const Matrix pop_half = spectral_function(t_pop_, lambda, 0.5);
    const Matrix emp_inv = spectral_function(emp, lambda, -1.0);
    Matrix sandwich = pop_half * emp_inv * pop_half;
    sandwich = 0.5 * (sandwich + sandwich.transpose());
    s.xi_half = std::sqrt(std::max(0.0, sym_eig(SymMatrix(sandwich)).max_eigenvalue()));
    // ||(T_hat + l)^-1 (T + l)||^2 = lambda_max((T + l)(T_hat + l)^-2 (T + l))
    const Matrix shifted = t_pop + lambda * Matrix::Identity(t_pop.rows(), t_pop.cols());
    const Matrix left = emp_inv * shifted;
    Matrix gram = left.transpose() * left;
    gram = 0.5 * (gram + gram.transpose());
    s.xi_one = std::sqrt(std::max(0.0, sym_eig(SymMatrix(gram)).max_eigenvalue()));
    out.push_back(s);
  }
  return out;
}

ConcentrationSample concentration_sample(const ForwardModel& model, const ParamVector& f_dagger,
                                         const SampleSet& data, const QuadratureGrid& grid, double lambda) {
  const ConcentrationSampler sampler(model, f_dagger, grid);
  const double lam[] = {lambda};
  return sampler.sample(data, lam).front();
}

bool ConcentrationReport::pass() const {
  bool any = false;
  for (const auto& r : rows) {
    if (!r.in_range) continue;
    any = true;
    if (!r.pass()) return false;
  }
  return any;
}

nlohmann::json ConcentrationReport::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["delta"] = delta;
  j["reps"] = reps;
  j["constants"] = {{"kappa", constants.kappa},   {"nu", constants.nu},
                    {"c_nu", constants.c_nu},     {"M", constants.M},
                    {"Sigma", constants.Sigma},   {"c_kappa", constants.c_kappa},
                    {"c_kappa_m_sigma", constants.c_kappa_m_s}};
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"lambda", r.lambda},
                         {"in_range", r.in_range},
                         {"upsilon", r.quantile.upsilon},
                         {"psi", r.quantile.psi},
                         {"theta", r.quantile.theta},
                         {"xi_half", r.quantile.xi_half},
                         {"xi_one", r.quantile.xi_one},
                         {"bound_upsilon", r.bound_upsilon},
                         {"bound_psi", r.bound_psi},
                         {"bound_psi_sqrt_lambda", r.bound_psi_sqrt},
                         {"bound_theta", r.bound_theta},
                         {"bound_xi_half", r.bound_xi_half},
                         {"bound_xi_one", r.bound_xi_one},
                         {"pass", r.pass()}});
  }
  j["pass"] = pass();
  return j;
}

ConcentrationConstants concentration_constants(const ForwardModel& model, const ParamVector& f_dagger,
                                               const NoiseModel& noise, const SpectralDecomposition& t_pop,
                                               double nu, const QuadratureGrid& grid) {
  ConcentrationConstants c;
  c.nu = nu;
  const Matrix jac = model.at(grid.nodes())->jacobian(f_dagger);
  double sup_b = 0.0;
  const int m = model.output_dim();
  for (Eigen::Index q = 0; q < jac.rows() / m; ++q) {
    const Matrix block = jac.middleRows(q * m, m);
    sup_b = std::max(sup_b, m == 1 ? block.row(0).norm() : operator_norm(block));
  }
  c.kappa = std::max(model.constants().kappa0, sup_b);
  std::vector<double> lams;
  for (int i = 0; i <= 400; ++i) lams.push_back(std::pow(10.0, -8.0 + 8.0 * i / 400.0));
  c.c_nu = std::sqrt(effective_dimension_constant(t_pop, nu, lams));
  const auto bc = bernstein_constants(model, f_dagger, noise, grid);
  c.M = bc.M;
  c.Sigma = bc.Sigma;
  c.c_kappa = 2.0 * (c.kappa * c.kappa + c.kappa * c.c_nu);
  c.c_kappa_m_s = 2.0 * (c.kappa * c.M + c.Sigma * c.c_nu);
  return c;
}

std::vector<double> admissible_lambdas(std::size_t n, double nu, std::size_t points) {
  if (n < 1 || points < 1) throw DomainError("admissible_lambdas: n and points must be positive");
  const double lo = std::log(std::pow(static_cast<double>(n), -1.0 / (1.0 + nu)));
  std::vector<double> out;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    out.push_back(std::exp(lo * (1.0 - t)));
  }
  return out;
}

ConcentrationReport check_concentration(const ForwardModel& model, const ParamVector& f_dagger,
                                        const NoiseModel& noise, std::size_t n, std::span<const double> lambdas,
                                        double delta, std::size_t reps, const RngStream& rng,
                                        std::optional<double> nu, const QuadratureGrid& grid) {
  if (reps < 20) throw DomainError("check_concentration: need at least 20 replicates");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("check_concentration: delta must lie in (0, 1)");
  if (n < 1) throw DomainError("check_concentration: n must be positive");
  const ConcentrationSampler sampler(model, f_dagger, grid);
  const double nu_used = nu.value_or(fit_decay(sampler.population()).nu_hat);

  ConcentrationReport rep;
  rep.n = n;
  rep.delta = delta;
  rep.reps = reps;
  rep.constants = concentration_constants(model, f_dagger, noise, sampler.population(), nu_used, grid);

  const std::size_t L = lambdas.size();
  std::vector<std::vector<ConcentrationSample>> draws(L);
  for (std::size_t k = 0; k < reps; ++k) {
    RngStream child = rng.child(RngStream::key({n, k}));
    const SampleSet data = generate_samples(model, f_dagger, noise, n, child);
    const auto s = sampler.sample(data, lambdas);
    for (std::size_t i = 0; i < L; ++i) draws[i].push_back(s[i]);
  }

  const auto& c = rep.constants;
  const double log_term = std::log(6.0 / delta);
  const double level = 1.0 - delta;
  const double lower = std::pow(static_cast<double>(n), -1.0 / (1.0 + nu_used));
  for (std::size_t i = 0; i < L; ++i) {
    ConcentrationRow row;
    row.lambda = lambdas[i];
    row.in_range = row.lambda >= lower * (1.0 - 1e-12) && row.lambda <= 1.0;
    auto pick = [&](auto field) {
      std::vector<double> v;
      for (const auto& s : draws[i]) v.push_back(field(s));
      return empirical_quantile(std::move(v), level);
    };
    row.quantile.lambda = row.lambda;
    row.quantile.upsilon = pick([](const ConcentrationSample& s) { return std::abs(s.upsilon); });
    row.quantile.psi = pick([](const ConcentrationSample& s) { return s.psi; });
    row.quantile.theta = pick([](const ConcentrationSample& s) { return s.theta; });
    row.quantile.xi_half = pick([](const ConcentrationSample& s) { return s.xi_half; });
    row.quantile.xi_one = pick([](const ConcentrationSample& s) { return s.xi_one; });

    const double scale = 1.0 / std::sqrt(static_cast<double>(n) * std::pow(row.lambda, nu_used));
    row.bound_upsilon = c.c_kappa * log_term;
    row.bound_psi = c.c_kappa * scale * log_term;
    row.bound_psi_sqrt = c.c_kappa * std::sqrt(row.lambda) * log_term;
    row.bound_theta = c.c_kappa_m_s * scale * log_term;
    row.bound_xi_half = c.c_kappa * log_term;
    row.bound_xi_one = std::pow(c.c_kappa * log_term, 2.0);
    row.pass_upsilon = row.quantile.upsilon <= row.bound_upsilon;
    row.pass_psi = row.quantile.psi <= row.bound_psi;
    row.pass_theta = row.quantile.theta <= row.bound_theta;
    row.pass_xi = row.quantile.xi_half <= row.bound_xi_half && row.quantile.xi_one <= row.bound_xi_one;
    rep.rows.push_back(row);
  }
  return rep;
}

std::vector<TaylorSample> taylor_samples(const ForwardModel& model, const ParamVector& f_dagger, double radius,
                                         std::size_t n_samples, const QuadratureGrid& grid, RngStream& rng) {
  if (n_samples < 1) throw DomainError("taylor samples: n_samples must be positive");
  model.check_domain(f_dagger);
  const auto op = model.at(grid.nodes());
  const Vector base = op->apply(f_dagger);
  const int m = model.output_dim();
  std::vector<TaylorSample> out;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const ParamVector f = sample_ball_point(model, f_dagger, radius, rng);
    const ParamVector e = f - f_dagger;
    const Vector lin = op->jac_apply(f_dagger, e);
    TaylorSample s;
    s.remainder = l2_norm(grid, op->apply(f) - base - lin, m);
    s.err = e.norm();
    s.lin = l2_norm(grid, lin, m);
    out.push_back(s);
  }
  return out;
}

TaylorReport taylor_remainder_check(const ForwardModel& model, const ParamVector& f_dagger, double radius,
                                    std::size_t n_samples, const QuadratureGrid& grid, RngStream& rng,
                                    std::optional<double> c_r) {
  TaylorReport rep;
  rep.c_r = c_r.value_or(model.constants().c_r);
  const auto samples = taylor_samples(model, f_dagger, radius, n_samples, grid, rng);
  rep.samples = samples.size();
  for (const auto& s : samples) {
    // round-off level remainders of linear maps count as zero
    const double rem = s.remainder <= 1e-12 * s.lin ? 0.0 : s.remainder;
    const double denom = s.err * s.lin;
    if (denom > 0.0) rep.max_constant = std::max(rep.max_constant, 2.0 * rem / denom);
    const double rhs = 0.5 * rep.c_r * denom;
    double ratio = 0.0;
    if (rhs > 0.0) ratio = rem / rhs;
    else if (rem > 0.0) ratio = std::numeric_limits<double>::infinity();
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (ratio > 1.0) ++rep.violations;
  }
  return rep;
}

double calibrate_c_r(const ForwardModel& model, const ParamVector& f_dagger, double radius, std::size_t n_samples,
                     const QuadratureGrid& grid, RngStream& rng) {
  return 2.0 * taylor_remainder_check(model, f_dagger, radius, n_samples, grid, rng, 0.0).max_constant;
}

}  // namespace invlearn
