#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "invlearn/errors.hpp"
#include "models.hpp"

namespace invlearn {

double KernelSpec::operator()(double x, double s) const {
  switch (kind) {
    case KernelKind::min:
      return std::min(x, s);
    case KernelKind::gaussian: {
      const double d = x - s;
      return std::exp(-d * d / (2.0 * sigma * sigma));
    }
    case KernelKind::volterra:
      return s <= x ? 1.0 : 0.0;
  }
  return 0.0;
}

double KernelSpec::cell_integral(double x, double lo, double hi) const {
  if (kind == KernelKind::volterra) return std::clamp(x - lo, 0.0, hi - lo);
  return (hi - lo) * (*this)(x, 0.5 * (lo + hi));
}

void OperatorConstants::validate() const {
  if (!(kappa0 > 0.0)) throw DomainError("OperatorConstants: kappa0 must be positive");
  if (!(lip > 0.0)) throw DomainError("OperatorConstants: lip must be positive");
  if (!(alpha >= 0.0 && alpha < 0.5)) throw DomainError("OperatorConstants: alpha must lie in [0, 1/2)");
  if (!(ball_radius > 0.0)) throw DomainError("OperatorConstants: ball radius must be positive");
  if (!(c_r >= 0.0) || !(c_r_tilde > 0.0)) throw DomainError("OperatorConstants: invalid C_R constants");
}

void DesignOperator::check_weights(std::span<const double> weights, const Vector& residuals) const {
  if (weights.size() != num_points() ||
      residuals.size() != static_cast<Eigen::Index>(num_points()) * m_) {
    throw ContractError("jac_adjoint: lengths of points, weights and residuals disagree");
  }
}

ForwardModel::ForwardModel(ModelConfig config, OperatorConstants constants)
    : config_(std::move(config)), constants_(constants) {
  if (config_.p < 2) throw DomainError("ForwardModel: p must be at least 2");
  if (config_.m < 1) throw DomainError("ForwardModel: output dimension must be at least 1");
  constants_.validate();
}

std::string ForwardModel::fingerprint() const {
  std::ostringstream os;
  os << to_string(config_.kind) << ";p=" << config_.p << ";m=" << config_.m;
  if (config_.kind != ModelKind::diffusion_pde) {
    os << ";kernel=" << to_string(config_.kernel.kind);
    if (config_.kernel.kind == KernelKind::gaussian) os << "(" << config_.kernel.sigma << ")";
  }
  if (config_.kind == ModelKind::pointwise_nonlinear) os << ";beta=" << config_.beta;
  if (config_.kind == ModelKind::diffusion_pde) {
    os << ";a_min=" << config_.a_min << ";load=" << (config_.load == LoadKind::sine ? "sine" : "constant");
  }
  os << std::setprecision(6) << ";kappa1=" << constants_.kappa1() << ";d=" << constants_.ball_radius;
  return os.str();
}

Vector ForwardModel::cell_centers() const {
  Vector s(config_.p);
  for (Eigen::Index i = 0; i < config_.p; ++i) s(i) = (static_cast<double>(i) + 0.5) * mesh();
  return s;
}

Vector ForwardModel::to_values(const ParamVector& coeffs) const {
  check_size(coeffs);
  return coeffs / std::sqrt(mesh());
}

ParamVector ForwardModel::from_values(const Vector& values) const {
  check_size(values);
  return values * std::sqrt(mesh());
}

bool ForwardModel::in_domain(const ParamVector& f) const { return f.size() == dim() && f.allFinite(); }

void ForwardModel::check_domain(const ParamVector& f) const {
  check_size(f);
  if (!f.allFinite()) throw DomainViolation("domain violation: non-finite coefficient");
}

ParamVector ForwardModel::project_to_domain(const ParamVector& f) const { return f; }

Vector ForwardModel::apply(const ParamVector& f, std::span<const double> points) const {
  return at(points)->apply(f);
}

Vector ForwardModel::jac_apply(const ParamVector& f, const ParamVector& h,
                               std::span<const double> points) const {
  return at(points)->jac_apply(f, h);
}

ParamVector ForwardModel::jac_adjoint_apply(const ParamVector& f, std::span<const double> points,
                                            std::span<const double> weights,
                                            const Vector& residuals) const {
  if (weights.size() != points.size() ||
      residuals.size() != static_cast<Eigen::Index>(points.size()) * output_dim()) {
    throw ContractError("jac_adjoint_apply: lengths of points, weights and residuals disagree");
  }
  return at(points)->jac_adjoint(f, weights, residuals);
}

void ForwardModel::check_size(const ParamVector& f) const {
  if (f.size() != config_.p) {
    std::ostringstream os;
    os << "parameter vector has length " << f.size() << ", model expects " << config_.p;
    throw ContractError(os.str());
  }
}

ModelPtr make_model(const ModelConfig& config) {
  switch (config.kind) {
    case ModelKind::linear_integral:
    case ModelKind::pointwise_nonlinear:
      return std::make_shared<detail::IntegralModel>(config);
    case ModelKind::diffusion_pde:
      return std::make_shared<detail::DiffusionModel>(config);
  }
  throw ConfigError("make_model: unknown model kind");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear_integral: return "linear-integral";
    case ModelKind::diffusion_pde: return "diffusion-pde";
    case ModelKind::pointwise_nonlinear: return "pointwise-nonlinear";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "linear-integral") return ModelKind::linear_integral;
  if (s == "diffusion-pde") return ModelKind::diffusion_pde;
  if (s == "pointwise-nonlinear") return ModelKind::pointwise_nonlinear;
  throw ConfigError("unknown model kind '" + s +
                    "' (expected linear-integral | diffusion-pde | pointwise-nonlinear)");
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::min: return "min";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::volterra: return "volterra";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "min") return KernelKind::min;
  if (s == "gaussian") return KernelKind::gaussian;
  if (s == "volterra") return KernelKind::volterra;
  throw ConfigError("unknown kernel '" + s + "' (expected min | gaussian | volterra)");
}

double l2_norm(const QuadratureGrid& grid, const Vector& outputs, int m) {
  if (outputs.size() != static_cast<Eigen::Index>(grid.size()) * m) {
    throw ContractError("l2_norm: outputs do not match the grid");
  }
  double acc = 0.0;
  const auto w = grid.weights();
  for (std::size_t q = 0; q < grid.size(); ++q) {
    for (int c = 0; c < m; ++c) {
      const double v = outputs(static_cast<Eigen::Index>(q) * m + c);
      acc += w[q] * v * v;
    }
  }
  return std::sqrt(acc);
}

ParamVector random_smooth_direction(const ForwardModel& model, RngStream& rng, int modes) {
  const Vector s = model.cell_centers();
  Vector values = Vector::Zero(model.dim());
  for (int k = 0; k < modes; ++k) {
    const double amp = rng.normal() / (1.0 + k);
    const double scale = (k == 0) ? 1.0 : std::numbers::sqrt2;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      values(i) += amp * scale * std::cos(k * std::numbers::pi * s(i));
    }
  }
  ParamVector v = model.from_values(values);
  const double norm = v.norm();
  if (norm == 0.0) throw DegenerateSampling("random_smooth_direction: zero direction");
  return v / norm;
}

ParamVector sample_ball_point(const ForwardModel& model, const ParamVector& f_dagger, double radius,
                              RngStream& rng) {
  constexpr int kMaxTries = 1000;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    ParamVector f = f_dagger + radius * rng.uniform() * random_smooth_direction(model, rng);
    if (model.in_domain(f)) return f;
  }
  throw DegenerateSampling("sample_ball_point: no domain point found in the ball");
}

ConeEstimate estimate_tangential_cone(const ForwardModel& model, const ParamVector& f_dagger,
                                      double radius, std::size_t n_pairs, RngStream& rng,
                                      const QuadratureGrid& grid) {
  if (n_pairs == 0) throw DomainError("estimate_tangential_cone: n_pairs must be positive");
  model.check_domain(f_dagger);
  const auto op = model.at(grid.nodes());
  const int m = model.output_dim();
  ConeEstimate est;
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const ParamVector f = sample_ball_point(model, f_dagger, radius, rng);
    const ParamVector ft = sample_ball_point(model, f_dagger, radius, rng);
    const Vector diff = op->apply(f) - op->apply(ft);
    const Vector lin = op->jac_apply(ft, f - ft);
    ConePair pair{l2_norm(grid, diff - lin, m), l2_norm(grid, diff, m), l2_norm(grid, lin, m)};
    if (pair.difference < 1e-14) {
      ++est.skipped_pairs;
      continue;
    }
    ++est.used_pairs;
    est.alpha_hat = std::max(est.alpha_hat, pair.remainder / pair.difference);
    est.pairs.push_back(pair);
  }
  if (est.used_pairs == 0) throw DegenerateSampling("estimate_tangential_cone: degenerate sampling");
  return est;
}

}  // namespace invlearn
