#include <algorithm>
#include <cmath>
#include <numbers>

#include "invlearn/errors.hpp"
#include "models.hpp"

namespace invlearn::detail {
namespace {

constexpr int kConstantProbePoints = 257;

double psi(int c, double s) {
  return c == 0 ? 1.0 : std::numbers::sqrt2 * std::cos(c * std::numbers::pi * s);
}

double pointwise_phi(double v, double beta) { return v + beta * std::tanh(v); }

double pointwise_phi_prime(double v, double beta) {
  const double sech = 1.0 / std::cosh(v);
  return 1.0 + beta * sech * sech;
}

class IntegralOperator final : public DesignOperator {
 public:
  IntegralOperator(const IntegralModel& model, std::vector<double> points)
      : DesignOperator(std::move(points), model.output_dim()),
        linear_(model.kind() == ModelKind::linear_integral),
        beta_(model.config().beta),
        sh_(std::sqrt(model.mesh())),
        p_(model.dim()) {
    const auto p = model.dim();
    const auto pts = this->points();
    rows_.resize(static_cast<Eigen::Index>(pts.size()) * output_dim(), p);
    std::vector<double> buf(static_cast<std::size_t>(p));
    for (std::size_t j = 0; j < pts.size(); ++j) {
      for (int c = 0; c < output_dim(); ++c) {
        model.kernel_row(pts[j], c, buf.data());
        rows_.row(static_cast<Eigen::Index>(j) * output_dim() + c) =
            Eigen::Map<const Eigen::RowVectorXd>(buf.data(), p);
      }
    }
  }

  Vector apply(const ParamVector& f) const override { return rows_ * transformed(f); }

  Vector apply_rows(const ParamVector& f, std::span<const std::size_t> rows) const override {
    const Vector u = transformed(f);
    const int m = output_dim();
    Vector out(static_cast<Eigen::Index>(rows.size()) * m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      check_row(rows[i]);
      for (int c = 0; c < m; ++c) {
        out(static_cast<Eigen::Index>(i) * m + c) =
            rows_.row(static_cast<Eigen::Index>(rows[i]) * m + c).dot(u);
      }
    }
    return out;
  }

  Vector jac_apply(const ParamVector& f, const ParamVector& h) const override {
    check(f);
    check(h);
    if (linear()) return rows_ * h;
    return rows_ * derivative(f).cwiseProduct(h);
  }

  ParamVector jac_adjoint(const ParamVector& f, std::span<const double> weights,
                          const Vector& residuals) const override {
    check(f);
    check_weights(weights, residuals);
    const int m = output_dim();
    Vector scaled = residuals;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      scaled.segment(static_cast<Eigen::Index>(j) * m, m) *= weights[j];
    }
    ParamVector g = rows_.transpose() * scaled;
    if (!linear()) g.array() *= derivative(f).array();
    return g;
  }

  ParamVector jac_adjoint_rows(const ParamVector& f, std::span<const std::size_t> rows, double weight,
                               const Vector& residuals) const override {
    check(f);
    const int m = output_dim();
    if (residuals.size() != static_cast<Eigen::Index>(rows.size()) * m) {
      throw ContractError("jac_adjoint_rows: rows and residuals disagree");
    }
    ParamVector g = ParamVector::Zero(p_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      check_row(rows[i]);
      for (int c = 0; c < m; ++c) {
        g.noalias() += residuals(static_cast<Eigen::Index>(i) * m + c) *
                       rows_.row(static_cast<Eigen::Index>(rows[i]) * m + c).transpose();
      }
    }
    g *= weight;
    if (!linear()) g.array() *= derivative(f).array();
    return g;
  }

  Matrix jacobian(const ParamVector& f) const override {
    check(f);
    if (linear()) return rows_;
    return rows_ * derivative(f).asDiagonal();
  }

 private:
  bool linear() const { return linear_; }

  void check(const ParamVector& f) const {
    if (f.size() != p_) throw ContractError("integral operator: parameter length mismatch");
  }

  void check_row(std::size_t r) const {
    if (r >= num_points()) throw ContractError("integral operator: row index out of range");
  }

  // sqrt(h) phi(c / sqrt(h)), so that rows_ * u integrates phi(f).
  Vector transformed(const ParamVector& f) const {
    check(f);
    if (linear()) return f;
    return f.unaryExpr([&](double v) { return sh_ * pointwise_phi(v / sh_, beta_); });
  }

  Vector derivative(const ParamVector& f) const {
    return f.unaryExpr([&](double v) { return pointwise_phi_prime(v / sh_, beta_); });
  }

  bool linear_;
  double beta_;
  double sh_;
  Eigen::Index p_;
  Matrix rows_;
};

}  // namespace

IntegralModel::IntegralModel(const ModelConfig& config) : IntegralModel(config, derive_constants(config)) {
  if (config.kind == ModelKind::pointwise_nonlinear && !config.alpha) {
    RngStream rng(0x636f6e65ULL, 0);
    const auto est = estimate_tangential_cone(*this, default_truth(), constants_.ball_radius, 64, rng,
                                              quadrature_grid(256));
    constants_.alpha = est.alpha_hat;
    constants_.validate();
  }
}

IntegralModel::IntegralModel(const ModelConfig& config, const OperatorConstants& constants)
    : ForwardModel(config, constants) {
  if (config.kind != ModelKind::linear_integral && config.kind != ModelKind::pointwise_nonlinear) {
    throw ContractError("IntegralModel: wrong model kind");
  }
  if (config.kernel.kind == KernelKind::gaussian && !(config.kernel.sigma > 0.0)) {
    throw DomainError("gaussian kernel: sigma must be positive");
  }
  if (config.kind == ModelKind::pointwise_nonlinear && !(config.beta >= 0.0 && config.beta < 1.0)) {
    throw DomainError("pointwise-nonlinear: beta must lie in [0, 1)");
  }
}

OperatorConstants IntegralModel::derive_constants(const ModelConfig& config) {
  if (config.p < 2 || config.m < 1) throw DomainError("IntegralModel: invalid sizes");
  OperatorConstants c;
  // kappa0^2 = sup_x k(x, x) for all three kernels on [0,1]
  c.kappa0 = 1.0;
  const double h = 1.0 / static_cast<double>(config.p);
  double sup = 0.0;
  Matrix block(config.m, config.p);
  for (int k = 0; k < kConstantProbePoints; ++k) {
    const double x = static_cast<double>(k) / (kConstantProbePoints - 1);
    for (int comp = 0; comp < config.m; ++comp) {
      for (Eigen::Index i = 0; i < config.p; ++i) {
        const double s = (static_cast<double>(i) + 0.5) * h;
        block(comp, i) = config.kernel.cell_integral(x, i * h, (i + 1) * h) * psi(comp, s) / std::sqrt(h);
      }
    }
    sup = std::max(sup, config.m == 1 ? block.row(0).norm() : operator_norm(block));
  }
  c.lip = sup;
  if (config.kind == ModelKind::pointwise_nonlinear) c.lip *= 1.0 + config.beta;
  c.alpha = config.alpha.value_or(0.0);
  c.c_r = config.c_r.value_or(0.0);
  c.ball_radius = config.ball_radius.value_or(0.5);
  return c;
}

double IntegralModel::phi(double v) const {
  return kind() == ModelKind::linear_integral ? v : pointwise_phi(v, config_.beta);
}

double IntegralModel::phi_prime(double v) const {
  if (kind() == ModelKind::linear_integral) return 1.0;
  return pointwise_phi_prime(v, config_.beta);
}

void IntegralModel::kernel_row(double x, int c, double* out) const {
  const double h = mesh();
  const double sh = std::sqrt(h);
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const double s = (static_cast<double>(i) + 0.5) * h;
    out[i] = config_.kernel.cell_integral(x, i * h, (i + 1) * h) * psi(c, s) / sh;
  }
}

ParamVector IntegralModel::default_truth() const {
  const Vector s = cell_centers();
  return from_values(s.unaryExpr([](double v) { return std::sin(std::numbers::pi * v) + 0.5; }));
}

std::unique_ptr<DesignOperator> IntegralModel::at(std::span<const double> points) const {
  for (double x : points) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("design point outside [0, 1]");
  }
  return std::make_unique<IntegralOperator>(*this, std::vector<double>(points.begin(), points.end()));
}

ModelPtr IntegralModel::with_constants(const OperatorConstants& c) const {
  return std::make_shared<IntegralModel>(config_, c);
}

}  // namespace invlearn::detail
