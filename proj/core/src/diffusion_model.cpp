#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "invlearn/errors.hpp"
#include "models.hpp"

namespace invlearn {
namespace detail {
namespace {

constexpr int kConstantProbePoints = 257;
// Margin on sup ||S_x A'(f_dagger)||, since the derivative bound must hold on the ball.
constexpr double kLipMargin = 1.25;

// Observation of nodal values by linear interpolation: the value at x is
// w_lo U_lo + w_hi U_hi, where index -1 marks a boundary node (U = 0).
struct Stencil {
  Eigen::Index lo = -1;
  Eigen::Index hi = -1;
  double w_lo = 0.0;
  double w_hi = 0.0;
};

Stencil stencil(double x, Eigen::Index p) {
  const double t = x * static_cast<double>(p);
  auto k = static_cast<Eigen::Index>(std::floor(t));
  k = std::clamp<Eigen::Index>(k, 0, p - 1);
  const double frac = t - static_cast<double>(k);
  Stencil s;
  // node k has interior index k - 1; nodes 0 and p are boundary
  s.lo = (k >= 1) ? k - 1 : -1;
  s.hi = (k + 1 <= p - 1) ? k : -1;
  s.w_lo = 1.0 - frac;
  s.w_hi = frac;
  return s;
}

Vector check_coefficient(const Vector& a, double a_min) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a(i)) || a(i) < a_min) {
      std::ostringstream os;
      os << "domain violation: diffusion coefficient a = " << a(i) << " on cell " << i << " is below a_min = "
         << a_min;
      throw DomainViolation(os.str());
    }
  }
  return a;
}

class DiffusionOperator final : public DesignOperator {
 public:
  DiffusionOperator(const DiffusionModel& model, std::vector<double> points)
      : DesignOperator(std::move(points), 1),
        p_(model.dim()),
        sh_(std::sqrt(model.mesh())),
        a_min_(model.config().a_min),
        load_(model.load()) {
    for (double x : this->points()) stencils_.push_back(stencil(x, p_));
  }

  Vector apply(const ParamVector& f) const override { return observe(state(f)); }

  Vector apply_rows(const ParamVector& f, std::span<const std::size_t> rows) const override {
    const Vector u = state(f);
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      check_row(rows[i]);
      out(static_cast<Eigen::Index>(i)) = eval(stencils_[rows[i]], u);
    }
    return out;
  }

  Vector jac_apply(const ParamVector& f, const ParamVector& h) const override {
    check(h);
    const auto sys = DiffusionSystem::assemble(coefficient(f));
    const Vector u = sys.solve(load_);
    const Vector du_cells = cell_differences(u);
    const Vector rhs = cell_differences_adjoint(du_cells.cwiseProduct(h / sh_)) / (sys.h * sys.h);
    return observe(-sys.solve(rhs));
  }

  ParamVector jac_adjoint(const ParamVector& f, std::span<const double> weights,
                          const Vector& residuals) const override {
    check_weights(weights, residuals);
    Vector z = Vector::Zero(p_ - 1);
    for (std::size_t j = 0; j < stencils_.size(); ++j) scatter(stencils_[j], weights[j] * residuals(j), z);
    return pullback(f, z);
  }

  ParamVector jac_adjoint_rows(const ParamVector& f, std::span<const std::size_t> rows, double weight,
                               const Vector& residuals) const override {
    if (residuals.size() != static_cast<Eigen::Index>(rows.size())) {
      throw ContractError("jac_adjoint_rows: rows and residuals disagree");
    }
    Vector z = Vector::Zero(p_ - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      check_row(rows[i]);
      scatter(stencils_[rows[i]], weight * residuals(static_cast<Eigen::Index>(i)), z);
    }
    return pullback(f, z);
  }

  Matrix jacobian(const ParamVector& f) const override {
    const auto sys = DiffusionSystem::assemble(coefficient(f));
    const Vector u = sys.solve(load_);
    const Vector du_cells = cell_differences(u);
    // du/dc_i = -D^{-1} G^T e_i (G u)_i / (h^2 sqrt(h))
    Matrix dstate(p_ - 1, p_);
    const double scale = -1.0 / (sys.h * sys.h * sh_);
    for (Eigen::Index i = 0; i < p_; ++i) {
      Vector e = Vector::Zero(p_);
      e(i) = du_cells(i) * scale;
      dstate.col(i) = sys.solve(cell_differences_adjoint(e));
    }
    Matrix jac(static_cast<Eigen::Index>(stencils_.size()), p_);
    for (std::size_t j = 0; j < stencils_.size(); ++j) {
      const auto& s = stencils_[j];
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(p_);
      if (s.lo >= 0) row += s.w_lo * dstate.row(s.lo);
      if (s.hi >= 0) row += s.w_hi * dstate.row(s.hi);
      jac.row(static_cast<Eigen::Index>(j)) = row;
    }
    return jac;
  }

 private:
  void check(const ParamVector& f) const {
    if (f.size() != p_) throw ContractError("diffusion operator: parameter length mismatch");
  }

  void check_row(std::size_t r) const {
    if (r >= num_points()) throw ContractError("diffusion operator: row index out of range");
  }

  Vector coefficient(const ParamVector& f) const {
    check(f);
    return check_coefficient(f / sh_, a_min_);
  }

  Vector state(const ParamVector& f) const {
    return DiffusionSystem::assemble(coefficient(f)).solve(load_);
  }

  static double eval(const Stencil& s, const Vector& u) {
    double v = 0.0;
    if (s.lo >= 0) v += s.w_lo * u(s.lo);
    if (s.hi >= 0) v += s.w_hi * u(s.hi);
    return v;
  }

  static void scatter(const Stencil& s, double r, Vector& z) {
    if (s.lo >= 0) z(s.lo) += s.w_lo * r;
    if (s.hi >= 0) z(s.hi) += s.w_hi * r;
  }

  Vector observe(const Vector& u) const {
    Vector out(static_cast<Eigen::Index>(stencils_.size()));
    for (std::size_t j = 0; j < stencils_.size(); ++j) out(static_cast<Eigen::Index>(j)) = eval(stencils_[j], u);
    return out;
  }

  // Discrete adjoint: grad_i = -(G u)_i (G lambda)_i / (h^2 sqrt(h)), D lambda = z.
  ParamVector pullback(const ParamVector& f, const Vector& z) const {
    const auto sys = DiffusionSystem::assemble(coefficient(f));
    const Vector u = sys.solve(load_);
    const Vector lambda = sys.solve(z);
    return -cell_differences(u).cwiseProduct(cell_differences(lambda)) / (sys.h * sys.h * sh_);
  }

  Eigen::Index p_;
  double sh_;
  double a_min_;
  Vector load_;
  std::vector<Stencil> stencils_;
};

Vector make_load(LoadKind kind, Eigen::Index p) {
  Vector load(p - 1);
  for (Eigen::Index k = 1; k < p; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(p);
    load(k - 1) = kind == LoadKind::sine ? std::numbers::pi * std::numbers::pi * std::sin(std::numbers::pi * s)
                                         : 1.0;
  }
  return load;
}

}  // namespace

DiffusionSystem DiffusionSystem::assemble(const Vector& a_cells) {
  const Eigen::Index p = a_cells.size();
  if (p < 2) throw DomainError("diffusion system: need at least two cells");
  DiffusionSystem sys;
  sys.h = 1.0 / static_cast<double>(p);
  const double inv_h2 = 1.0 / (sys.h * sys.h);
  sys.diag.resize(p - 1);
  sys.off.resize(std::max<Eigen::Index>(p - 2, 0));
  for (Eigen::Index k = 0; k < p - 1; ++k) {
    // interior node k + 1 touches cells k and k + 1
    sys.diag(k) = (a_cells(k) + a_cells(k + 1)) * inv_h2;
    if (k + 1 < p - 1) sys.off(k) = -a_cells(k + 1) * inv_h2;
  }
  return sys;
}

Vector DiffusionSystem::solve(const Vector& rhs) const {
  const Eigen::Index n = diag.size();
  if (rhs.size() != n) throw ContractError("diffusion system: rhs length mismatch");
  Vector c(n);
  Vector d(n);
  double denom = diag(0);
  c(0) = n > 1 ? off(0) / denom : 0.0;
  d(0) = rhs(0) / denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag(i) - off(i - 1) * c(i - 1);
    c(i) = i + 1 < n ? off(i) / denom : 0.0;
    d(i) = (rhs(i) - off(i - 1) * d(i - 1)) / denom;
  }
  Vector x(n);
  x(n - 1) = d(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = d(i) - c(i) * x(i + 1);
  return x;
}

Vector cell_differences(const Vector& nodal) {
  const Eigen::Index p = nodal.size() + 1;
  Vector g(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double hi = (i < p - 1) ? nodal(i) : 0.0;
    const double lo = (i >= 1) ? nodal(i - 1) : 0.0;
    g(i) = hi - lo;
  }
  return g;
}

Vector cell_differences_adjoint(const Vector& cell) {
  const Eigen::Index p = cell.size();
  Vector out(p - 1);
  for (Eigen::Index k = 0; k < p - 1; ++k) out(k) = cell(k) - cell(k + 1);
  return out;
}

DiffusionModel::DiffusionModel(const ModelConfig& config) : DiffusionModel(config, derive_constants(config)) {
  if (!config.alpha) {
    RngStream rng(0x636f6e65ULL, 1);
    const auto est = estimate_tangential_cone(*this, default_truth(), constants_.ball_radius, 64, rng,
                                              quadrature_grid(256));
    constants_.alpha = est.alpha_hat;
    constants_.validate();
  }
}

DiffusionModel::DiffusionModel(const ModelConfig& config, const OperatorConstants& constants)
    : ForwardModel(config, constants), load_(make_load(config.load, config.p)) {
  if (config.kind != ModelKind::diffusion_pde) throw ContractError("DiffusionModel: wrong model kind");
  if (config.m != 1) throw ConfigError("diffusion-pde: output dimension must be 1");
  if (!(config.a_min > 0.0)) throw DomainError("diffusion-pde: a_min must be positive");
}

OperatorConstants DiffusionModel::derive_constants(const ModelConfig& config) {
  if (config.p < 2) throw DomainError("DiffusionModel: invalid sizes");
  OperatorConstants c;
  c.ball_radius = config.ball_radius.value_or(0.1);
  c.c_r = config.c_r.value_or(0.0);
  c.alpha = config.alpha.value_or(0.0);
  // Jacobian rows at the default truth, measured on a probe grid.
  DiffusionModel probe(config, c);
  std::vector<double> xs(kConstantProbePoints);
  for (int k = 0; k < kConstantProbePoints; ++k) xs[k] = static_cast<double>(k) / (kConstantProbePoints - 1);
  const Matrix jac = probe.at(xs)->jacobian(probe.default_truth());
  c.lip = kLipMargin * jac.rowwise().norm().maxCoeff();
  c.kappa0 = 1.0;
  return c;
}

ParamVector DiffusionModel::default_truth() const {
  const Vector s = cell_centers();
  return from_values(s.unaryExpr([](double v) { return 1.0 + 0.5 * std::sin(std::numbers::pi * v); }));
}

bool DiffusionModel::in_domain(const ParamVector& f) const {
  if (f.size() != dim() || !f.allFinite()) return false;
  return (f / std::sqrt(mesh())).minCoeff() >= config_.a_min;
}

void DiffusionModel::check_domain(const ParamVector& f) const {
  check_size(f);
  check_coefficient(f / std::sqrt(mesh()), config_.a_min);
}

ParamVector DiffusionModel::project_to_domain(const ParamVector& f) const {
  check_size(f);
  const double sh = std::sqrt(mesh());
  return f.unaryExpr([&](double v) { return std::max(v, config_.a_min * sh); });
}

std::unique_ptr<DesignOperator> DiffusionModel::at(std::span<const double> points) const {
  for (double x : points) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("design point outside [0, 1]");
  }
  return std::make_unique<DiffusionOperator>(*this, std::vector<double>(points.begin(), points.end()));
}

ModelPtr DiffusionModel::with_constants(const OperatorConstants& c) const {
  return std::make_shared<DiffusionModel>(config_, c);
}

Vector DiffusionModel::state(const ParamVector& coeffs) const {
  check_size(coeffs);
  const Vector a = check_coefficient(coeffs / std::sqrt(mesh()), config_.a_min);
  return DiffusionSystem::assemble(a).solve(load_);
}

}  // namespace detail

Vector pde_solve(const Vector& a_cells, const Vector& load, double a_min) {
  if (load.size() != a_cells.size() - 1) throw ContractError("pde_solve: load must have p - 1 entries");
  detail::check_coefficient(a_cells, a_min);
  return detail::DiffusionSystem::assemble(a_cells).solve(load);
}

}  // namespace invlearn
