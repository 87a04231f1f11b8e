#include "invlearn/tangent.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "invlearn/errors.hpp"

namespace invlearn {
namespace {

// Weighted Gram J^T diag(w) J with w repeated over the m output components.
Matrix weighted_normal(const Matrix& jac, std::span<const double> weights, int m) {
  Vector w(jac.rows());
  for (std::size_t q = 0; q < weights.size(); ++q) {
    for (int c = 0; c < m; ++c) w(static_cast<Eigen::Index>(q) * m + c) = weights[q];
  }
  Matrix out = jac.transpose() * w.asDiagonal() * jac;
  return 0.5 * (out + out.transpose());
}

}  // namespace

TangentOperators build_tangent(const ForwardModel& model, const ParamVector& f, std::span<const double> points,
                               const QuadratureGrid* population) {
  if (points.empty()) throw ContractError("build_tangent: no design points");
  model.check_domain(f);
  const Matrix jac = model.at(points)->jacobian(f);
  const auto n = points.size();
  Matrix gram = jac * jac.transpose();
  gram = 0.5 * (gram + gram.transpose());
  Matrix t_hat = jac.transpose() * jac / static_cast<double>(n);
  t_hat = 0.5 * (t_hat + t_hat.transpose());

  std::optional<SymMatrix> t_pop;
  if (population != nullptr) t_pop = population_T(model, f, *population);
  SymMatrix t_hat_sym(t_hat);
  auto decomp = sym_eig(t_pop ? *t_pop : t_hat_sym);
  return TangentOperators{std::move(t_hat_sym), SymMatrix(gram), std::move(t_pop), std::move(decomp), n,
                          model.output_dim()};
}

SymMatrix population_T(const ForwardModel& model, const ParamVector& f, const QuadratureGrid& grid) {
  model.check_domain(f);
  const Matrix jac = model.at(grid.nodes())->jacobian(f);
  return SymMatrix(weighted_normal(jac, grid.weights(), model.output_dim()));
}

SymMatrix kernel_operator(const KernelSpec& kernel, const QuadratureGrid& grid) {
  if (kernel.kind == KernelKind::volterra) {
    throw ContractError("kernel_operator: the volterra kernel is not symmetric");
  }
  const auto x = grid.nodes();
  const auto w = grid.weights();
  const auto q = static_cast<Eigen::Index>(grid.size());
  Matrix k(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = std::sqrt(w[i] * w[j]) * kernel(x[i], x[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return SymMatrix(k);
}

double effective_dimension(const SpectralDecomposition& d, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("effective_dimension: lambda must be positive");
  double acc = 0.0;
  for (double s : d.clipped()) acc += s / (s + lambda);
  return acc;
}

double effective_dimension_constant(const SpectralDecomposition& d, double nu, std::span<const double> lambdas) {
  if (lambdas.empty()) throw ContractError("effective_dimension_constant: empty lambda grid");
  double sup = 0.0;
  for (double lam : lambdas) sup = std::max(sup, effective_dimension(d, lam) * std::pow(lam, nu));
  return sup;
}

IndexWindow default_decay_window(const SpectralDecomposition& d) {
  return {4, std::min<Eigen::Index>(40, d.rank() / 2)};
}

DecayFit fit_decay(const SpectralDecomposition& d, std::optional<IndexWindow> window) {
  const IndexWindow win = window.value_or(default_decay_window(d));
  if (win.first < 1 || win.second > d.size()) {
    throw DomainError("fit_decay: window outside the spectrum");
  }
  std::vector<double> lx;
  std::vector<double> ly;
  for (Eigen::Index j = win.first; j <= win.second; ++j) {
    const double s = d.eigenvalues(j - 1);
    if (s > 1e-14) {
      lx.push_back(std::log(static_cast<double>(j)));
      ly.push_back(std::log(s));
    }
  }
  if (lx.size() < 4) throw DomainError("fit_decay: insufficient spectrum");
  const double k = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const double slope = sxy / sxx;
  DecayFit fit;
  fit.nu_hat = -1.0 / slope;
  fit.c_nu_hat = std::exp(my - slope * mx);
  fit.window = win;
  fit.in_range = fit.nu_hat > 0.0 && fit.nu_hat < 1.0;
  return fit;
}

ParamVector apply_T_power(const TangentOperators& t_ops, double r, const ParamVector& g) {
  if (g.size() != t_ops.decomp_t.size()) throw ContractError("apply_T_power: dimension mismatch");
  return apply_frac_power(t_ops.decomp_t, r, g);
}

}  // namespace invlearn
