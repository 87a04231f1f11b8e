#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>

#include "invlearn/forward_model.hpp"
#include "invlearn/linalg.hpp"
#include "invlearn/quadrature.hpp"

namespace invlearn {

/// Linearization of A at a point: Gram matrix of the tangent kernel
/// G(x, x') = B_x B_{x'}^* on the design, the empirical operator
/// T_hat = (1/n) sum_j B_{x_j}^* B_{x_j} and, optionally, the population T.
struct TangentOperators {
  SymMatrix t_hat;
  SymMatrix gram;  // (n m) x (n m)
  std::optional<SymMatrix> t_pop;
  SpectralDecomposition decomp_t;  // of t_pop when present, otherwise of t_hat
  std::size_t n = 0;
  int m = 1;

  const SymMatrix& selected() const { return t_pop ? *t_pop : t_hat; }
};

/// Builds the tangent operators at f. If `population` is given, T is also
/// assembled on that grid and drives decomp_t.
TangentOperators build_tangent(const ForwardModel& model, const ParamVector& f, std::span<const double> points,
                               const QuadratureGrid* population = nullptr);

/// T = sum_q w_q B_{x_q}^* B_{x_q} over the grid nodes.
SymMatrix population_T(const ForwardModel& model, const ParamVector& f, const QuadratureGrid& grid);

/// Integral operator of a symmetric kernel on L2 of the design measure,
/// represented as sqrt(w_q) k(x_q, x_q') sqrt(w_q'). Throws ContractError for
/// the non-symmetric volterra kernel.
SymMatrix kernel_operator(const KernelSpec& kernel, const QuadratureGrid& grid);

/// N(lambda) = sum_j sigma_j / (sigma_j + lambda), eigenvalues clipped at 0.
double effective_dimension(const SpectralDecomposition& d, double lambda);

/// sup over `lambdas` of N(lambda) lambda^nu: the smallest C_nu^2 with
/// N(lambda) <= C_nu^2 lambda^(-nu) on that grid.
double effective_dimension_constant(const SpectralDecomposition& d, double nu, std::span<const double> lambdas);

/// 1-based, inclusive eigenvalue index range.
using IndexWindow = std::pair<Eigen::Index, Eigen::Index>;

struct DecayFit {
  double nu_hat = 0.0;
  double c_nu_hat = 0.0;  // sigma_j ~ c_nu_hat * j^(-1/nu_hat)
  IndexWindow window{0, 0};
  bool in_range = false;  // 0 < nu_hat < 1
};

/// Window [4, min(40, rank / 2)].
IndexWindow default_decay_window(const SpectralDecomposition& d);

/// Least-squares fit of log sigma_j against log j over the window. Indices
/// whose eigenvalue is <= 1e-14 are dropped; fewer than 4 remaining raises
/// DomainError("insufficient spectrum").
DecayFit fit_decay(const SpectralDecomposition& d, std::optional<IndexWindow> window = std::nullopt);

/// T^r g with T the operator behind decomp_t.
ParamVector apply_T_power(const TangentOperators& t_ops, double r, const ParamVector& g);

}  // namespace invlearn
