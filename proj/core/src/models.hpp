#pragma once

// Concrete forward models. Internal to the library; users go through make_model.

#include "invlearn/forward_model.hpp"

namespace invlearn::detail {

/// A(f)(x)_c = int k(x,s) psi_c(s) phi(f(s)) ds, with phi = id for the
/// linear model and phi(v) = v + beta tanh(v) for the pointwise one.
class IntegralModel final : public ForwardModel {
 public:
  explicit IntegralModel(const ModelConfig& config);
  IntegralModel(const ModelConfig& config, const OperatorConstants& constants);

  ParamVector default_truth() const override;
  std::unique_ptr<DesignOperator> at(std::span<const double> points) const override;
  ModelPtr with_constants(const OperatorConstants& c) const override;

  double phi(double v) const;
  double phi_prime(double v) const;
  /// Row of the kernel matrix for point x and output component c:
  /// entries cell_integral(x, cell_i) psi_c(s_i) / sqrt(h).
  void kernel_row(double x, int c, double* out) const;

 private:
  static OperatorConstants derive_constants(const ModelConfig& config);
};

/// Parameter-to-solution map a -> u(a) of -(a u')' = load, u(0)=u(1)=0,
/// observed by linear interpolation of the nodal solution.
class DiffusionModel final : public ForwardModel {
 public:
  explicit DiffusionModel(const ModelConfig& config);
  DiffusionModel(const ModelConfig& config, const OperatorConstants& constants);

  ParamVector default_truth() const override;
  bool in_domain(const ParamVector& f) const override;
  void check_domain(const ParamVector& f) const override;
  ParamVector project_to_domain(const ParamVector& f) const override;
  std::unique_ptr<DesignOperator> at(std::span<const double> points) const override;
  ModelPtr with_constants(const OperatorConstants& c) const override;

  const Vector& load() const noexcept { return load_; }
  /// Nodal state u(a) on the p - 1 interior nodes.
  Vector state(const ParamVector& coeffs) const;

 private:
  Vector load_;
  static OperatorConstants derive_constants(const ModelConfig& config);
};

/// Tridiagonal system of the diffusion finite-difference scheme,
/// (1/h^2) G^T diag(a) G, G the cell-difference operator.
struct DiffusionSystem {
  Vector diag;  // length p - 1
  Vector off;   // length p - 2, couples nodes k and k+1
  double h = 0.0;

  static DiffusionSystem assemble(const Vector& a_cells);
  /// Thomas algorithm; the system is symmetric positive definite.
  Vector solve(const Vector& rhs) const;
};

/// Cell differences (G u)_i = U_{i+1} - U_i with U_0 = U_p = 0.
Vector cell_differences(const Vector& nodal);
/// Adjoint of cell_differences: (G^T v)_k = v_{k-1} - v_k.
Vector cell_differences_adjoint(const Vector& cell);

}  // namespace invlearn::detail
