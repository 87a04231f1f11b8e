#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "invlearn/linalg.hpp"
#include "invlearn/quadrature.hpp"
#include "invlearn/rng.hpp"

namespace invlearn {

enum class ModelKind { linear_integral, diffusion_pde, pointwise_nonlinear };

/// Integral kernels k(x, s) on [0,1]^2.
///  - min:      min(x, s)
///  - gaussian: exp(-(x - s)^2 / (2 sigma^2))
///  - volterra: 1{s <= x}; the integration operator, whose tangent kernel is min(x, x')
enum class KernelKind { min, gaussian, volterra };

struct KernelSpec {
  KernelKind kind = KernelKind::volterra;
  double sigma = 0.2;

  double operator()(double x, double s) const;
  /// Integral of k(x, .) over the cell [lo, hi]. Exact for volterra,
  /// midpoint rule otherwise.
  double cell_integral(double x, double lo, double hi) const;
};

/// Right-hand side of the diffusion equation.
enum class LoadKind { sine, constant };

/// Constants of the structural assumptions on A near f-dagger.
struct OperatorConstants {
  double kappa0 = 1.0;       // kernel bound of the output space
  double lip = 1.0;          // derivative bound in the ball
  double alpha = 0.0;        // tangential cone constant, in [0, 1/2)
  double c_r = 0.0;          // ||R_f - I|| <= c_r ||f - f_dagger||
  double c_r_tilde = 1.0;    // sup ||R_f||
  double ball_radius = 0.5;  // d

  void validate() const;
  double kappa1() const { return kappa0 * lip; }
  /// Strict upper bound 1 / kappa1^2 on the GD step size.
  double step_cap() const { return 1.0 / (kappa1() * kappa1()); }
};

struct ModelConfig {
  ModelKind kind = ModelKind::linear_integral;
  Eigen::Index p = 128;
  int m = 1;
  KernelSpec kernel{};
  double beta = 0.25;   // pointwise-nonlinear: phi(v) = v + beta tanh(v)
  double a_min = 0.5;   // diffusion-pde domain floor
  LoadKind load = LoadKind::sine;
  std::optional<double> ball_radius;
  std::optional<double> c_r;
  std::optional<double> alpha;
};

/// A forward model bound to a fixed set of design points. Outputs are laid
/// out point-major: entry j * m + c is component c at point j.
class DesignOperator {
 public:
  virtual ~DesignOperator() = default;

  std::size_t num_points() const noexcept { return points_.size(); }
  int output_dim() const noexcept { return m_; }
  std::span<const double> points() const noexcept { return points_; }

  virtual Vector apply(const ParamVector& f) const = 0;
  /// Outputs at the listed point indices (duplicates allowed).
  virtual Vector apply_rows(const ParamVector& f, std::span<const std::size_t> rows) const = 0;
  virtual Vector jac_apply(const ParamVector& f, const ParamVector& h) const = 0;
  /// sum_j weights_j (S_{x_j} A'(f))^* residuals_j
  virtual ParamVector jac_adjoint(const ParamVector& f, std::span<const double> weights,
                                  const Vector& residuals) const = 0;
  /// weight * sum_i (S_{x_{rows_i}} A'(f))^* residuals_i
  virtual ParamVector jac_adjoint_rows(const ParamVector& f, std::span<const std::size_t> rows,
                                       double weight, const Vector& residuals) const = 0;
  /// (n m) x p matrix whose rows are the point-evaluated derivative.
  virtual Matrix jacobian(const ParamVector& f) const = 0;

 protected:
  DesignOperator(std::vector<double> points, int m) : points_(std::move(points)), m_(m) {}
  void check_weights(std::span<const double> weights, const Vector& residuals) const;

 private:
  std::vector<double> points_;
  int m_;
};

/// Nonlinear operator A : D(A) in H1 -> functions on [0,1] with values in R^m.
///
/// H1 is discretized on p uniform cells with the orthonormal basis
/// 1_cell / sqrt(h), h = 1/p; coefficient c_i corresponds to the function
/// value c_i / sqrt(h) on cell i.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  ModelKind kind() const noexcept { return config_.kind; }
  Eigen::Index dim() const noexcept { return config_.p; }
  int output_dim() const noexcept { return config_.m; }
  const ModelConfig& config() const noexcept { return config_; }
  const OperatorConstants& constants() const noexcept { return constants_; }
  double mesh() const noexcept { return 1.0 / static_cast<double>(config_.p); }

  /// Stable textual identity of the model (kind, sizes, kernel, constants).
  std::string fingerprint() const;

  Vector cell_centers() const;
  Vector to_values(const ParamVector& coeffs) const;
  ParamVector from_values(const Vector& values) const;

  /// Default ground truth f-dagger for this model.
  virtual ParamVector default_truth() const = 0;

  virtual bool in_domain(const ParamVector& f) const;
  /// Throws DomainViolation naming the violated constraint.
  virtual void check_domain(const ParamVector& f) const;
  virtual ParamVector project_to_domain(const ParamVector& f) const;

  virtual std::unique_ptr<DesignOperator> at(std::span<const double> points) const = 0;

  Vector apply(const ParamVector& f, std::span<const double> points) const;
  Vector jac_apply(const ParamVector& f, const ParamVector& h, std::span<const double> points) const;
  ParamVector jac_adjoint_apply(const ParamVector& f, std::span<const double> points,
                                std::span<const double> weights, const Vector& residuals) const;

  /// Same model with replaced constants (e.g. after calibrating C_R).
  virtual std::shared_ptr<const ForwardModel> with_constants(const OperatorConstants& c) const = 0;

 protected:
  ForwardModel(ModelConfig config, OperatorConstants constants);
  void check_size(const ParamVector& f) const;

  ModelConfig config_;
  OperatorConstants constants_;
};

using ModelPtr = std::shared_ptr<const ForwardModel>;

ModelPtr make_model(const ModelConfig& config);

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);

/// Solves -(a u')' = load on (0,1), u(0) = u(1) = 0, by finite differences.
/// `a_cells` holds the coefficient on the p uniform cells; `load` and the
/// result live on the p - 1 interior cell boundaries s_k = k / p.
/// Throws DomainViolation if any a value is below a_min.
Vector pde_solve(const Vector& a_cells, const Vector& load, double a_min);

/// L2(nu) norm of outputs evaluated at the grid nodes (point-major layout).
double l2_norm(const QuadratureGrid& grid, const Vector& outputs, int m);

/// Unit-norm smooth random direction in H1: a cosine series with
/// coefficients N(0,1)/(1+k), k < modes, sampled at the cell centers.
ParamVector random_smooth_direction(const ForwardModel& model, RngStream& rng, int modes = 16);

/// Point f_dagger + radius * U * v with U ~ Unif[0,1] and v a smooth random
/// direction, resampled until it lies in D(A).
ParamVector sample_ball_point(const ForwardModel& model, const ParamVector& f_dagger, double radius,
                              RngStream& rng);

/// One sampled pair (f, f_tilde) with the quantities of the tangential cone condition.
struct ConePair {
  double remainder = 0.0;    // ||A(f) - A(ft) - A'(ft)(f - ft)||
  double difference = 0.0;   // ||A(f) - A(ft)||
  double linearized = 0.0;   // ||A'(ft)(f - ft)||
};

struct ConeEstimate {
  double alpha_hat = 0.0;
  std::size_t used_pairs = 0;
  std::size_t skipped_pairs = 0;
  std::vector<ConePair> pairs;
};

/// Empirical tangential cone constant: max over sampled pairs in the
/// radius-ball of remainder / difference, with L2(nu) norms on `grid`.
/// Pairs with difference < 1e-14 are skipped; if all are skipped throws
/// DegenerateSampling.
ConeEstimate estimate_tangential_cone(const ForwardModel& model, const ParamVector& f_dagger,
                                      double radius, std::size_t n_pairs, RngStream& rng,
                                      const QuadratureGrid& grid = quadrature_grid(kDefaultQuadratureNodes));

}  // namespace invlearn
