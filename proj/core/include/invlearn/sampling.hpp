#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "invlearn/forward_model.hpp"
#include "invlearn/linalg.hpp"
#include "invlearn/quadrature.hpp"
#include "invlearn/rng.hpp"

namespace invlearn {

/// Random-design data {(x_j, y_j)}; ys is point-major with m entries per point.
struct SampleSet {
  std::vector<double> xs;
  Vector ys;
  int m = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string fingerprint;

  std::size_t size() const noexcept { return xs.size(); }
  void validate() const;
};

/// CSV with a "# seed=... stream=... model=..." comment line, then
/// header x,y_1,...,y_m.
void write_csv(const SampleSet& s, const std::filesystem::path& path);
SampleSet read_csv(const std::filesystem::path& path);

enum class NoiseKind { none, uniform_bounded, truncated_gaussian };

/// uniform-bounded: U[-scale, scale]. truncated-gaussian: N(0, scale^2)
/// conditioned on |e| <= 4 scale.
struct NoiseModel {
  NoiseKind kind = NoiseKind::uniform_bounded;
  double scale = 0.2;

  void validate() const;
  double draw(RngStream& rng) const;
  /// Almost-sure bound on |e|.
  double bound() const;
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

/// n i.i.d. uniform[0,1] design points.
std::vector<double> draw_design(std::size_t n, RngStream& rng);

/// f_dagger together with an initial guess f1 = f_dagger - T^r g, ||g|| = D,
/// T the population tangent operator at f_dagger.
struct TruthSpec {
  ParamVector f_dagger;
  ParamVector f1;
  ParamVector g;
  double r = 0.5;
  double D = 1.0;
  SpectralDecomposition t_pop;
};

/// Throws DomainError("source construction infeasible: reduce D") when f1
/// leaves D(A) or the ball of the model's radius around f_dagger.
TruthSpec make_truth(const ForwardModel& model, const ParamVector& f_dagger, double r,
                     const ParamVector& g_direction, double D, const QuadratureGrid& grid);

/// Direction with coefficient +-j^(-1/2) (random signs) on the j-th eigenvector
/// of T. Its T^r image has the slowest coefficient decay for which the
/// source norm stays of order one as the dimension grows.
ParamVector critical_source_direction(const SpectralDecomposition& t, RngStream& rng);

/// y_j = A(f_dagger)(x_j) + e_j.
SampleSet generate_samples(const ForwardModel& model, const ParamVector& f_dagger, const NoiseModel& noise,
                           std::size_t n, RngStream& rng);

struct BernsteinConstants {
  double M = 0.0;
  double Sigma = 0.0;
};

/// M = max(noise bound, sup over the grid of |A(f_dagger)(x)|), Sigma = 2 M.
BernsteinConstants bernstein_constants(const ForwardModel& model, const ParamVector& f_dagger,
                                       const NoiseModel& noise, const QuadratureGrid& grid);

struct BernsteinMoment {
  int l = 0;
  double estimate = 0.0;   // Monte Carlo E|e|^l
  double std_error = 0.0;
  double bound = 0.0;      // l! Sigma^2 M^(l-2) / 2
  bool pass = false;       // estimate + 2 std_error <= bound
};

struct BernsteinReport {
  std::vector<BernsteinMoment> moments;
  bool pass = true;
};

BernsteinReport verify_bernstein(const NoiseModel& noise, double M, double Sigma, int l_max, std::size_t samples,
                                 RngStream& rng);

}  // namespace invlearn
