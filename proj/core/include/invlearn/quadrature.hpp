#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace invlearn {

enum class QuadratureRule { midpoint, trapezoid };

/// Probability quadrature for the uniform design measure on [0,1]:
/// nodes strictly increasing, weights nonnegative and summing to one.
class QuadratureGrid {
 public:
  QuadratureGrid(std::vector<double> nodes, std::vector<double> weights);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }

  double integrate(const std::function<double(double)>& f) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

inline constexpr std::size_t kDefaultQuadratureNodes = 512;

QuadratureGrid quadrature_grid(std::size_t q, QuadratureRule rule = QuadratureRule::midpoint);

}  // namespace invlearn
