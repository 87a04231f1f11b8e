#include "invlearn/quadrature.hpp"

#include <cmath>
#include <numeric>

#include "invlearn/errors.hpp"

namespace invlearn {

QuadratureGrid::QuadratureGrid(std::vector<double> nodes, std::vector<double> weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights)) {
  if (nodes_.empty() || nodes_.size() != weights_.size()) {
    throw ContractError("QuadratureGrid: nodes and weights must be nonempty and equal length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i] < 0.0 || nodes_[i] > 1.0) throw DomainError("QuadratureGrid: node outside [0,1]");
    if (i > 0 && !(nodes_[i] > nodes_[i - 1])) {
      throw DomainError("QuadratureGrid: nodes must be strictly increasing");
    }
    if (weights_[i] < 0.0) throw DomainError("QuadratureGrid: negative weight");
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("QuadratureGrid: weights must sum to one");
}

double QuadratureGrid::integrate(const std::function<double(double)>& f) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * f(nodes_[i]);
  return acc;
}

QuadratureGrid quadrature_grid(std::size_t q, QuadratureRule rule) {
  if (q == 0) throw DomainError("quadrature_grid: q must be positive");
  std::vector<double> nodes(q), weights(q);
  if (rule == QuadratureRule::midpoint) {
    const double h = 1.0 / static_cast<double>(q);
    for (std::size_t i = 0; i < q; ++i) {
      nodes[i] = (static_cast<double>(i) + 0.5) * h;
      weights[i] = h;
    }
  } else {
    if (q < 2) throw DomainError("quadrature_grid: trapezoid rule needs q >= 2");
    const double h = 1.0 / static_cast<double>(q - 1);
    for (std::size_t i = 0; i < q; ++i) {
      nodes[i] = static_cast<double>(i) * h;
      weights[i] = (i == 0 || i + 1 == q) ? 0.5 * h : h;
    }
    nodes.back() = 1.0;
  }
  // Renormalize away the last-ulp drift of the summed weights.
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  return QuadratureGrid(std::move(nodes), std::move(weights));
}

}  // namespace invlearn
