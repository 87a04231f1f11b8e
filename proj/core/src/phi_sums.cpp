#include "invlearn/phi_sums.hpp"

#include <cmath>
#include <numbers>

#include "invlearn/errors.hpp"

namespace invlearn {

double phi(int j, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("phi: u must lie in [0, 1]");
  if (j < 0) throw DomainError("phi: j must be nonnegative");
  if (u == 0.0) return 1.0;
  return std::pow(u / (u + j), u);
}

PhiSumResult phi_sum_check(int which, int k, double b, double d, double v) {
  if (k < 2) throw DomainError("phi_sum_check: k must be at least 2");
  if (which < 1 || which > 4) throw DomainError("phi_sum_check: inequality index must be 1..4");
  if (which != 4 && !(b >= 0.0 && b < 1.0)) throw DomainError("phi_sum_check: b must lie in [0, 1)");
  if (which != 1 && which != 4 && !(d > 0.0)) throw DomainError("phi_sum_check: d must be positive");
  if (which == 4 && !(v >= 0.0)) throw DomainError("phi_sum_check: v must be nonnegative");
  if (which == 4 && v == 1.0 && !(d > 0.0)) throw DomainError("phi_sum_check: d must be positive");

  const double k1 = static_cast<double>(k) + 1.0;
  PhiSumResult res;
  for (int j = 1; j <= k; ++j) {
    const double jd = static_cast<double>(j);
    switch (which) {
      case 1: res.lhs += phi(k - j, 0.5) * std::pow(jd, -b); break;
      case 2: res.lhs += std::pow(phi(k - j, 0.5), 2) * std::pow(jd, -(b + d)); break;
      case 3: res.lhs += phi(k - j, 1.0) * std::pow(jd, -(b + d)); break;
      default: res.lhs += std::pow(phi(k - j, 1.0), v); break;
    }
  }
  const double e = std::numbers::e;
  switch (which) {
    case 1:
      res.rhs = std::beta(0.5, 1.0 - b) * std::pow(k1, 0.5 - b);
      break;
    case 2:
    case 3:
      res.rhs = std::pow(2.0, b) * (1.0 / (1.0 - b) + std::pow(2.0, d + 1.0) / (e * d)) * std::pow(k1, -b);
      break;
    default:
      if (v < 1.0) res.rhs = std::pow(k1, 1.0 - v) / (1.0 - v);
      else if (v == 1.0) res.rhs = 2.0 / (e * d) * std::pow(k1, d);
      else res.rhs = v / (v - 1.0);
      break;
  }
  res.pass = res.lhs <= res.rhs;
  return res;
}

}  // namespace invlearn
