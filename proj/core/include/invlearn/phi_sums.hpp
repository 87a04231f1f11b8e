#pragma once

namespace invlearn {

/// phi_j^u = (u / (u + j))^u, with phi_j^0 = 1. Requires u in [0, 1].
double phi(int j, double u);

struct PhiSumResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;  // lhs <= rhs
};

/// Evaluates one of the four filter-sum inequalities at k >= 2:
///   1: sum_{j<=k} phi_{k-j}^{1/2} j^-b           <= B(1/2, 1-b) (k+1)^(1/2-b)
///   2: sum_{j<=k} (phi_{k-j}^{1/2})^2 j^-(b+d)   <= 2^b [(1-b)^-1 + 2^(d+1) (e d)^-1] (k+1)^-b
///   3: sum_{j<=k} phi_{k-j}^1 j^-(b+d)           <= same right-hand side as 2
///   4: sum_{j<=k} (phi_{k-j}^1)^v                <= (1-v)^-1 (k+1)^(1-v)   for v in [0, 1)
///                                                   2 (e d)^-1 (k+1)^d     for v = 1
///                                                   v / (v - 1)            for v > 1
/// b in [0, 1) and d > 0 are required by every item that uses them; v >= 0.
PhiSumResult phi_sum_check(int which, int k, double b, double d, double v = 0.0);

}  // namespace invlearn
