#pragma once

#include <cstddef>
#include <string>

namespace invlearn {

/// q = min(2r, 1), the saturated smoothness used by every schedule formula.
double saturated_smoothness(double r);

/// T_n = floor(n^(1 / (q + nu + 1)) / eta), at least 1.
std::size_t stopping_time(std::size_t n, double r, double nu, double eta);

/// Smallest admissible mini-batch size at step t:
/// max(eta (eta t)^(q + nu), eta^((q + 1) / (q + nu + 1)) (eta t)^(q + 1)).
double min_batch_bound(double eta, double t, double r, double nu);

enum class ScheduleCase { a, b, c, d };

std::string to_string(ScheduleCase c);
ScheduleCase schedule_case_from_string(const std::string& s);

struct SchedulePreset {
  ScheduleCase which = ScheduleCase::a;
  std::size_t batch = 1;
  std::size_t t_max = 1;
  double eta = 0.0;
  std::size_t passes = 1;  // ceil(b T / n)
};

/// The four batch/step/horizon presets with step constant 0.9 / kappa1^2:
///   a: b = ceil(n^((q+1)/(q+nu+1))), T = n, eta = c n^(-(q+nu)/(q+nu+1))
///   b: same b, T = ceil(n^(1/(q+nu+1))), eta = c
///   c: b = n, T and eta as in b
///   d: b = 1, T = ceil(n^((q+nu+2)/(q+nu+1))), eta = c / n
SchedulePreset schedule_preset(ScheduleCase which, std::size_t n, double r, double nu, double kappa1);

/// Decay exponent of ||T^u (g_{T_n} - f_dagger)|| for GD:
/// (min(r, 1/2) + u) / (2 min(r, 1/2) + nu + 1).
double gd_rate_exponent(double r, double nu, double u);

/// Decay exponent of E||T^u (f_T - f_dagger)||^2 for mini-batch SGD:
/// (q + 2u) / (q + nu + 1).
double sgd_rate_exponent(double r, double nu, double u);

}  // namespace invlearn
