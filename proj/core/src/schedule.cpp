#include "invlearn/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "invlearn/errors.hpp"

namespace invlearn {
namespace {

// Integer-valued powers such as 1024^0.4 come out as 15.999999999999998.
constexpr double kRoundSlack = 1e-12;

std::size_t robust_floor(double v) {
  return static_cast<std::size_t>(std::floor(v * (1.0 + kRoundSlack)));
}

std::size_t robust_ceil(double v) {
  return static_cast<std::size_t>(std::ceil(v * (1.0 - kRoundSlack)));
}

void check_rates(double r, double nu) {
  if (!(r > 0.0)) throw DomainError("r must be positive");
  if (!(nu > 0.0 && nu < 1.0)) throw DomainError("nu must lie in (0, 1)");
}

}  // namespace

double saturated_smoothness(double r) { return std::min(2.0 * r, 1.0); }

std::size_t stopping_time(std::size_t n, double r, double nu, double eta) {
  if (n < 1) throw DomainError("stopping_time: n must be positive");
  if (!(eta > 0.0)) throw DomainError("stopping_time: eta must be positive");
  check_rates(r, nu);
  const double q = saturated_smoothness(r);
  const double v = std::pow(static_cast<double>(n), 1.0 / (q + nu + 1.0)) / eta;
  return std::max<std::size_t>(1, robust_floor(v));
}

double min_batch_bound(double eta, double t, double r, double nu) {
  if (!(eta > 0.0) || !(t > 0.0) || !(r > 0.0) || !(nu > 0.0)) {
    throw DomainError("min_batch_bound: all inputs must be positive");
  }
  const double q = saturated_smoothness(r);
  const double et = eta * t;
  const double first = eta * std::pow(et, q + nu);
  const double second = std::pow(eta, (q + 1.0) / (q + nu + 1.0)) * std::pow(et, q + 1.0);
  return std::max(first, second);
}

std::string to_string(ScheduleCase c) {
  switch (c) {
    case ScheduleCase::a: return "a";
    case ScheduleCase::b: return "b";
    case ScheduleCase::c: return "c";
    case ScheduleCase::d: return "d";
  }
  return "?";
}

ScheduleCase schedule_case_from_string(const std::string& s) {
  if (s == "a") return ScheduleCase::a;
  if (s == "b") return ScheduleCase::b;
  if (s == "c") return ScheduleCase::c;
  if (s == "d") return ScheduleCase::d;
  throw ConfigError("unknown schedule case '" + s + "' (expected a | b | c | d)");
}

SchedulePreset schedule_preset(ScheduleCase which, std::size_t n, double r, double nu, double kappa1) {
  if (n < 2) throw DomainError("schedule_preset: n must be at least 2");
  if (!(kappa1 > 0.0)) throw DomainError("schedule_preset: kappa1 must be positive");
  check_rates(r, nu);
  const double q = saturated_smoothness(r);
  const double nd = static_cast<double>(n);
  const double c_eta = 0.9 / (kappa1 * kappa1);
  const std::size_t b_ab = std::min(n, robust_ceil(std::pow(nd, (q + 1.0) / (q + nu + 1.0))));
  const std::size_t t_bc = robust_ceil(std::pow(nd, 1.0 / (q + nu + 1.0)));

  SchedulePreset p;
  p.which = which;
  switch (which) {
    case ScheduleCase::a:
      p.batch = b_ab;
      p.t_max = n;
      p.eta = c_eta * std::pow(nd, -(q + nu) / (q + nu + 1.0));
      break;
    case ScheduleCase::b:
      p.batch = b_ab;
      p.t_max = t_bc;
      p.eta = c_eta;
      break;
    case ScheduleCase::c:
      p.batch = n;
      p.t_max = t_bc;
      p.eta = c_eta;
      break;
    case ScheduleCase::d:
      p.batch = 1;
      p.t_max = robust_ceil(std::pow(nd, (q + nu + 2.0) / (q + nu + 1.0)));
      p.eta = c_eta / nd;
      break;
  }
  p.batch = std::max<std::size_t>(1, p.batch);
  p.t_max = std::max<std::size_t>(1, p.t_max);
  p.passes = robust_ceil(static_cast<double>(p.batch) * static_cast<double>(p.t_max) / nd);
  return p;
}

double gd_rate_exponent(double r, double nu, double u) {
  const double rr = std::min(r, 0.5);
  return (rr + u) / (2.0 * rr + nu + 1.0);
}

double sgd_rate_exponent(double r, double nu, double u) {
  const double q = saturated_smoothness(r);
  return (q + 2.0 * u) / (q + nu + 1.0);
}

}  // namespace invlearn
