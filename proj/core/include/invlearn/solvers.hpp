#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "invlearn/forward_model.hpp"
#include "invlearn/sampling.hpp"

namespace invlearn {

/// What to do when an iterate leaves D(A).
enum class DomainPolicy { reject, project };

class SolverConfig {
 public:
  /// Throws DomainError unless 0 < eta < 1 / kappa1^2.
  SolverConfig(double eta, std::size_t t_max, const OperatorConstants& constants);

  SolverConfig& with_batch(std::size_t b);
  SolverConfig& with_seed(std::uint64_t seed, std::uint64_t stream = 0);
  SolverConfig& with_record_every(std::size_t k);
  SolverConfig& with_policy(DomainPolicy p);

  double eta() const noexcept { return eta_; }
  std::size_t t_max() const noexcept { return t_max_; }
  std::size_t batch() const noexcept { return batch_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::size_t record_every() const noexcept { return record_every_; }
  DomainPolicy policy() const noexcept { return policy_; }
  double ball_radius() const noexcept { return ball_radius_; }

 private:
  double eta_;
  std::size_t t_max_;
  std::size_t batch_ = 1;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::size_t record_every_ = 1;
  DomainPolicy policy_ = DomainPolicy::reject;
  double ball_radius_;
};

struct IterationRecord {
  std::size_t t = 0;
  double err_u0 = 0.0;   // ||g_t - f_dagger||
  double err_u05 = 0.0;  // ||T^(1/2) (g_t - f_dagger)||
  bool in_ball = true;
  std::int64_t wall_ns = 0;  // since the start of the run
};

struct Snapshot {
  std::size_t t = 0;
  ParamVector f;
};

enum class RunStatus { completed, domain_exit };

struct RunMeta {
  std::string label;
  std::size_t t_n = 0;
  std::size_t batch = 0;
  double eta = 0.0;
};

struct RunRecord {
  std::vector<IterationRecord> trace;
  std::vector<Snapshot> snapshots;
  RunStatus status = RunStatus::completed;
  std::string message;
  std::optional<std::size_t> first_exit;  // first t with g_t outside the ball
  RunMeta meta;
  ParamVector final_iterate;
  std::size_t final_t = 0;

  bool stayed_in_ball() const { return !first_exit.has_value(); }
  /// ||g_t - f_dagger|| nonincreasing over the trace.
  bool monotone_u0() const;

  void write_csv(const std::filesystem::path& path) const;
  nlohmann::json meta_json() const;
};

/// Iterates g_1 = f1 through g_{t_max}. Each step
///   g_{t+1} = g_t - eta (1/n) sum_j (S_{x_j} A'(g_t))^* (A(g_t)(x_j) - y_j).
/// With a truth, both error norms are recorded every record_every
/// iterations and at the last one; otherwise they are NaN.
/// Throws DivergenceError when an iterate is non-finite or its norm
/// exceeds 1e6 (1 + ||f1||).
RunRecord gd_run(const ForwardModel& model, const SampleSet& data, const ParamVector& f1, const SolverConfig& cfg,
                 const TruthSpec* truth = nullptr);

/// Mini-batch SGD: each step draws b indices i.i.d. uniform over the
/// sample (with replacement) and uses step eta / b times the summed
/// per-sample gradients.
RunRecord sgd_run(const ForwardModel& model, const SampleSet& data, const ParamVector& f1, const SolverConfig& cfg,
                  const TruthSpec* truth = nullptr);

}  // namespace invlearn
