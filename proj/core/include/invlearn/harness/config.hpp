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
#include "invlearn/schedule.hpp"

namespace invlearn::harness {

enum class SolverKind { gd, sgd };

/// Where the decay parameter nu used by T_n and the exponents comes from.
enum class NuSource { config, fit_tangent, fit_output_kernel };

/// Shape of the source element g before rescaling to norm D.
///  - critical: +-j^(-1/2) on the eigenvectors of T (random signs)
///  - random:   i.i.d. normal coefficients
///  - top:      top eigenvector of T
enum class GProfile { critical, random, top };

struct TruthConfig {
  double r = 0.5;
  double D = 1.0;
  std::uint64_t g_seed = 7;
  GProfile g_profile = GProfile::critical;
};

struct ConcentrationConfig {
  std::size_t n = 1024;
  double delta = 0.1;
  std::size_t reps = 100;
  std::size_t lambda_points = 5;
};

struct ExperimentConfig {
  ModelConfig model;
  TruthConfig truth;
  NoiseModel noise;
  std::vector<std::size_t> n_grid{256, 512, 1024, 2048, 4096};
  std::size_t replicates = 50;
  SolverKind solver = SolverKind::gd;
  std::vector<ScheduleCase> cases;
  std::optional<double> eta;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> t_max;
  double u = 0.0;
  double nu = 0.5;
  NuSource nu_source = NuSource::fit_tangent;
  double slope_tolerance = 0.15;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  std::size_t quadrature_nodes = kDefaultQuadratureNodes;
  double extend_factor = 1.0;  // descent runs continue to extend_factor * T_n
  bool deterministic_output = true;  // results.csv carries wall_ns = 0
  std::optional<std::size_t> record_every;
  ConcentrationConfig concentration;
};

/// Reads and validates a JSON config. Unknown keys and type mismatches raise
/// ConfigError naming the key and the expected type.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Structural checks plus the step cap of the configured model (the error
/// message prints the cap).
void validate(const ExperimentConfig& cfg);

/// Configuration written by `invlearn gen`.
ExperimentConfig sample_config();

std::string to_string(SolverKind s);
std::string to_string(NuSource s);
std::string to_string(GProfile g);

}  // namespace invlearn::harness
