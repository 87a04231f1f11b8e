#pragma once

#include <filesystem>
#include <ostream>

#include <nlohmann/json.hpp>

#include "invlearn/harness/study.hpp"

namespace invlearn::harness {

/// Column order of results.csv.
inline constexpr const char* kResultsHeader = "n,rep,err_u0,err_u05,err_pred,t_stop,in_ball,wall_ns";

nlohmann::json summary_json(const StudyReport& report);

/// Writes into `dir`:
///   results.csv        one row per (n, replicate) over all series; wall_ns is 0
///                      when `deterministic` so that reruns are byte-identical
///   results_<label>.csv per series when there is more than one
///   timing.csv         measured wall_ns per row
///   summary.json       slopes, exponents, verdicts, seeds
///   concentration.csv  lambda table (concentration studies)
///   plots/*.svg        log-log error vs n with fitted and theoretical lines
void emit_report(const StudyReport& report, const std::filesystem::path& dir, bool deterministic = true);

/// Regenerates plots/*.svg from an existing summary.json.
void render_plots(const nlohmann::json& summary, const std::filesystem::path& dir);

/// Human-readable digest of a summary.
void print_summary(const nlohmann::json& summary, std::ostream& os);

}  // namespace invlearn::harness
