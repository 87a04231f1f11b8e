// invlearn: experiment driver for early-stopped GD / mini-batch SGD on
// nonlinear inverse learning problems.
//
//   invlearn gen [--out DIR]
//   invlearn run|descent|schedules|concentration --config PATH [--jobs N] [--seed U64] [--out DIR]
//   invlearn report --out DIR
//
// Exit status: 0 verdict pass, 2 verdict fail, 1 error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "invlearn/errors.hpp"
#include "invlearn/harness/config.hpp"
#include "invlearn/harness/report.hpp"
#include "invlearn/harness/study.hpp"

namespace fs = std::filesystem;
using namespace invlearn::harness;

namespace {

struct Options {
  std::string config;
  std::size_t jobs = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_study(const std::string& which, const Options& opt) {
  if (opt.config.empty()) throw invlearn::ConfigError("--config is required for '" + which + "'");
  ExperimentConfig cfg = parse_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  const std::size_t jobs = opt.jobs > 0 ? opt.jobs : std::max(1u, std::thread::hardware_concurrency());

  StudyReport rep;
  if (which == "run") rep = rate_study(cfg, jobs);
  else if (which == "descent") rep = descent_profile(cfg, jobs);
  else if (which == "schedules") rep = schedule_study(cfg, jobs);
  else rep = concentration_study(cfg, jobs);

  emit_report(rep, cfg.output_dir, cfg.deterministic_output);
  print_summary(summary_json(rep), std::cout);
  std::cout << "wrote " << fs::path(cfg.output_dir).string() << '\n';
  return rep.pass ? 0 : 2;
}

int gen(const Options& opt) {
  const auto j = to_json(sample_config()).dump(2);
  if (opt.out.empty()) {
    std::cout << j << '\n';
    return 0;
  }
  fs::create_directories(opt.out);
  const auto path = fs::path(opt.out) / "config.json";
  std::ofstream out(path);
  if (!(out << j << '\n')) throw std::runtime_error("cannot write " + path.string());
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int report(const Options& opt) {
  if (opt.out.empty()) throw invlearn::ConfigError("--out DIR is required for 'report'");
  const auto path = fs::path(opt.out) / "summary.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto summary = nlohmann::json::parse(in);
  render_plots(summary, opt.out);
  print_summary(summary, std::cout);
  return summary.value("pass", false) ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early-stopped gradient methods for nonlinear inverse learning"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) sub->add_option("--config", opt.config, "experiment JSON")->check(CLI::ExistingFile);
    sub->add_option("--jobs", opt.jobs, "worker threads (default: hardware concurrency)");
    sub->add_option("--seed", opt.seed, "master seed override");
    sub->add_option("--out", opt.out, "output directory");
  };
  add_common(app.add_subcommand("gen", "print a sample config (or write DIR/config.json)"), false);
  add_common(app.add_subcommand("run", "rate study: error at T_n vs n"), true);
  add_common(app.add_subcommand("descent", "GD descent and ball containment profile"), true);
  add_common(app.add_subcommand("schedules", "mini-batch SGD schedule comparison"), true);
  add_common(app.add_subcommand("concentration", "sampling-error quantities vs their bounds"), true);
  add_common(app.add_subcommand("report", "re-render plots and print DIR/summary.json"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const std::string which = app.get_subcommands().front()->get_name();
    if (which == "gen") return gen(opt);
    if (which == "report") return report(opt);
    return run_study(which, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
