#include "invlearn/harness/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "invlearn/harness/svg_plot.hpp"

namespace invlearn::harness {
namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

void write_rows(std::ostream& out, const std::vector<ReplicateResult>& rows, bool deterministic) {
  for (const auto& r : rows) {
    out << r.n << ',' << r.rep << ',' << r.err_u0 << ',' << r.err_u05 << ',' << r.err_pred << ',' << r.t_stop << ','
        << (r.in_ball ? 1 : 0) << ',' << (deterministic ? 0 : r.wall_ns) << '\n';
  }
}

void check_written(const std::ofstream& out, const fs::path& path) {
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

nlohmann::json summary_json(const StudyReport& report) {
  nlohmann::json j;
  j["kind"] = report.kind;
  j["seed"] = report.seed;
  j["pass"] = report.pass;
  j["config"] = report.config;
  j["warnings"] = report.warnings;
  j["extra"] = report.extra;
  j["fits"] = nlohmann::json::array();
  for (const auto& f : report.fits) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : f.points) {
      pts.push_back({{"n", p.n},
                     {"mean", p.mean},
                     {"sd", p.sd},
                     {"mean_error", p.mean_err},
                     {"eta", p.eta},
                     {"batch", p.batch},
                     {"t_stop", p.t_stop},
                     {"passes", p.passes},
                     {"used", p.used},
                     {"excluded", p.excluded}});
    }
    j["fits"].push_back({{"label", f.label},
                         {"quantity", f.squared ? "mean squared error" : "mean error"},
                         {"exponent", f.exponent},
                         {"expected_slope", f.expected_slope},
                         {"slope", f.fit.slope},
                         {"slope_se", f.fit.slope_se},
                         {"intercept", f.fit.intercept},
                         {"tolerance", f.tolerance},
                         {"excluded", f.excluded},
                         {"total", f.total},
                         {"pass", f.pass()},
                         {"points", pts}});
  }
  return j;
}

void emit_report(const StudyReport& report, const fs::path& dir, bool deterministic) {
  std::error_code ec;
  fs::create_directories(dir / "plots", ec);
  if (ec) throw std::runtime_error("cannot create " + (dir / "plots").string() + ": " + ec.message());

  {
    const auto path = dir / "results.csv";
    auto out = open_out(path);
    out << kResultsHeader << '\n';
    for (const auto& s : report.series) write_rows(out, s.rows, deterministic);
    check_written(out, path);
  }
  if (report.series.size() > 1) {
    for (const auto& s : report.series) {
      const auto path = dir / ("results_" + s.label + ".csv");
      auto out = open_out(path);
      out << kResultsHeader << '\n';
      write_rows(out, s.rows, deterministic);
      check_written(out, path);
    }
  }
  {
    const auto path = dir / "timing.csv";
    auto out = open_out(path);
    out << "series,n,rep,wall_ns\n";
    for (const auto& s : report.series) {
      for (const auto& r : s.rows) out << s.label << ',' << r.n << ',' << r.rep << ',' << r.wall_ns << '\n';
    }
    check_written(out, path);
  }
  const auto summary = summary_json(report);
  {
    const auto path = dir / "summary.json";
    auto out = open_out(path);
    out << summary.dump(2) << '\n';
    check_written(out, path);
  }
  if (report.extra.contains("concentration")) {
    const auto path = dir / "concentration.csv";
    auto out = open_out(path);
    out << "lambda,in_range,upsilon,bound_upsilon,psi,bound_psi,theta,bound_theta,xi_half,bound_xi_half,xi_one,"
           "bound_xi_one,pass\n";
    for (const auto& r : report.extra["concentration"]["rows"]) {
      out << r["lambda"].get<double>() << ',' << (r["in_range"].get<bool>() ? 1 : 0) << ','
          << r["upsilon"].get<double>() << ',' << r["bound_upsilon"].get<double>() << ',' << r["psi"].get<double>()
          << ',' << r["bound_psi"].get<double>() << ',' << r["theta"].get<double>() << ','
          << r["bound_theta"].get<double>() << ',' << r["xi_half"].get<double>() << ','
          << r["bound_xi_half"].get<double>() << ',' << r["xi_one"].get<double>() << ','
          << r["bound_xi_one"].get<double>() << ',' << (r["pass"].get<bool>() ? 1 : 0) << '\n';
    }
    check_written(out, path);
  }
  render_plots(summary, dir);
}

void render_plots(const nlohmann::json& summary, const fs::path& dir) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::error_code ec;
  fs::create_directories(dir / "plots", ec);
  if (ec) throw std::runtime_error("cannot create " + (dir / "plots").string() + ": " + ec.message());
  if (!summary.contains("fits")) return;
  std::size_t k = 0;
  for (const auto& f : summary["fits"]) {
    const std::string color = kColors[k++ % 5];
    std::vector<double> ns;
    std::vector<double> means;
    for (const auto& p : f["points"]) {
      if (p["used"].get<std::size_t>() == 0) continue;
      ns.push_back(p["n"].get<double>());
      means.push_back(p["mean"].get<double>());
    }
    if (ns.size() < 2) continue;
    const double slope = f["slope"].get<double>();
    const double intercept = f["intercept"].get<double>();
    const double expected = f["expected_slope"].get<double>();
    // Theoretical line through the fitted value at the geometric centre of the grid.
    double centre = 0.0;
    for (double n : ns) centre += std::log(n);
    centre /= static_cast<double>(ns.size());
    const double anchor = intercept + slope * centre;
    const std::vector<double> ends{ns.front(), ns.back()};
    std::vector<double> fitted;
    std::vector<double> theory;
    for (double n : ends) {
      fitted.push_back(std::exp(intercept + slope * std::log(n)));
      theory.push_back(std::exp(anchor + expected * (std::log(n) - centre)));
    }
    std::ostringstream fl;
    fl << std::setprecision(3) << "fit " << slope;
    std::ostringstream tl;
    tl << std::setprecision(3) << "theory " << expected;
    const std::string label = f["label"].get<std::string>();
    std::vector<PlotSeries> series{{label, ns, means, true, color, false},
                                   {fl.str(), ends, fitted, false, color, false},
                                   {tl.str(), ends, theory, false, "#555555", true}};
    write_loglog_svg(dir / "plots" / ("rate_" + label + ".svg"),
                     summary.value("kind", std::string("study")) + ": " + label, "n",
                     f["quantity"].get<std::string>(), series);
  }
}

void print_summary(const nlohmann::json& summary, std::ostream& os) {
  os << "study: " << summary.value("kind", std::string("?")) << "  seed: " << summary.value("seed", 0ULL)
     << "  verdict: " << (summary.value("pass", false) ? "PASS" : "FAIL") << '\n';
  if (summary.contains("fits")) {
    for (const auto& f : summary["fits"]) {
      os << std::setprecision(4) << "  " << f["label"].get<std::string>() << ": slope " << f["slope"].get<double>()
         << " +- " << f["slope_se"].get<double>() << " (expected " << f["expected_slope"].get<double>() << " +- "
         << f["tolerance"].get<double>() << ", " << f["quantity"].get<std::string>() << ", excluded "
         << f["excluded"].get<std::size_t>() << "/" << f["total"].get<std::size_t>() << ") "
         << (f["pass"].get<bool>() ? "PASS" : "FAIL") << '\n';
    }
  }
  const auto& extra = summary.contains("extra") ? summary["extra"] : nlohmann::json::object();
  if (extra.contains("descent")) {
    for (const auto& d : extra["descent"]) {
      os << "  n=" << d["n"].get<std::size_t>() << " T_n=" << d["T_n"].get<std::size_t>()
         << " monotone=" << d["fraction_monotone"].get<double>()
         << " contained=" << d["fraction_contained"].get<double>() << ' ' << (d["pass"].get<bool>() ? "PASS" : "FAIL")
         << '\n';
    }
  }
  if (extra.contains("error_ratio_at_largest_n")) {
    os << "  error ratio across cases at n=" << extra["largest_n"].get<std::size_t>() << ": "
       << extra["error_ratio_at_largest_n"].get<double>() << '\n';
  }
  if (extra.contains("concentration")) {
    for (const auto& r : extra["concentration"]["rows"]) {
      os << std::setprecision(4) << "  lambda=" << r["lambda"].get<double>() << " |Upsilon| "
         << r["upsilon"].get<double>() << "<=" << r["bound_upsilon"].get<double>() << "  Psi "
         << r["psi"].get<double>() << "<=" << r["bound_psi"].get<double>() << "  Theta " << r["theta"].get<double>()
         << "<=" << r["bound_theta"].get<double>() << "  Xi^1 " << r["xi_one"].get<double>()
         << "<=" << r["bound_xi_one"].get<double>() << ' ' << (r["pass"].get<bool>() ? "PASS" : "FAIL") << '\n';
    }
  }
  if (summary.contains("warnings")) {
    for (const auto& w : summary["warnings"]) os << "  warning: " << w.get<std::string>() << '\n';
  }
}

}  // namespace invlearn::harness
