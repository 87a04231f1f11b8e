#include "invlearn/harness/study.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "invlearn/diagnostics.hpp"
#include "invlearn/errors.hpp"
#include "invlearn/schedule.hpp"
#include "invlearn/solvers.hpp"
#include "invlearn/tangent.hpp"

namespace invlearn::harness {
namespace {

constexpr double kMaxExcludedFraction = 0.2;

ParamVector source_direction(const TruthConfig& t, const SpectralDecomposition& d) {
  RngStream rng(t.g_seed, 0);
  switch (t.g_profile) {
    case GProfile::critical:
      return critical_source_direction(d, rng);
    case GProfile::random: {
      ParamVector g(d.size());
      for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.normal();
      return g;
    }
    case GProfile::top:
      return d.eigenvectors.col(0);
  }
  return d.eigenvectors.col(0);
}

// Run parameters of one series at one n.
struct Plan {
  double eta = 0.0;
  std::size_t batch = 0;
  std::size_t t_max = 0;
  std::size_t t_stop = 0;  // iteration at which errors are read
  std::size_t passes = 0;
};

Plan gd_plan(const ExperimentConfig& cfg, const StudyContext& ctx, std::size_t n) {
  Plan p;
  const double kappa1 = ctx.model->constants().kappa1();
  p.eta = cfg.eta ? *cfg.eta : schedule_preset(cfg.cases.front(), n, cfg.truth.r, ctx.nu, kappa1).eta;
  p.t_stop = cfg.t_max ? *cfg.t_max : stopping_time(n, cfg.truth.r, ctx.nu, p.eta);
  p.t_max = p.t_stop;
  p.batch = n;
  p.passes = p.t_stop;
  return p;
}

Plan sgd_plan(const ExperimentConfig& cfg, const StudyContext& ctx, std::size_t n, std::optional<ScheduleCase> which) {
  Plan p;
  if (which) {
    const auto preset = schedule_preset(*which, n, cfg.truth.r, ctx.nu, ctx.model->constants().kappa1());
    p.eta = preset.eta;
    p.batch = preset.batch;
    p.t_max = preset.t_max;
    p.passes = preset.passes;
  } else {
    p.eta = *cfg.eta;
    p.batch = std::min(*cfg.batch, n);
    p.t_max = *cfg.t_max;
    p.passes = (p.batch * p.t_max + n - 1) / n;
  }
  p.t_stop = p.t_max;
  return p;
}

double pred_error(const StudyContext& ctx, const DesignOperator& grid_op, const Vector& base, const ParamVector& f) {
  return l2_norm(ctx.grid, grid_op.apply(f) - base, ctx.model->output_dim());
}

// One replicate of a GD or SGD run; errors read at the last iterate.
ReplicateResult run_replicate(const ExperimentConfig& cfg, const StudyContext& ctx, const DesignOperator& grid_op,
                              const Vector& base, std::size_t n, std::size_t rep, const Plan& plan, bool sgd,
                              std::size_t series_index) {
  ReplicateResult res;
  res.n = n;
  res.rep = rep;
  res.t_stop = plan.t_stop;
  const auto start = std::chrono::steady_clock::now();
  try {
    RngStream data_rng = replicate_stream(cfg.seed, n, rep, Purpose::data);
    const SampleSet data = generate_samples(*ctx.model, ctx.truth.f_dagger, cfg.noise, n, data_rng);
    SolverConfig sc(plan.eta, plan.t_max, ctx.model->constants());
    sc.with_record_every(cfg.record_every.value_or(plan.t_max));
    RunRecord rec;
    if (sgd) {
      const RngStream solver_rng = replicate_stream(cfg.seed, n, rep, Purpose::solver);
      sc.with_batch(plan.batch).with_seed(solver_rng.seed(),
                                          RngStream::key({solver_rng.stream_id(), series_index}));
      rec = sgd_run(*ctx.model, data, ctx.truth.f1, sc, &ctx.truth);
    } else {
      rec = gd_run(*ctx.model, data, ctx.truth.f1, sc, &ctx.truth);
    }
    if (rec.status != RunStatus::completed) {
      res.excluded = true;
      res.note = rec.message;
    }
    const auto& last = rec.trace.back();
    res.err_u0 = last.err_u0;
    res.err_u05 = last.err_u05;
    res.err_pred = pred_error(ctx, grid_op, base, rec.final_iterate);
    res.t_stop = rec.final_t;
    res.in_ball = rec.stayed_in_ball();
  } catch (const DivergenceError& e) {
    res.excluded = true;
    res.note = e.what();
  }
  res.wall_ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
  return res;
}

SeriesFit summarize(const ExperimentConfig& cfg, const StudyContext& ctx, const Series& s,
                    const std::vector<Plan>& plans, bool squared) {
  SeriesFit fit;
  fit.label = s.label;
  fit.squared = squared;
  fit.exponent = squared ? sgd_rate_exponent(cfg.truth.r, ctx.nu, cfg.u) : gd_rate_exponent(cfg.truth.r, ctx.nu, cfg.u);
  fit.expected_slope = -fit.exponent;
  fit.tolerance = cfg.slope_tolerance;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    SeriesPoint pt;
    pt.n = cfg.n_grid[i];
    pt.eta = plans[i].eta;
    pt.batch = plans[i].batch;
    pt.t_stop = plans[i].t_stop;
    pt.passes = plans[i].passes;
    std::vector<double> vals;
    std::vector<double> norms;
    for (const auto& r : s.rows) {
      if (r.n != pt.n) continue;
      if (r.excluded) {
        ++pt.excluded;
        continue;
      }
      const double e = cfg.u == 0.0 ? r.err_u0 : r.err_u05;
      norms.push_back(e);
      vals.push_back(squared ? e * e : e);
    }
    pt.used = vals.size();
    fit.excluded += pt.excluded;
    fit.total += pt.used + pt.excluded;
    if (!vals.empty()) {
      pt.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
      pt.mean_err = std::accumulate(norms.begin(), norms.end(), 0.0) / static_cast<double>(norms.size());
      double ss = 0.0;
      for (double v : vals) ss += (v - pt.mean) * (v - pt.mean);
      pt.sd = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
      xs.push_back(static_cast<double>(pt.n));
      ys.push_back(pt.mean);
    }
    fit.points.push_back(pt);
  }
  fit.exclusion_pass =
      fit.total > 0 && static_cast<double>(fit.excluded) <= kMaxExcludedFraction * static_cast<double>(fit.total);
  if (xs.size() >= 2) {
    fit.fit = fit_loglog(xs, ys);
    fit.slope_pass = std::isfinite(fit.fit.slope) && std::abs(fit.fit.slope - fit.expected_slope) <= fit.tolerance;
  }
  return fit;
}

StudyReport base_report(const std::string& kind, const ExperimentConfig& cfg, const StudyContext& ctx) {
  StudyReport rep;
  rep.kind = kind;
  rep.config = to_json(cfg);
  rep.seed = cfg.seed;
  rep.extra["context"] = ctx.describe();
  return rep;
}

// Runs every (series, n, rep) task of a GD or SGD study.
void run_series(const ExperimentConfig& cfg, const StudyContext& ctx, std::size_t jobs, bool sgd,
                const std::vector<std::optional<ScheduleCase>>& cases, StudyReport& rep) {
  const auto grid_op = ctx.model->at(ctx.grid.nodes());
  const Vector base = grid_op->apply(ctx.truth.f_dagger);
  const std::size_t N = cfg.n_grid.size();
  const std::size_t R = cfg.replicates;

  std::vector<std::vector<Plan>> plans(cases.size());
  for (std::size_t c = 0; c < cases.size(); ++c) {
    for (std::size_t n : cfg.n_grid) plans[c].push_back(sgd ? sgd_plan(cfg, ctx, n, cases[c]) : gd_plan(cfg, ctx, n));
  }

  std::vector<ReplicateResult> results(cases.size() * N * R);
  parallel_for(results.size(), jobs, [&](std::size_t idx) {
    const std::size_t c = idx / (N * R);
    const std::size_t i = (idx / R) % N;
    const std::size_t r = idx % R;
    results[idx] = run_replicate(cfg, ctx, *grid_op, base, cfg.n_grid[i], r, plans[c][i], sgd, c);
  });

  for (std::size_t c = 0; c < cases.size(); ++c) {
    Series s;
    s.label = sgd ? (cases[c] ? "case-" + to_string(*cases[c]) : std::string("custom")) : std::string("gd");
    s.rows.assign(results.begin() + static_cast<std::ptrdiff_t>(c * N * R),
                  results.begin() + static_cast<std::ptrdiff_t>((c + 1) * N * R));
    rep.fits.push_back(summarize(cfg, ctx, s, plans[c], sgd));
    rep.series.push_back(std::move(s));
  }

  if (sgd) {
    for (std::size_t c = 0; c < cases.size(); ++c) {
      for (std::size_t i = 0; i < N; ++i) {
        const auto& p = plans[c][i];
        const double bound = min_batch_bound(p.eta, static_cast<double>(p.t_max), cfg.truth.r, ctx.nu);
        if (static_cast<double>(p.batch) * 2.0 < bound) {
          std::ostringstream os;
          os << rep.series[c].label << " at n=" << cfg.n_grid[i] << ": batch " << p.batch
             << " is below the mini-batch bound " << bound;
          rep.warnings.push_back(os.str());
        }
      }
    }
  }
}

std::vector<std::optional<ScheduleCase>> sgd_cases(const ExperimentConfig& cfg, bool all_by_default) {
  std::vector<std::optional<ScheduleCase>> out;
  for (auto c : cfg.cases) out.emplace_back(c);
  if (out.empty()) {
    if (all_by_default && !(cfg.eta && cfg.batch && cfg.t_max)) {
      for (auto c : {ScheduleCase::a, ScheduleCase::b, ScheduleCase::c, ScheduleCase::d}) out.emplace_back(c);
    } else {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("fit_loglog: need at least two paired points");
  const double k = static_cast<double>(x.size());
  std::vector<double> lx(x.size());
  std::vector<double> ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("fit_loglog: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / k;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - (f.intercept + f.slope * lx[i]);
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / (k - 2.0) / sxx);
  }
  return f;
}

nlohmann::json StudyContext::describe() const {
  const auto& c = model->constants();
  return {{"model", model->fingerprint()},
          {"kappa0", c.kappa0},
          {"lip", c.lip},
          {"kappa1", c.kappa1()},
          {"step_cap", c.step_cap()},
          {"alpha", c.alpha},
          {"ball_radius", c.ball_radius},
          {"nu", nu},
          {"source_norm", truth.D},
          {"initial_error", (truth.f1 - truth.f_dagger).norm()},
          {"t_top_eigenvalue", truth.t_pop.max_eigenvalue()}};
}

double resolve_nu(const ExperimentConfig& cfg, const ForwardModel& model, const SpectralDecomposition& t_pop,
                  const QuadratureGrid& grid) {
  switch (cfg.nu_source) {
    case NuSource::config:
      return cfg.nu;
    case NuSource::fit_tangent:
      return fit_decay(t_pop).nu_hat;
    case NuSource::fit_output_kernel:
      if (model.kind() == ModelKind::diffusion_pde) {
        throw ConfigError("nu_source 'fit-output-kernel' needs an integral model");
      }
      return fit_decay(sym_eig(kernel_operator(model.config().kernel, grid))).nu_hat;
  }
  return cfg.nu;
}

StudyContext prepare_context(const ExperimentConfig& cfg) {
  validate(cfg);
  ModelPtr model = make_model(cfg.model);
  QuadratureGrid grid = quadrature_grid(cfg.quadrature_nodes);
  const ParamVector f_dagger = model->default_truth();
  const auto t_pop = sym_eig(population_T(*model, f_dagger, grid));
  const double nu = resolve_nu(cfg, *model, t_pop, grid);
  if (!(nu > 0.0 && nu < 1.0)) {
    std::ostringstream os;
    os << "decay parameter nu = " << nu << " is outside (0, 1)";
    throw ConfigError(os.str());
  }
  TruthSpec truth = make_truth(*model, f_dagger, cfg.truth.r, source_direction(cfg.truth, t_pop), cfg.truth.D, grid);
  return StudyContext{std::move(model), std::move(grid), std::move(truth), nu};
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

RngStream replicate_stream(std::uint64_t seed, std::size_t n, std::size_t rep, Purpose purpose) {
  return RngStream(seed, RngStream::key({n, rep, static_cast<std::uint64_t>(purpose)}));
}

StudyReport rate_study(const ExperimentConfig& cfg, std::size_t jobs) {
  const StudyContext ctx = prepare_context(cfg);
  StudyReport rep = base_report("rate", cfg, ctx);
  if (cfg.n_grid.size() < 4) rep.warnings.push_back("rate study with fewer than 4 sample sizes");
  if (cfg.replicates < 10) rep.warnings.push_back("rate study with fewer than 10 replicates");
  const bool sgd = cfg.solver == SolverKind::sgd;
  run_series(cfg, ctx, jobs, sgd, sgd ? sgd_cases(cfg, false) : std::vector<std::optional<ScheduleCase>>{std::nullopt},
             rep);
  rep.pass = std::all_of(rep.fits.begin(), rep.fits.end(), [](const SeriesFit& f) { return f.pass(); });
  return rep;
}

StudyReport descent_profile(const ExperimentConfig& cfg, std::size_t jobs) {
  if (cfg.solver != SolverKind::gd) throw ConfigError("descent profile requires solver \"gd\"");
  const StudyContext ctx = prepare_context(cfg);
  StudyReport rep = base_report("descent", cfg, ctx);
  const auto grid_op = ctx.model->at(ctx.grid.nodes());
  const Vector base = grid_op->apply(ctx.truth.f_dagger);
  const std::size_t N = cfg.n_grid.size();
  const std::size_t R = cfg.replicates;

  struct Outcome {
    ReplicateResult row;
    bool monotone = false;
    bool contained = false;
    std::optional<std::size_t> first_violation;
    std::optional<std::size_t> upturn;  // argmin of ||e_t|| when the extended run turns up again
  };
  std::vector<Outcome> out(N * R);
  parallel_for(out.size(), jobs, [&](std::size_t idx) {
    const std::size_t i = idx / R;
    const std::size_t r = idx % R;
    const std::size_t n = cfg.n_grid[i];
    const Plan plan = gd_plan(cfg, ctx, n);
    const auto t_ext = static_cast<std::size_t>(std::ceil(cfg.extend_factor * static_cast<double>(plan.t_stop)));
    Outcome o;
    o.row.n = n;
    o.row.rep = r;
    o.row.t_stop = plan.t_stop;
    const auto start = std::chrono::steady_clock::now();
    try {
      RngStream data_rng = replicate_stream(cfg.seed, n, r, Purpose::data);
      const SampleSet data = generate_samples(*ctx.model, ctx.truth.f_dagger, cfg.noise, n, data_rng);
      SolverConfig sc(plan.eta, t_ext, ctx.model->constants());
      sc.with_record_every(1);
      const RunRecord rec = gd_run(*ctx.model, data, ctx.truth.f1, sc, &ctx.truth);
      o.row.excluded = rec.status != RunStatus::completed;
      o.row.note = rec.message;
      o.monotone = true;
      const IterationRecord* at_stop = &rec.trace.front();
      for (std::size_t k = 0; k < rec.trace.size(); ++k) {
        const auto& it = rec.trace[k];
        if (it.t <= plan.t_stop) at_stop = &it;
        if (k > 0 && it.t <= plan.t_stop && it.err_u0 > rec.trace[k - 1].err_u0 && o.monotone) {
          o.monotone = false;
          o.first_violation = it.t;
        }
      }
      o.contained = !rec.first_exit || *rec.first_exit > plan.t_stop;
      o.monotone = o.monotone && !o.row.excluded && at_stop->t == plan.t_stop;
      o.row.err_u0 = at_stop->err_u0;
      o.row.err_u05 = at_stop->err_u05;
      o.row.in_ball = o.contained;
      o.row.err_pred = pred_error(ctx, *grid_op, base, rec.snapshots[static_cast<std::size_t>(at_stop - rec.trace.data())].f);
      if (t_ext > plan.t_stop) {
        const auto best = std::min_element(rec.trace.begin(), rec.trace.end(),
                                           [](const auto& a, const auto& b) { return a.err_u0 < b.err_u0; });
        if (best->t < rec.trace.back().t && rec.trace.back().err_u0 > best->err_u0 * (1.0 + 1e-9)) {
          o.upturn = best->t;
        }
      }
    } catch (const DivergenceError& e) {
      o.row.excluded = true;
      o.row.note = e.what();
    }
    o.row.wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    out[idx] = std::move(o);
  });

  Series s;
  s.label = "gd";
  nlohmann::json per_n = nlohmann::json::array();
  rep.pass = true;
  for (std::size_t i = 0; i < N; ++i) {
    std::size_t mono = 0;
    std::size_t cont = 0;
    std::size_t upturns = 0;
    nlohmann::json violations = nlohmann::json::array();
    for (std::size_t r = 0; r < R; ++r) {
      const auto& o = out[i * R + r];
      mono += o.monotone ? 1 : 0;
      cont += o.contained && !o.row.excluded ? 1 : 0;
      upturns += o.upturn ? 1 : 0;
      if (o.first_violation) violations.push_back({{"rep", r}, {"t", *o.first_violation}});
      s.rows.push_back(o.row);
    }
    const double fm = static_cast<double>(mono) / static_cast<double>(R);
    const double fc = static_cast<double>(cont) / static_cast<double>(R);
    const bool ok = fm >= 0.9 && fc >= 0.9;
    rep.pass = rep.pass && ok;
    per_n.push_back({{"n", cfg.n_grid[i]},
                     {"T_n", gd_plan(cfg, ctx, cfg.n_grid[i]).t_stop},
                     {"fraction_monotone", fm},
                     {"fraction_contained", fc},
                     {"first_violations", violations},
                     {"replicates_with_upturn", upturns},
                     {"pass", ok}});
  }
  rep.series.push_back(std::move(s));
  rep.extra["descent"] = per_n;
  return rep;
}

StudyReport schedule_study(const ExperimentConfig& cfg_in, std::size_t jobs) {
  ExperimentConfig cfg = cfg_in;
  cfg.solver = SolverKind::sgd;
  const StudyContext ctx = prepare_context(cfg);
  StudyReport rep = base_report("schedules", cfg, ctx);
  run_series(cfg, ctx, jobs, true, sgd_cases(cfg, true), rep);

  nlohmann::json cases = nlohmann::json::array();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double lo_sq = std::numeric_limits<double>::infinity();
  double hi_sq = 0.0;
  for (std::size_t c = 0; c < rep.fits.size(); ++c) {
    const auto& f = rep.fits[c];
    const auto& last = f.points.back();
    lo = std::min(lo, last.mean_err);
    hi = std::max(hi, last.mean_err);
    lo_sq = std::min(lo_sq, last.mean);
    hi_sq = std::max(hi_sq, last.mean);
    nlohmann::json passes = nlohmann::json::array();
    for (const auto& p : f.points) passes.push_back({{"n", p.n}, {"batch", p.batch}, {"T", p.t_stop}, {"eta", p.eta}, {"passes", p.passes}});
    nlohmann::json entry = {{"label", f.label}, {"final_mean_error", last.mean_err},
                            {"final_mean_squared_error", last.mean}, {"schedule", passes}};
    if (!cfg.deterministic_output) {
      std::int64_t total = 0;
      for (const auto& r : rep.series[c].rows) total += r.wall_ns;
      entry["wall_ms"] = static_cast<double>(total) / 1e6;
    }
    cases.push_back(entry);
  }
  const double ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  const double ratio_sq = lo_sq > 0.0 ? hi_sq / lo_sq : std::numeric_limits<double>::infinity();
  const bool agree = ratio <= 3.0;
  rep.extra["cases"] = cases;
  rep.extra["largest_n"] = cfg.n_grid.back();
  rep.extra["error_ratio_at_largest_n"] = ratio;
  rep.extra["squared_error_ratio_at_largest_n"] = ratio_sq;
  rep.extra["cases_agree_within_factor_3"] = agree;
  rep.pass = agree && std::all_of(rep.fits.begin(), rep.fits.end(), [](const SeriesFit& f) { return f.pass(); });
  return rep;
}

StudyReport concentration_study(const ExperimentConfig& cfg, std::size_t /*jobs*/) {
  const StudyContext ctx = prepare_context(cfg);
  StudyReport rep = base_report("concentration", cfg, ctx);
  const auto& cc = cfg.concentration;
  const auto lambdas = admissible_lambdas(cc.n, ctx.nu, cc.lambda_points);
  const RngStream rng(cfg.seed, RngStream::key({cc.n, 0, 3}));
  const auto conc = check_concentration(*ctx.model, ctx.truth.f_dagger, cfg.noise, cc.n, lambdas, cc.delta, cc.reps,
                                        rng, ctx.nu, ctx.grid);
  rep.extra["concentration"] = conc.to_json();
  rep.pass = conc.pass();
  return rep;
}

}  // namespace invlearn::harness
