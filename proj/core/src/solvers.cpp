#include "invlearn/solvers.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "invlearn/errors.hpp"

namespace invlearn {
namespace {

constexpr double kDivergenceFactor = 1e6;

using Clock = std::chrono::steady_clock;

class Tracker {
 public:
  Tracker(const ForwardModel& model, const ParamVector& f1, const SolverConfig& cfg, const TruthSpec* truth)
      : model_(model), cfg_(cfg), truth_(truth), guard_(kDivergenceFactor * (1.0 + f1.norm())),
        start_(Clock::now()) {
    if (truth_ != nullptr && truth_->f_dagger.size() != f1.size()) {
      throw ContractError("solver: truth and initial guess disagree in length");
    }
  }

  // Returns false when the run must stop (reject policy, domain exit).
  bool admit(std::size_t t, ParamVector& g, RunRecord& rec) {
    if (!g.allFinite() || g.norm() > guard_) {
      std::ostringstream os;
      os << "divergence at iteration " << t << ": iterate norm " << g.norm() << " exceeds guard " << guard_;
      throw DivergenceError(os.str(), t);
    }
    if (!model_.in_domain(g)) {
      if (cfg_.policy() == DomainPolicy::reject) {
        rec.status = RunStatus::domain_exit;
        std::ostringstream os;
        os << "iterate " << t << " left the domain";
        try {
          model_.check_domain(g);
        } catch (const DomainViolation& e) {
          os << ": " << e.what();
        }
        rec.message = os.str();
        return false;
      }
      g = model_.project_to_domain(g);
    }
    bool in_ball = true;
    if (truth_ != nullptr) in_ball = (g - truth_->f_dagger).norm() <= cfg_.ball_radius();
    if (!in_ball && !rec.first_exit) rec.first_exit = t;
    if (t == 1 || t % cfg_.record_every() == 0 || t == cfg_.t_max()) record(t, g, in_ball, rec);
    rec.final_iterate = g;
    rec.final_t = t;
    return true;
  }

 private:
  void record(std::size_t t, const ParamVector& g, bool in_ball, RunRecord& rec) const {
    IterationRecord it;
    it.t = t;
    it.in_ball = in_ball;
    it.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_).count();
    if (truth_ != nullptr) {
      const ParamVector e = g - truth_->f_dagger;
      it.err_u0 = e.norm();
      it.err_u05 = apply_frac_power(truth_->t_pop, 0.5, e).norm();
    } else {
      it.err_u0 = std::numeric_limits<double>::quiet_NaN();
      it.err_u05 = std::numeric_limits<double>::quiet_NaN();
    }
    rec.trace.push_back(it);
    rec.snapshots.push_back({t, g});
  }

  const ForwardModel& model_;
  const SolverConfig& cfg_;
  const TruthSpec* truth_;
  double guard_;
  Clock::time_point start_;
};

void check_inputs(const ForwardModel& model, const SampleSet& data, const ParamVector& f1) {
  data.validate();
  if (data.m != model.output_dim()) throw ContractError("solver: data and model output dimensions disagree");
  if (data.size() == 0) throw ContractError("solver: empty sample");
  model.check_domain(f1);
}

RunMeta meta_of(const SolverConfig& cfg, const char* label) {
  return RunMeta{label, cfg.t_max(), cfg.batch(), cfg.eta()};
}

}  // namespace

SolverConfig::SolverConfig(double eta, std::size_t t_max, const OperatorConstants& constants)
    : eta_(eta), t_max_(t_max), ball_radius_(constants.ball_radius) {
  constants.validate();
  const double cap = constants.step_cap();
  if (!(eta > 0.0) || !(eta < cap)) {
    std::ostringstream os;
    os << "step size eta = " << eta << " must lie in (0, 1/kappa1^2) = (0, " << cap << ")";
    throw DomainError(os.str());
  }
  if (t_max < 1) throw DomainError("t_max must be at least 1");
}

SolverConfig& SolverConfig::with_batch(std::size_t b) {
  if (b < 1) throw DomainError("batch size must be at least 1");
  batch_ = b;
  return *this;
}

SolverConfig& SolverConfig::with_seed(std::uint64_t seed, std::uint64_t stream) {
  seed_ = seed;
  stream_ = stream;
  return *this;
}

SolverConfig& SolverConfig::with_record_every(std::size_t k) {
  if (k < 1) throw DomainError("record_every must be at least 1");
  record_every_ = k;
  return *this;
}

SolverConfig& SolverConfig::with_policy(DomainPolicy p) {
  policy_ = p;
  return *this;
}

bool RunRecord::monotone_u0() const {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].err_u0 > trace[i - 1].err_u0) return false;
  }
  return true;
}

void RunRecord::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "t,err_u0,err_u05,in_ball,wall_ns\n" << std::setprecision(17);
  for (const auto& it : trace) {
    out << it.t << ',' << it.err_u0 << ',' << it.err_u05 << ',' << (it.in_ball ? 1 : 0) << ',' << it.wall_ns
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

nlohmann::json RunRecord::meta_json() const {
  nlohmann::json j;
  j["label"] = meta.label;
  j["T_n"] = meta.t_n;
  j["batch"] = meta.batch;
  j["eta"] = meta.eta;
  j["status"] = status == RunStatus::completed ? "completed" : "domain_exit";
  j["message"] = message;
  j["final_t"] = final_t;
  j["first_exit"] = first_exit ? nlohmann::json(*first_exit) : nlohmann::json(nullptr);
  return j;
}

RunRecord gd_run(const ForwardModel& model, const SampleSet& data, const ParamVector& f1, const SolverConfig& cfg,
                 const TruthSpec* truth) {
  check_inputs(model, data, f1);
  const auto op = model.at(data.xs);
  const std::vector<double> weights(data.size(), 1.0 / static_cast<double>(data.size()));

  RunRecord rec;
  rec.meta = meta_of(cfg, "gd");
  Tracker tracker(model, f1, cfg, truth);
  ParamVector g = f1;
  if (!tracker.admit(1, g, rec)) return rec;
  for (std::size_t t = 1; t < cfg.t_max(); ++t) {
    const Vector residual = op->apply(g) - data.ys;
    g -= cfg.eta() * op->jac_adjoint(g, weights, residual);
    if (!tracker.admit(t + 1, g, rec)) break;
  }
  return rec;
}

RunRecord sgd_run(const ForwardModel& model, const SampleSet& data, const ParamVector& f1, const SolverConfig& cfg,
                  const TruthSpec* truth) {
  check_inputs(model, data, f1);
  const std::size_t n = data.size();
  const std::size_t b = cfg.batch();
  if (b > n) throw DomainError("sgd_run: batch size exceeds the sample size");
  const auto op = model.at(data.xs);
  const int m = data.m;
  RngStream rng(cfg.seed(), cfg.stream());

  RunRecord rec;
  rec.meta = meta_of(cfg, "sgd");
  Tracker tracker(model, f1, cfg, truth);
  ParamVector g = f1;
  if (!tracker.admit(1, g, rec)) return rec;
  std::vector<std::size_t> rows(b);
  Vector targets(static_cast<Eigen::Index>(b) * m);
  for (std::size_t t = 1; t < cfg.t_max(); ++t) {
    for (std::size_t i = 0; i < b; ++i) {
      rows[i] = rng.index(n);
      targets.segment(static_cast<Eigen::Index>(i) * m, m) =
          data.ys.segment(static_cast<Eigen::Index>(rows[i]) * m, m);
    }
    const Vector residual = op->apply_rows(g, rows) - targets;
    g -= cfg.eta() * op->jac_adjoint_rows(g, rows, 1.0 / static_cast<double>(b), residual);
    if (!tracker.admit(t + 1, g, rec)) break;
  }
  return rec;
}

}  // namespace invlearn
