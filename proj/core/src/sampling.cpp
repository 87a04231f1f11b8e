#include "invlearn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "invlearn/errors.hpp"
#include "invlearn/tangent.hpp"

namespace invlearn {

void SampleSet::validate() const {
  if (m < 1) throw ContractError("SampleSet: m must be at least 1");
  if (ys.size() != static_cast<Eigen::Index>(xs.size()) * m) throw ContractError("SampleSet: xs and ys disagree");
  for (double x : xs) {
    if (!(x >= 0.0 && x <= 1.0)) throw ContractError("SampleSet: design point outside [0, 1]");
  }
  if (!ys.allFinite()) throw ContractError("SampleSet: non-finite output");
}

void write_csv(const SampleSet& s, const std::filesystem::path& path) {
  s.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "# seed=" << s.seed << " stream=" << s.stream << " model=" << s.fingerprint << '\n';
  out << 'x';
  for (int c = 1; c <= s.m; ++c) out << ",y_" << c;
  out << '\n' << std::setprecision(17);
  for (std::size_t j = 0; j < s.size(); ++j) {
    out << s.xs[j];
    for (int c = 0; c < s.m; ++c) out << ',' << s.ys(static_cast<Eigen::Index>(j) * s.m + c);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

SampleSet read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  SampleSet s;
  std::string line;
  std::vector<double> ys;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream is(line.substr(1));
      std::string tok;
      while (is >> tok) {
        if (tok.rfind("seed=", 0) == 0) s.seed = std::stoull(tok.substr(5));
        else if (tok.rfind("stream=", 0) == 0) s.stream = std::stoull(tok.substr(7));
        else if (tok.rfind("model=", 0) == 0) s.fingerprint = tok.substr(6);
      }
      continue;
    }
    if (!header) {
      s.m = static_cast<int>(std::count(line.begin(), line.end(), ','));
      header = true;
      continue;
    }
    std::istringstream is(line);
    std::string cell;
    std::getline(is, cell, ',');
    s.xs.push_back(std::stod(cell));
    for (int c = 0; c < s.m; ++c) {
      if (!std::getline(is, cell, ',')) throw ContractError("read_csv: short row in " + path.string());
      ys.push_back(std::stod(cell));
    }
  }
  s.ys = Eigen::Map<const Vector>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  s.validate();
  return s;
}

void NoiseModel::validate() const {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw DomainError("noise scale must be finite and nonnegative");
}

double NoiseModel::draw(RngStream& rng) const {
  switch (kind) {
    case NoiseKind::none:
      return 0.0;
    case NoiseKind::uniform_bounded:
      return rng.uniform(-scale, scale);
    case NoiseKind::truncated_gaussian:
      for (;;) {
        const double z = rng.normal();
        if (std::abs(z) <= 4.0) return scale * z;
      }
  }
  return 0.0;
}

double NoiseModel::bound() const {
  switch (kind) {
    case NoiseKind::none: return 0.0;
    case NoiseKind::uniform_bounded: return scale;
    case NoiseKind::truncated_gaussian: return 4.0 * scale;
  }
  return 0.0;
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::uniform_bounded: return "uniform-bounded";
    case NoiseKind::truncated_gaussian: return "truncated-gaussian";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "none") return NoiseKind::none;
  if (s == "uniform-bounded") return NoiseKind::uniform_bounded;
  if (s == "truncated-gaussian") return NoiseKind::truncated_gaussian;
  throw ConfigError("unknown noise kind '" + s + "' (expected none | uniform-bounded | truncated-gaussian)");
}

std::vector<double> draw_design(std::size_t n, RngStream& rng) {
  if (n == 0) throw ContractError("draw_design: n must be positive");
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.uniform();
  return xs;
}

TruthSpec make_truth(const ForwardModel& model, const ParamVector& f_dagger, double r,
                     const ParamVector& g_direction, double D, const QuadratureGrid& grid) {
  if (!(r >= 0.0)) throw DomainError("make_truth: r must be nonnegative");
  if (!(D > 0.0)) throw DomainError("make_truth: D must be positive");
  const double gnorm = g_direction.norm();
  if (!(gnorm > 0.0)) throw DomainError("make_truth: g direction must be nonzero");
  model.check_domain(f_dagger);

  TruthSpec t;
  t.f_dagger = f_dagger;
  t.r = r;
  t.D = D;
  t.t_pop = sym_eig(population_T(model, f_dagger, grid));
  t.g = g_direction * (D / gnorm);
  t.f1 = f_dagger - apply_frac_power(t.t_pop, r, t.g);
  if (!model.in_domain(t.f1) || (t.f1 - f_dagger).norm() > model.constants().ball_radius) {
    throw DomainError("source construction infeasible: reduce D");
  }
  return t;
}

ParamVector critical_source_direction(const SpectralDecomposition& t, RngStream& rng) {
  Vector coef(t.size());
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    coef(j) = sign / std::sqrt(static_cast<double>(j + 1));
  }
  ParamVector g = t.eigenvectors * coef;
  return g / g.norm();
}

SampleSet generate_samples(const ForwardModel& model, const ParamVector& f_dagger, const NoiseModel& noise,
                           std::size_t n, RngStream& rng) {
  noise.validate();
  model.check_domain(f_dagger);
  SampleSet s;
  s.seed = rng.seed();
  s.stream = rng.stream_id();
  s.m = model.output_dim();
  s.fingerprint = model.fingerprint();
  s.xs = draw_design(n, rng);
  s.ys = model.apply(f_dagger, s.xs);
  for (Eigen::Index i = 0; i < s.ys.size(); ++i) s.ys(i) += noise.draw(rng);
  return s;
}

BernsteinConstants bernstein_constants(const ForwardModel& model, const ParamVector& f_dagger,
                                       const NoiseModel& noise, const QuadratureGrid& grid) {
  const Vector out = model.apply(f_dagger, grid.nodes());
  const double sup = out.size() > 0 ? out.cwiseAbs().maxCoeff() : 0.0;
  BernsteinConstants c;
  c.M = std::max(noise.bound(), sup);
  c.Sigma = 2.0 * c.M;
  return c;
}

BernsteinReport verify_bernstein(const NoiseModel& noise, double M, double Sigma, int l_max, std::size_t samples,
                                 RngStream& rng) {
  if (l_max < 2) throw DomainError("verify_bernstein: l_max must be at least 2");
  if (samples < 2) throw DomainError("verify_bernstein: need at least two samples");
  noise.validate();
  const auto L = static_cast<std::size_t>(l_max - 1);
  std::vector<double> sum(L, 0.0);
  std::vector<double> sum_sq(L, 0.0);
  for (std::size_t k = 0; k < samples; ++k) {
    const double a = std::abs(noise.draw(rng));
    double pw = a;
    for (std::size_t i = 0; i < L; ++i) {
      pw *= a;  // a^(i + 2)
      sum[i] += pw;
      sum_sq[i] += pw * pw;
    }
  }
  BernsteinReport rep;
  const double ns = static_cast<double>(samples);
  for (std::size_t i = 0; i < L; ++i) {
    const int l = static_cast<int>(i) + 2;
    BernsteinMoment mom;
    mom.l = l;
    mom.estimate = sum[i] / ns;
    const double var = std::max(0.0, sum_sq[i] / ns - mom.estimate * mom.estimate) * ns / (ns - 1.0);
    mom.std_error = std::sqrt(var / ns);
    mom.bound = 0.5 * std::tgamma(l + 1.0) * Sigma * Sigma * std::pow(M, l - 2);
    mom.pass = mom.estimate + 2.0 * mom.std_error <= mom.bound;
    rep.pass = rep.pass && mom.pass;
    rep.moments.push_back(mom);
  }
  return rep;
}

}  // namespace invlearn
