#include "invlearn/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "invlearn/errors.hpp"

namespace invlearn::harness {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& expected) {
  throw ConfigError("config key '" + key + "': expected " + expected);
}

// Parsed text yields unsigned values, but json built in code may carry signed ones.
bool is_nonnegative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where.empty() ? "<root>" : where, "object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) {
      throw ConfigError("unknown config key '" + (where.empty() ? k : where + "." + k) + "'");
    }
  }
}

std::string path_of(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

double get_number(const json& obj, const std::string& where, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(path_of(where, key), "number");
  return v.get<double>();
}

std::size_t get_count(const json& obj, const std::string& where, const std::string& key, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!is_nonnegative_integer(v)) fail(path_of(where, key), "nonnegative integer");
  return v.get<std::size_t>();
}

std::uint64_t get_u64(const json& obj, const std::string& where, const std::string& key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!is_nonnegative_integer(v)) fail(path_of(where, key), "unsigned 64-bit integer");
  return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& where, const std::string& key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(path_of(where, key), "string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& where, const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) fail(path_of(where, key), "boolean");
  return v.get<bool>();
}

ModelConfig parse_model(const json& j) {
  const std::string w = "model";
  reject_unknown(j, w, {"kind", "p", "m", "kernel", "kernel_sigma", "beta", "a_min", "load", "ball_radius", "c_r",
                        "alpha"});
  ModelConfig m;
  m.kind = model_kind_from_string(get_string(j, w, "kind", to_string(m.kind)));
  m.p = static_cast<Eigen::Index>(get_count(j, w, "p", static_cast<std::size_t>(m.p)));
  m.m = static_cast<int>(get_count(j, w, "m", static_cast<std::size_t>(m.m)));
  m.kernel.kind = kernel_kind_from_string(get_string(j, w, "kernel", to_string(m.kernel.kind)));
  m.kernel.sigma = get_number(j, w, "kernel_sigma", m.kernel.sigma);
  m.beta = get_number(j, w, "beta", m.beta);
  m.a_min = get_number(j, w, "a_min", m.a_min);
  const std::string load = get_string(j, w, "load", "sine");
  if (load == "sine") m.load = LoadKind::sine;
  else if (load == "constant") m.load = LoadKind::constant;
  else fail("model.load", "\"sine\" or \"constant\"");
  if (j.contains("ball_radius")) m.ball_radius = get_number(j, w, "ball_radius", 0.0);
  if (j.contains("c_r")) m.c_r = get_number(j, w, "c_r", 0.0);
  if (j.contains("alpha")) m.alpha = get_number(j, w, "alpha", 0.0);
  return m;
}

GProfile g_profile_from_string(const std::string& s) {
  if (s == "critical") return GProfile::critical;
  if (s == "random") return GProfile::random;
  if (s == "top") return GProfile::top;
  fail("truth.g_profile", "\"critical\", \"random\" or \"top\"");
}

NuSource nu_source_from_string(const std::string& s) {
  if (s == "config") return NuSource::config;
  if (s == "fit-tangent") return NuSource::fit_tangent;
  if (s == "fit-output-kernel") return NuSource::fit_output_kernel;
  fail("nu_source", "\"config\", \"fit-tangent\" or \"fit-output-kernel\"");
}

}  // namespace

std::string to_string(SolverKind s) { return s == SolverKind::gd ? "gd" : "sgd"; }

std::string to_string(NuSource s) {
  switch (s) {
    case NuSource::config: return "config";
    case NuSource::fit_tangent: return "fit-tangent";
    case NuSource::fit_output_kernel: return "fit-output-kernel";
  }
  return "config";
}

std::string to_string(GProfile g) {
  switch (g) {
    case GProfile::critical: return "critical";
    case GProfile::random: return "random";
    case GProfile::top: return "top";
  }
  return "critical";
}

ExperimentConfig parse_config_json(const json& j) {
  reject_unknown(j, "", {"model", "truth", "noise", "n_grid", "replicates", "solver", "cases", "eta", "batch",
                         "t_max", "u", "nu", "nu_source", "slope_tolerance", "output_dir", "seed",
                         "quadrature_nodes", "extend_factor", "deterministic_output", "record_every",
                         "concentration"});
  ExperimentConfig c;
  if (j.contains("model")) c.model = parse_model(j.at("model"));
  if (j.contains("truth")) {
    const auto& t = j.at("truth");
    reject_unknown(t, "truth", {"r", "D", "g_seed", "g_profile"});
    c.truth.r = get_number(t, "truth", "r", c.truth.r);
    c.truth.D = get_number(t, "truth", "D", c.truth.D);
    c.truth.g_seed = get_u64(t, "truth", "g_seed", c.truth.g_seed);
    c.truth.g_profile = g_profile_from_string(get_string(t, "truth", "g_profile", "critical"));
  }
  if (j.contains("noise")) {
    const auto& nz = j.at("noise");
    reject_unknown(nz, "noise", {"kind", "scale"});
    c.noise.kind = noise_kind_from_string(get_string(nz, "noise", "kind", to_string(c.noise.kind)));
    c.noise.scale = get_number(nz, "noise", "scale", c.noise.scale);
  }
  if (j.contains("n_grid")) {
    const auto& g = j.at("n_grid");
    if (!g.is_array()) fail("n_grid", "array of positive integers");
    c.n_grid.clear();
    for (const auto& v : g) {
      if (!is_nonnegative_integer(v)) fail("n_grid", "array of positive integers");
      c.n_grid.push_back(v.get<std::size_t>());
    }
  }
  c.replicates = get_count(j, "", "replicates", c.replicates);
  const std::string solver = get_string(j, "", "solver", "gd");
  if (solver == "gd") c.solver = SolverKind::gd;
  else if (solver == "sgd") c.solver = SolverKind::sgd;
  else fail("solver", "\"gd\" or \"sgd\"");
  if (j.contains("cases")) {
    const auto& cs = j.at("cases");
    if (!cs.is_array()) fail("cases", "array of \"a\" | \"b\" | \"c\" | \"d\"");
    for (const auto& v : cs) {
      if (!v.is_string()) fail("cases", "array of \"a\" | \"b\" | \"c\" | \"d\"");
      c.cases.push_back(schedule_case_from_string(v.get<std::string>()));
    }
  }
  if (j.contains("eta")) c.eta = get_number(j, "", "eta", 0.0);
  if (j.contains("batch")) c.batch = get_count(j, "", "batch", 0);
  if (j.contains("t_max")) c.t_max = get_count(j, "", "t_max", 0);
  if (j.contains("record_every")) c.record_every = get_count(j, "", "record_every", 0);
  c.u = get_number(j, "", "u", c.u);
  c.nu = get_number(j, "", "nu", c.nu);
  c.nu_source = nu_source_from_string(get_string(j, "", "nu_source", to_string(c.nu_source)));
  c.slope_tolerance = get_number(j, "", "slope_tolerance", c.slope_tolerance);
  c.output_dir = get_string(j, "", "output_dir", c.output_dir);
  c.seed = get_u64(j, "", "seed", c.seed);
  c.quadrature_nodes = get_count(j, "", "quadrature_nodes", c.quadrature_nodes);
  c.extend_factor = get_number(j, "", "extend_factor", c.extend_factor);
  c.deterministic_output = get_bool(j, "", "deterministic_output", c.deterministic_output);
  if (j.contains("concentration")) {
    const auto& cc = j.at("concentration");
    const std::string w = "concentration";
    reject_unknown(cc, w, {"n", "delta", "reps", "lambda_points"});
    c.concentration.n = get_count(cc, w, "n", c.concentration.n);
    c.concentration.delta = get_number(cc, w, "delta", c.concentration.delta);
    c.concentration.reps = get_count(cc, w, "reps", c.concentration.reps);
    c.concentration.lambda_points = get_count(cc, w, "lambda_points", c.concentration.lambda_points);
  }
  validate(c);
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_config_json(j);
}

json to_json(const ExperimentConfig& c) {
  json m = {{"kind", to_string(c.model.kind)},
            {"p", c.model.p},
            {"m", c.model.m},
            {"kernel", to_string(c.model.kernel.kind)},
            {"kernel_sigma", c.model.kernel.sigma},
            {"beta", c.model.beta},
            {"a_min", c.model.a_min},
            {"load", c.model.load == LoadKind::sine ? "sine" : "constant"}};
  if (c.model.ball_radius) m["ball_radius"] = *c.model.ball_radius;
  if (c.model.c_r) m["c_r"] = *c.model.c_r;
  if (c.model.alpha) m["alpha"] = *c.model.alpha;
  json j;
  j["model"] = m;
  j["truth"] = {{"r", c.truth.r},
                {"D", c.truth.D},
                {"g_seed", c.truth.g_seed},
                {"g_profile", to_string(c.truth.g_profile)}};
  j["noise"] = {{"kind", to_string(c.noise.kind)}, {"scale", c.noise.scale}};
  j["n_grid"] = c.n_grid;
  j["replicates"] = c.replicates;
  j["solver"] = to_string(c.solver);
  if (!c.cases.empty()) {
    j["cases"] = json::array();
    for (auto cs : c.cases) j["cases"].push_back(to_string(cs));
  }
  if (c.eta) j["eta"] = *c.eta;
  if (c.batch) j["batch"] = *c.batch;
  if (c.t_max) j["t_max"] = *c.t_max;
  if (c.record_every) j["record_every"] = *c.record_every;
  j["u"] = c.u;
  j["nu"] = c.nu;
  j["nu_source"] = to_string(c.nu_source);
  j["slope_tolerance"] = c.slope_tolerance;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["quadrature_nodes"] = c.quadrature_nodes;
  j["extend_factor"] = c.extend_factor;
  j["deterministic_output"] = c.deterministic_output;
  j["concentration"] = {{"n", c.concentration.n},
                        {"delta", c.concentration.delta},
                        {"reps", c.concentration.reps},
                        {"lambda_points", c.concentration.lambda_points}};
  return j;
}

void validate(const ExperimentConfig& c) {
  if (c.n_grid.empty()) fail("n_grid", "non-empty ascending array");
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    if (c.n_grid[i] < 2) fail("n_grid", "entries of at least 2");
    if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) fail("n_grid", "strictly ascending array");
  }
  if (c.replicates < 1) fail("replicates", "positive integer");
  if (!(c.u == 0.0 || c.u == 0.5)) fail("u", "0 or 0.5");
  if (!(c.truth.r > 0.0)) fail("truth.r", "positive number");
  if (!(c.truth.D > 0.0)) fail("truth.D", "positive number");
  if (!(c.nu > 0.0 && c.nu < 1.0)) fail("nu", "number in (0, 1)");
  if (!(c.slope_tolerance > 0.0)) fail("slope_tolerance", "positive number");
  if (c.quadrature_nodes < 1) fail("quadrature_nodes", "positive integer");
  if (!(c.extend_factor >= 1.0)) fail("extend_factor", "number >= 1");
  if (c.record_every && *c.record_every < 1) fail("record_every", "positive integer");
  if (!(c.concentration.delta > 0.0 && c.concentration.delta < 1.0)) fail("concentration.delta", "number in (0, 1)");
  if (c.concentration.reps < 20) fail("concentration.reps", "integer >= 20");
  if (c.concentration.lambda_points < 1) fail("concentration.lambda_points", "positive integer");
  if (c.concentration.n < 1) fail("concentration.n", "positive integer");
  if (c.model.p < 2) fail("model.p", "integer >= 2");
  if (c.model.m < 1) fail("model.m", "integer >= 1");
  c.noise.validate();

  if (c.solver == SolverKind::gd && c.cases.empty() && !c.eta) {
    throw ConfigError("config key 'eta': required when solver is \"gd\" and no schedule case is given");
  }
  if (c.solver == SolverKind::sgd && c.cases.empty() && !(c.eta && c.batch && c.t_max)) {
    throw ConfigError("config keys 'eta', 'batch', 't_max': required when solver is \"sgd\" and no schedule case is given");
  }
  if (c.batch && *c.batch < 1) fail("batch", "positive integer");
  if (c.t_max && *c.t_max < 1) fail("t_max", "positive integer");
  if (c.eta) {
    const auto model = make_model(c.model);
    const double cap = model->constants().step_cap();
    if (!(*c.eta > 0.0) || !(*c.eta < cap)) {
      std::ostringstream os;
      os << "config key 'eta': " << *c.eta << " violates the step cap 0 < eta < 1/kappa1^2 = " << cap;
      throw ConfigError(os.str());
    }
  }
}

ExperimentConfig sample_config() {
  ExperimentConfig c;
  c.eta = 0.25;
  c.output_dir = "out/gd-rate";
  return c;
}

}  // namespace invlearn::harness
