#include <benchmark/benchmark.h>

#include <vector>

#include "invlearn/diagnostics.hpp"
#include "invlearn/forward_model.hpp"
#include "invlearn/linalg.hpp"
#include "invlearn/sampling.hpp"
#include "invlearn/solvers.hpp"
#include "invlearn/tangent.hpp"

using namespace invlearn;

namespace {

ModelPtr model_of(ModelKind kind, Eigen::Index p) {
  ModelConfig c;
  c.kind = kind;
  c.p = p;
  return make_model(c);
}

void BM_SymEig(benchmark::State& state) {
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  RngStream rng(1, 0);
  Matrix a(dim, dim);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  const SymMatrix m(a * a.transpose());
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig(m).eigenvalues.data());
}
BENCHMARK(BM_SymEig)->Arg(64)->Arg(128)->Arg(256);

void BM_PdeSolve(benchmark::State& state) {
  const auto p = static_cast<Eigen::Index>(state.range(0));
  const Vector a = Vector::Ones(p);
  const Vector load = Vector::Ones(p - 1);
  for (auto _ : state) benchmark::DoNotOptimize(pde_solve(a, load, 0.5).data());
}
BENCHMARK(BM_PdeSolve)->Arg(128)->Arg(1024);

// One full-batch gradient step, i.e. a GD run of length 2.
void BM_GdStep(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  const auto model = model_of(kind, 128);
  const ParamVector f0 = model->default_truth();
  RngStream rng(2, 0);
  const auto data = generate_samples(*model, f0, NoiseModel{}, static_cast<std::size_t>(state.range(1)), rng);
  const SolverConfig cfg(0.5 * model->constants().step_cap(), 2, model->constants());
  for (auto _ : state) benchmark::DoNotOptimize(gd_run(*model, data, f0, cfg).final_t);
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_GdStep)->Args({0, 1024})->Args({2, 1024})->Args({1, 1024});

void BM_SgdSteps(benchmark::State& state) {
  const auto model = model_of(ModelKind::pointwise_nonlinear, 128);
  const ParamVector f0 = model->default_truth();
  RngStream rng(3, 0);
  const auto data = generate_samples(*model, f0, NoiseModel{}, 2048, rng);
  const auto cfg = SolverConfig(0.3, 101, model->constants()).with_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sgd_run(*model, data, f0, cfg).final_t);
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_SgdSteps)->Arg(1)->Arg(32);

void BM_ConcentrationSample(benchmark::State& state) {
  const auto model = model_of(ModelKind::linear_integral, 128);
  const ParamVector f0 = model->default_truth();
  const ConcentrationSampler sampler(*model, f0, quadrature_grid(512));
  RngStream rng(4, 0);
  const auto data = generate_samples(*model, f0, NoiseModel{}, 1024, rng);
  const std::vector<double> lambdas{1e-2, 1e-1};
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(data, lambdas).size());
}
BENCHMARK(BM_ConcentrationSample);

}  // namespace
BENCHMARK_MAIN();
