#include <benchmark/benchmark.h>

#include "czbench/config.hpp"

namespace {

using namespace czb;

const config::RunConfig& run_config() {
  static const auto rc = config::parse(config::default_document());
  return rc;
}

fem::Problem coarse(double ub) {
  const auto& rc = run_config();
  return fem::make_case(fem::CaseId::ItP, rc.mesh(2), rc.material, rc.law, ub);
}

bench::Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? bench::Exec::Serial : bench::Exec::Parallel;
}

void BM_GridOracle(benchmark::State& state) {
  const auto p = coarse(0.97);
  for (auto _ : state) benchmark::DoNotOptimize(bench::grid_oracle(p, {}, exec_of(state)));
}

void BM_SampleSurface(benchmark::State& state) {
  const auto p = coarse(1.52);
  const auto spec = bench::SurfaceSpec::default_for(1.52, 201);
  for (auto _ : state) benchmark::DoNotOptimize(bench::sample_surface(p, spec, exec_of(state)));
}

void BM_RunMatrix(benchmark::State& state) {
  const auto& rc = run_config();
  const auto setup = rc.setup({{fem::CaseId::ItP, 0.97}, {fem::CaseId::ItC, 1.52}});
  const auto matrix = rc.matrix();
  for (auto _ : state) benchmark::DoNotOptimize(bench::run_matrix(matrix, setup, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_GridOracle)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleSurface)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunMatrix)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
