#include <benchmark/benchmark.h>

#include <string>

#include "hsflow/energy.hpp"
#include "hsflow/hodge.hpp"
#include "hsflow/torsion.hpp"

using namespace hsflow;

namespace {

Model model(const char* name) { return load_model(std::string(HSFLOW_MODELS_DIR) + "/" + name); }

void BM_BuildComplex(benchmark::State& state) {
  const Model m = model("spectral_torus.model");
  for (auto _ : state) benchmark::DoNotOptimize(build_complex(m));
}
BENCHMARK(BM_BuildComplex)->Unit(benchmark::kMillisecond);

void BM_GramMatrices(benchmark::State& state) {
  const Model m = model("spectral_torus.model");
  const auto c = build_complex(m);
  for (auto _ : state) {
    const HermitianStructure h = HermitianStructure::from_model(m, c);
    benchmark::DoNotOptimize(h.gram({1, 1}));
  }
}
BENCHMARK(BM_GramMatrices)->Unit(benchmark::kMillisecond);

void BM_CohomologyIwasawa(benchmark::State& state) {
  const Model m = model("iwasawa.model");
  const auto c = build_complex(m);
  const HermitianStructure h = HermitianStructure::from_model(m, c);
  for (auto _ : state) benchmark::DoNotOptimize(cohomology_table(OperatorBundle(h)));
}
BENCHMARK(BM_CohomologyIwasawa)->Unit(benchmark::kMillisecond);

void BM_Torsion(benchmark::State& state) {
  const Model m = model("spectral_torus.model");
  const auto c = build_complex(m);
  const HermitianStructure h = HermitianStructure::from_model(m, c);
  for (auto _ : state) benchmark::DoNotOptimize(torsion_form(OperatorBundle(h)));
}
BENCHMARK(BM_Torsion)->Unit(benchmark::kMillisecond);

void BM_FlowStep(benchmark::State& state) {
  const Model m = model("spectral_torus.model");
  const auto c = build_complex(m);
  const EnergyFunctional f(HermitianStructure::from_model(m, c));
  FlowOptions opts;
  opts.max_iters = 1;
  for (auto _ : state) benchmark::DoNotOptimize(f.gradient_descent(c->zero({1, 0}), opts));
}
BENCHMARK(BM_FlowStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
