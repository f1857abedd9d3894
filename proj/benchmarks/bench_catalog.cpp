#include <benchmark/benchmark.h>

#include "compatamg/problems.hpp"
#include "compatamg/transfer.hpp"

using namespace compatamg;

namespace {

void BM_CatalogPairs(benchmark::State& state) {
  ProblemSpec spec;
  spec.kind = ProblemKind::RandomStableNonsym;
  spec.n = state.range(0);
  const Matrix a = generate(spec);
  const CFPartition part = default_splitting(spec.n);
  for (auto _ : state) benchmark::DoNotOptimize(catalog_pairs(a, part).size());
}
BENCHMARK(BM_CatalogPairs)->Arg(24)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_CompatibleWFromZ(benchmark::State& state) {
  ProblemSpec spec;
  spec.kind = ProblemKind::RandomStableNonsym;
  spec.n = state.range(0);
  const Matrix a = generate(spec);
  const PartitionedMatrix pa(a, default_splitting(spec.n));
  const Matrix z = Matrix::Constant(pa.ff().rows(), pa.cc().rows(), 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compatible_w_from_z(pa, z, CompatNorm::Identity).data());
    benchmark::DoNotOptimize(compatible_w_from_z(pa, z, CompatNorm::AstarA).data());
  }
}
BENCHMARK(BM_CompatibleWFromZ)->RangeMultiplier(2)->Range(32, 512)->Unit(benchmark::kMillisecond);

}  // namespace
