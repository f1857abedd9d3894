#include <benchmark/benchmark.h>

#include "compatamg/problems.hpp"
#include "compatamg/projection.hpp"
#include "compatamg/solver.hpp"
#include "compatamg/transfer.hpp"

using namespace compatamg;

namespace {

struct Setup {
  Matrix a;
  CFPartition part;
  TransferPair pair;
  Matrix m;
};

Setup make(Index n) {
  ProblemSpec spec;
  spec.kind = ProblemKind::RandomStableNonsym;
  spec.n = n;
  Matrix a = generate(spec);
  CFPartition part = default_splitting(n);
  TransferPair pair = ideal_pair(a, part, NormSpec::of(NormTag::AstarA), Anchor::PfromQ, QChoice::of(QTag::Aop));
  Matrix m = realize_norm(NormSpec::of(NormTag::AstarA), a);
  return {std::move(a), std::move(part), std::move(pair), std::move(m)};
}

void BM_BuildPi(benchmark::State& state) {
  const Setup s = make(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_pi(s.a, s.pair).pi.data());
}
BENCHMARK(BM_BuildPi)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

void BM_OperatorMNorm(benchmark::State& state) {
  const Setup s = make(state.range(0));
  const Matrix pi = build_pi(s.a, s.pair).pi;
  for (auto _ : state) benchmark::DoNotOptimize(operator_m_norm(pi, s.m));
}
BENCHMARK(BM_OperatorMNorm)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

void BM_NonorthMeasure(benchmark::State& state) {
  const Setup s = make(state.range(0));
  const Matrix pi = build_pi(s.a, s.pair).pi;
  for (auto _ : state) benchmark::DoNotOptimize(nonorth_measure(pi, s.m));
}
BENCHMARK(BM_NonorthMeasure)->RangeMultiplier(2)->Range(32, 128)->Unit(benchmark::kMillisecond);

void BM_OrthogonalityChecks(benchmark::State& state) {
  const Setup s = make(state.range(0));
  const Matrix pi = build_pi(s.a, s.pair).pi;
  for (auto _ : state) benchmark::DoNotOptimize(orthogonality_checks(pi, s.m, 1e-8).all());
}
BENCHMARK(BM_OrthogonalityChecks)->RangeMultiplier(2)->Range(32, 128)->Unit(benchmark::kMillisecond);

void BM_ConvFactor(benchmark::State& state) {
  const Setup s = make(state.range(0));
  const TwoGridSpec spec{s.pair, RelaxSpec::jacobi(), RelaxSpec::jacobi()};
  for (auto _ : state) benchmark::DoNotOptimize(conv_factor(two_grid_propagator(s.a, spec)));
}
BENCHMARK(BM_ConvFactor)->RangeMultiplier(2)->Range(32, 128)->Unit(benchmark::kMillisecond);

void BM_Iterate(benchmark::State& state) {
  const Setup s = make(state.range(0));
  const TwoGridSpec spec{s.pair, RelaxSpec::jacobi(), RelaxSpec::jacobi()};
  const Vector x0 = Vector::Ones(s.a.rows());
  const Vector b = Vector::Zero(s.a.rows());
  for (auto _ : state) benchmark::DoNotOptimize(iterate(s.a, spec, b, x0, 30).residuals.back());
}
BENCHMARK(BM_Iterate)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
