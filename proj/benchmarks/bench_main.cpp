#include <benchmark/benchmark.h>

#include "sisrd/dynamics.hpp"
#include "sisrd/expr.hpp"
#include "sisrd/linalg.hpp"
#include "sisrd/spectral.hpp"

using namespace sisrd;

namespace {

CoefficientSet scenario1(std::size_t cells, double d_I = 1e-3) {
  auto d = build_domain(DomainSpec::disk(0, 0, 1, cells));
  auto beta = ScalarField::from_expr(d, parse_expr("3 + 2*sin(pi*x)*sin(pi*y)"));
  return CoefficientSet(beta, ScalarField(d, 1.0), ScalarField(d, 1.0), ScalarField(d, 1.0), 1.0,
                        d_I, 1.0, 0.5);
}

}  // namespace

static void BM_SpdSolve(benchmark::State& state) {
  const auto cells = static_cast<std::size_t>(state.range(0));
  auto d = build_domain(DomainSpec::disk(0, 0, 1, cells));
  auto lap = assemble_neumann_laplacian(*d);
  std::vector<double> shift(d->size(), 10.0);
  auto A = shifted_stiffness(lap.stiffness, d->measure(), shift, 1.0);
  std::vector<double> b(d->size());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = d->measure()[k] * (1.0 + d->coords()[k].x);
  for (auto _ : state) benchmark::DoNotOptimize(spd_solve(A, b, 1e-12));
  state.SetLabel(std::to_string(d->size()) + " nodes");
}
BENCHMARK(BM_SpdSolve)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

static void BM_ImexStep(benchmark::State& state) {
  auto c = scenario1(static_cast<std::size_t>(state.range(0)));
  ImexStepper stepper(c);
  SimState s{ScalarField(c.domain(), 0.8), ScalarField(c.domain(), 0.2), 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(stepper.step(s, 0.05));
}
BENCHMARK(BM_ImexStep)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

static void BM_ExprEvaluate(benchmark::State& state) {
  auto e = parse_expr(
      "piecewise(x; 0: 0.5 + 0.4*x^2; 0.25: 0.5; 0.5: 0.5 + 0.4*(x - 0.25)^2; else: 0.5 + "
      "1.6*(x - 0.625)^2) * (3 + 2*sin(pi*x)*sin(pi*y))");
  double x = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(e.evaluate({x, 0.3}));
    x = x > 1.0 ? -1.0 : x + 1e-3;
  }
}
BENCHMARK(BM_ExprEvaluate);

static void BM_R0(benchmark::State& state) {
  auto c = scenario1(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_R0(c));
}
BENCHMARK(BM_R0)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
