#include <benchmark/benchmark.h>

#include "snep/aggregate.hpp"
#include "snep/cournot.hpp"
#include "snep/discretize.hpp"
#include "snep/distributions.hpp"
#include "snep/vi.hpp"

using namespace snep;

namespace {

CournotInstance stochastic() {
    const auto t = CournotInstance::table1();
    return CournotInstance(t.firms(), t.a(), t.e(), RandomFactor::truncated_normal(0, 0.25, -0.5, 0.5),
                           RandomFactor::truncated_normal(5000, 10, 4950, 5050));
}

void BM_OperatorEval(benchmark::State& state) {
    const auto inst = CournotInstance::table1();
    const Realization w = inst.mean_realization();
    const Vector q{36.9, 41.8, 43.7, 42.7, 39.2};
    Vector out(5);
    for (auto _ : state) {
        operator_eval_unchecked(inst, q, w, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_OperatorEval);

void BM_ColdCellSolve(benchmark::State& state) {
    const auto inst = CournotInstance::table1();
    const Realization w = inst.mean_realization();
    VIProblem p{[&](std::span<const double> q, std::span<double> out) { operator_eval_unchecked(inst, q, w, out); },
                Vector(5, 0.0), inst.mean_box(), true};
    for (auto _ : state) {
        auto res = solve_vi(p, SolverConfig{});
        benchmark::DoNotOptimize(res.x.data());
    }
}
BENCHMARK(BM_ColdCellSolve);

void BM_TruncatedNormalCdf(benchmark::State& state) {
    const auto f = RandomFactor::truncated_normal(5000, 10, 4950, 5050);
    double x = 4950.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.cdf(x));
        x = x < 5050.0 ? x + 0.37 : 4950.0;
    }
}
BENCHMARK(BM_TruncatedNormalCdf);

void BM_Sweep(benchmark::State& state) {
    const auto inst = stochastic();
    DiscretizationSpec d;
    d.r.cells = static_cast<int>(state.range(0));
    d.s.cells = static_cast<int>(state.range(1));
    const CellGrid grid = make_cournot_grid(inst, d);
    SweepOptions opt;
    opt.store_cells = false;
    for (auto _ : state) {
        const auto sol = solve_all(inst, grid, SolverConfig{}, opt);
        benchmark::DoNotOptimize(expectation(sol).mean.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.size()));
}
BENCHMARK(BM_Sweep)->Args({50, 2000})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
