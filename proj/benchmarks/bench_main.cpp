#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "coarsen/bd.hpp"
#include "coarsen/lsw_classical.hpp"
#include "coarsen/lsw_diffusive.hpp"
#include "coarsen/philox.hpp"
#include "coarsen/sde.hpp"

using namespace coarsen;

static void BM_BdRhs(benchmark::State& st)
{
    const RateModel model(1.0, 1.0, 1.0);
    DiscreteState s;
    s.c.resize(static_cast<std::size_t>(st.range(0)));
    for (std::size_t i = 1; i < s.c.size(); ++i) s.c[i] = std::exp(-0.01 * static_cast<double>(i)) * 1e-3;
    const auto closure = Closure::dirichlet();
    for (auto _ : st) benchmark::DoNotOptimize(bd_rhs(s, model, closure));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_BdRhs)->Arg(200)->Arg(2000)->Arg(20000);

static void BM_CharacteristicBackward(benchmark::State& st)
{
    const auto L = LHistory::constant(1.0, 0.0, 2.0);
    double x = 0.0;
    for (auto _ : st) {
        benchmark::DoNotOptimize(characteristic_backward(x, 0.5, L));
        x = x < 3.0 ? x + 0.01 : 0.0;
    }
}
BENCHMARK(BM_CharacteristicBackward);

static void BM_ClassicalRun(benchmark::State& st)
{
    ClassicalRunConfig cfg;
    cfg.t_end = 0.5;
    cfg.options.dt = 0.01;
    cfg.options.panels = 16;
    for (auto _ : st) benchmark::DoNotOptimize(run_classical(cfg).series.size());
}
BENCHMARK(BM_ClassicalRun)->Unit(benchmark::kMillisecond);

static void BM_DiffusiveStep(benchmark::State& st)
{
    GridSpec spec;
    spec.cells = static_cast<int>(st.range(0));
    const Grid grid = Grid::graded(spec);
    const auto profile = InitialProfile::from_spec(InitialDataSpec{});
    const auto start = discretize(grid, profile, 0.1);
    DiffusiveOptions opts;
    for (auto _ : st) {
        st.PauseTiming();
        auto state = start;
        st.ResumeTiming();
        benchmark::DoNotOptimize(step_diffusive(grid, state, 1e-3, opts));
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_DiffusiveStep)->Arg(512)->Arg(2048)->Arg(8192);

static void BM_Philox(benchmark::State& st)
{
    Philox4x32 gen(42, 0);
    for (auto _ : st) benchmark::DoNotOptimize(gen());
}
BENCHMARK(BM_Philox);

static void BM_McPaths(benchmark::State& st)
{
    const auto L = LHistory::constant(1.0, 0.0, 1.0);
    McConfig cfg;
    cfg.L = &L;
    cfg.n_paths = st.range(0);
    const Payoff payoff{};
    for (auto _ : st) benchmark::DoNotOptimize(estimate_survival_payoff(cfg, payoff, 0.5).mean);
    st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_McPaths)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
