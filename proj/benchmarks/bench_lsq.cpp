#include <benchmark/benchmark.h>

#include "ivim/lsq.hpp"
#include "ivim/simulate.hpp"

namespace {

void FitLsq(benchmark::State& state) {
    const ivim::AcquisitionProtocol proto = ivim::default_protocol();
    const ivim::LsqConfig config;
    const ivim::IvimParams p(1000, 0.2, 1e-3, 0.02);
    ivim::Rng rng(5);
    const ivim::SignalVector x = ivim::simulate_signal(p, proto, true, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ivim::fit_lsq(x, proto, config));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(FitLsq);

void FitStage1(benchmark::State& state) {
    const ivim::AcquisitionProtocol proto = ivim::default_protocol();
    const ivim::LsqConfig config;
    const ivim::IvimParams p(1000, 0.2, 1e-3, 0.02);
    ivim::Rng rng(6);
    const ivim::SignalVector x = ivim::simulate_signal(p, proto, true, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ivim::fit_stage1_monoexp(x, proto, config));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(FitStage1);

} // namespace
