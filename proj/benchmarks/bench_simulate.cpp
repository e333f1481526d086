#include <benchmark/benchmark.h>

#include "ivim/model.hpp"
#include "ivim/simulate.hpp"

namespace {

void SampleRician(benchmark::State& state) {
    ivim::Rng rng(1);
    double acc = 0;
    for (auto _ : state) {
        acc += ivim::sample_rician(500.0, 10.0, rng);
    }
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(SampleRician);

void SimulateSignal(benchmark::State& state) {
    const ivim::AcquisitionProtocol proto = ivim::default_protocol();
    const ivim::IvimParams p(1000, 0.2, 1e-3, 0.02);
    std::uint64_t stream = 0;
    for (auto _ : state) {
        ivim::Rng rng(2, stream++);
        benchmark::DoNotOptimize(ivim::simulate_signal(p, proto, true, rng));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(SimulateSignal);

void SampleTrainingPair(benchmark::State& state) {
    const ivim::AcquisitionProtocol proto = ivim::default_protocol();
    const ivim::ParamPrior prior = ivim::ParamPrior::defaults();
    std::uint64_t stream = 0;
    for (auto _ : state) {
        ivim::Rng rng(3, stream++);
        benchmark::DoNotOptimize(ivim::sample_training_pair(prior, proto, rng));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(SampleTrainingPair);

} // namespace
