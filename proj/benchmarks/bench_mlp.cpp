#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "ivim/mlp.hpp"
#include "ivim/simulate.hpp"

namespace {

ivim::MlpModel model() {
    ivim::Rng rng(1);
    return ivim::MlpModel::init(17, ivim::ParamPrior::defaults(), rng);
}

Eigen::MatrixXd batch(int n) {
    const ivim::AcquisitionProtocol proto = ivim::default_protocol();
    const ivim::ParamPrior prior = ivim::ParamPrior::defaults();
    Eigen::MatrixXd x(17, n);
    for (int k = 0; k < n; ++k) {
        ivim::Rng rng(2, k);
        const auto [y, s] = ivim::sample_training_pair(prior, proto, rng);
        for (int c = 0; c < 17; ++c) x(c, k) = s[c];
    }
    return x;
}

void ForwardSingle(benchmark::State& state) {
    const ivim::MlpModel m = model();
    ivim::SignalVector s(17, 700.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ivim::forward(m, s));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(ForwardSingle);

void ForwardBatch(benchmark::State& state) {
    const ivim::MlpModel m = model();
    const Eigen::MatrixXd x = batch(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ivim::forward_batch(m, x));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(ForwardBatch)->Arg(64)->Arg(512)->Arg(2000);

void BackwardBatch(benchmark::State& state) {
    const ivim::MlpModel m = model();
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd x = batch(n);
    Eigen::MatrixXd t(4, n);
    const ivim::ParamPrior prior = ivim::ParamPrior::defaults();
    for (int k = 0; k < n; ++k) {
        ivim::Rng rng(3, k);
        const ivim::IvimParams y = ivim::sample_prior(prior, rng);
        for (int p = 0; p < 4; ++p) t(p, k) = y[p];
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(ivim::backward(m, x, t));
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BackwardBatch)->Arg(64)->Arg(512);

} // namespace
