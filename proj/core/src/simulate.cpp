#include "ivim/simulate.hpp"

#include <cmath>

namespace ivim {

double sample_rician(double amplitude, double sigma, Rng& rng) {
    const auto [n1, n2] = rng.normal_pair();
    const double re = amplitude + sigma * n1;
    const double im = sigma * n2;
    return std::sqrt(re * re + im * im);
}

namespace {

// Shared per-b-value pipeline; `clean` yields the noiseless amplitude for
// gradient j at b-value index i.
template <typename CleanFn>
SignalVector simulate_impl(const AcquisitionProtocol& protocol, bool with_dephasing, Rng& rng,
                           CleanFn&& clean) {
    const std::size_t n_b = protocol.n_b();
    const std::size_t n_g = protocol.n_g();
    SignalVector x(n_b, 0.0);
    for (std::size_t i = 0; i < n_b; ++i) {
        // Gate and attenuation draws are consumed unconditionally so that
        // streams stay aligned across dephasing on/off and gate outcomes.
        const bool gate = rng.uniform() < protocol.dephase_probs[i];
        const double alpha = rng.uniform();
        const double attenuation = (with_dephasing && gate) ? alpha : 1.0;
        double acc = 0.0;
        for (std::size_t j = 0; j < n_g; ++j) {
            acc += sample_rician(clean(i, j) * attenuation, protocol.noise_sigmas[j], rng);
        }
        x[i] = acc / static_cast<double>(n_g);
    }
    return x;
}

} // namespace

SignalVector simulate_signal(const IvimParams& params, const AcquisitionProtocol& protocol,
                             bool with_dephasing, Rng& rng) {
    // Isotropic: the clean amplitude does not depend on the gradient.
    std::vector<double> clean(protocol.n_b());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        clean[i] = signal_isotropic(params, protocol.b_values[i]);
    }
    return simulate_impl(protocol, with_dephasing, rng,
                         [&](std::size_t i, std::size_t) { return clean[i]; });
}

SignalVector simulate_signal_anisotropic(const DiffusionTensorPair& tensors, double s0,
                                         const AcquisitionProtocol& protocol,
                                         bool with_dephasing, Rng& rng) {
    const std::size_t n_b = protocol.n_b();
    const std::size_t n_g = protocol.n_g();
    std::vector<double> clean(n_b * n_g);
    for (std::size_t i = 0; i < n_b; ++i) {
        for (std::size_t j = 0; j < n_g; ++j) {
            clean[i * n_g + j] =
                signal_anisotropic(tensors, s0, protocol.b_values[i], protocol.gradient_dirs[j]);
        }
    }
    return simulate_impl(protocol, with_dephasing, rng,
                         [&](std::size_t i, std::size_t j) { return clean[i * n_g + j]; });
}

std::pair<IvimParams, SignalVector> sample_training_pair(const ParamPrior& prior,
                                                         const AcquisitionProtocol& protocol,
                                                         Rng& rng) {
    IvimParams y = sample_prior(prior, rng);
    SignalVector x = simulate_signal(y, protocol, /*with_dephasing=*/true, rng);
    return {y, std::move(x)};
}

} // namespace ivim
