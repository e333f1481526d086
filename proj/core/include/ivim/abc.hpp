#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ivim/mlp.hpp"
#include "ivim/model.hpp"
#include "ivim/protocol.hpp"

namespace ivim {

struct AbcConfig {
    std::int64_t n_proposals = 1000000;
    double acceptance_quantile = 1e-3;
    std::string distance = "euclidean-normalized";
    std::uint64_t seed = 0;
    bool with_dephasing = true; // match the training-time likelihood
    int workers = 0;

    void validate() const; // n_proposals >= 1e3, quantile in (0, 0.1]
};

struct PosteriorSampleSet {
    std::vector<IvimParams> samples;  // accepted, ordered by distance
    std::vector<double> distances;    // ascending, same order
    std::array<double, 4> mean{};     // per-parameter summary
    std::array<double, 4> std_dev{};  // unbiased (n-1)
};

/// Rejection sampler: draw n_proposals (y, x) pairs from the simulator and
/// keep the acceptance_quantile fraction with smallest Euclidean distance on
/// signals scaled by 1/3000. Proposal i draws from Rng(seed, i); ties break
/// by proposal index.
PosteriorSampleSet abc_posterior(const SignalVector& observed, const ParamPrior& prior,
                                 const AcquisitionProtocol& protocol, const AbcConfig& config);

struct PosteriorComparison {
    std::array<double, 4> mean_shift{}; // |mean_abc - mean_agp| / std_abc
    std::array<double, 4> std_ratio{};  // std_agp / std_abc
    std::array<double, 4> overlap{};    // histogram-vs-Gaussian overlap coefficient
};

PosteriorComparison compare_posteriors(const PosteriorSampleSet& abc,
                                       const GaussianPosterior& agp);

} // namespace ivim
