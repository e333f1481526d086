#include "ivim/abc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ivim/errors.hpp"
#include "ivim/parallel.hpp"
#include "ivim/simulate.hpp"

namespace ivim {

void AbcConfig::validate() const {
    if (n_proposals < 1000) throw ConfigError("abc.n_proposals: must be >= 1000");
    if (!(acceptance_quantile > 0.0 && acceptance_quantile <= 0.1)) {
        throw ConfigError("abc.acceptance_quantile: must be in (0, 0.1]");
    }
    if (distance != "euclidean-normalized") {
        throw ConfigError("abc.distance: unknown metric '" + distance + "'");
    }
}

PosteriorSampleSet abc_posterior(const SignalVector& observed, const ParamPrior& prior,
                                 const AcquisitionProtocol& protocol, const AbcConfig& config) {
    // Precondition-style: config limits are enforced at the config boundary
    // (validate()), so limit cases like acceptance_quantile = 1 stay usable.
    prior.validate();
    protocol.validate();
    if (!(config.acceptance_quantile > 0.0 && config.acceptance_quantile <= 1.0) ||
        config.n_proposals < 1) {
        throw ConfigError("abc_posterior: invalid proposal count or quantile");
    }
    if (observed.size() != protocol.n_b()) {
        throw DataError("abc_posterior: observed signal length does not match protocol");
    }

    const std::int64_t n = config.n_proposals;
    const double scale = 1.0 / prior.hi.s0; // same input scale as the network
    std::vector<IvimParams> proposals(n);
    std::vector<double> distances(n);

    parallel_for(n, config.workers, [&](std::int64_t i) {
        Rng rng(config.seed, static_cast<std::uint64_t>(i));
        const IvimParams y = sample_prior(prior, rng);
        const SignalVector x = simulate_signal(y, protocol, config.with_dephasing, rng);
        double d2 = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double diff = (x[k] - observed[k]) * scale;
            d2 += diff * diff;
        }
        proposals[i] = y;
        distances[i] = std::sqrt(d2);
    });

    const std::int64_t keep = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(config.acceptance_quantile * double(n))));

    // k smallest by (distance, proposal index); only the accepted set sorted.
    std::vector<std::int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto cmp = [&](std::int64_t a, std::int64_t b) {
        return distances[a] != distances[b] ? distances[a] < distances[b] : a < b;
    };
    std::nth_element(order.begin(), order.begin() + keep - 1, order.end(), cmp);
    std::sort(order.begin(), order.begin() + keep, cmp);

    PosteriorSampleSet set;
    set.samples.reserve(keep);
    set.distances.reserve(keep);
    for (std::int64_t i = 0; i < keep; ++i) {
        set.samples.push_back(proposals[order[i]]);
        set.distances.push_back(distances[order[i]]);
    }
    for (int p = 0; p < 4; ++p) {
        double mean = 0.0;
        for (const auto& s : set.samples) mean += s[p];
        mean /= double(keep);
        double var = 0.0;
        for (const auto& s : set.samples) var += (s[p] - mean) * (s[p] - mean);
        set.mean[p] = mean;
        set.std_dev[p] = keep > 1 ? std::sqrt(var / double(keep - 1)) : 0.0;
    }
    return set;
}

namespace {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Overlap coefficient between the sample histogram and the Gaussian, both
// discretized on a common grid spanning their supports.
double histogram_gaussian_overlap(const std::vector<double>& values, double mu, double sigma) {
    constexpr int n_bins = 64;
    double lo = mu - 4.0 * sigma;
    double hi = mu + 4.0 * sigma;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) return 1.0; // all mass at one point each
    const double w = (hi - lo) / n_bins;
    std::vector<double> hist(n_bins, 0.0);
    for (double v : values) {
        int b = static_cast<int>((v - lo) / w);
        b = std::clamp(b, 0, n_bins - 1);
        hist[b] += 1.0 / double(values.size());
    }
    double overlap = 0.0;
    for (int b = 0; b < n_bins; ++b) {
        const double z0 = (lo + b * w - mu) / sigma;
        const double z1 = (lo + (b + 1) * w - mu) / sigma;
        overlap += std::min(hist[b], std_normal_cdf(z1) - std_normal_cdf(z0));
    }
    return overlap;
}

} // namespace

PosteriorComparison compare_posteriors(const PosteriorSampleSet& abc,
                                       const GaussianPosterior& agp) {
    if (abc.samples.empty()) throw DataError("compare_posteriors: empty ABC sample set");
    PosteriorComparison cmp;
    const auto agp_std = agp.std_dev();
    std::vector<double> column(abc.samples.size());
    for (int p = 0; p < 4; ++p) {
        for (std::size_t i = 0; i < abc.samples.size(); ++i) column[i] = abc.samples[i][p];
        const double sd = abc.std_dev[p];
        cmp.mean_shift[p] = sd > 0.0 ? std::abs(abc.mean[p] - agp.mean[p]) / sd
                                     : std::abs(abc.mean[p] - agp.mean[p]);
        cmp.std_ratio[p] = sd > 0.0 ? agp_std[p] / sd
                                    : std::numeric_limits<double>::infinity();
        cmp.overlap[p] = histogram_gaussian_overlap(column, agp.mean[p], agp_std[p]);
    }
    return cmp;
}

} // namespace ivim
