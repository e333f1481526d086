#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ivim/abc.hpp"
#include "ivim/errors.hpp"
#include "ivim/simulate.hpp"

using namespace ivim;

namespace {

AcquisitionProtocol noiseless_protocol() {
    AcquisitionProtocol p = default_protocol();
    for (auto& s : p.noise_sigmas) s = 1e-9;
    for (auto& b : p.dephase_probs) b = 0.0;
    return p;
}

} // namespace

TEST_CASE("abc config validation") {
    AbcConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.n_proposals = 10;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = AbcConfig{};
    cfg.acceptance_quantile = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = AbcConfig{};
    cfg.distance = "manhattan";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("acceptance_quantile 1 reproduces the prior moments") {
    // The no-conditioning limit; the config-file validator rejects q > 0.1,
    // the operation itself handles the full range.
    const ParamPrior prior = ParamPrior::defaults();
    const AcquisitionProtocol proto = default_protocol();
    AbcConfig cfg;
    cfg.n_proposals = 20000;
    cfg.acceptance_quantile = 1.0;
    cfg.seed = 41;
    cfg.workers = 2;
    const IvimParams truth(1000, 0.3, 1e-3, 2e-2);
    Rng rng(40);
    const SignalVector obs = simulate_signal(truth, proto, true, rng);
    const PosteriorSampleSet set = abc_posterior(obs, prior, proto, cfg);
    REQUIRE(set.samples.size() == 20000);

    const double f_mean = 0.5 * (prior.lo.f + prior.hi.f);
    const double f_std = (prior.hi.f - prior.lo.f) / std::sqrt(12.0);
    CHECK(std::abs(set.mean[1] - f_mean) < 4.0 * f_std / std::sqrt(20000.0));
    CHECK(set.std_dev[1] == doctest::Approx(f_std).epsilon(0.05));

    const double s0_mean = 0.5 * (prior.lo.s0 + prior.hi.s0);
    const double s0_std = (prior.hi.s0 - prior.lo.s0) / std::sqrt(12.0);
    CHECK(std::abs(set.mean[0] - s0_mean) < 4.0 * s0_std / std::sqrt(20000.0));
}

TEST_CASE("posterior concentrates around a known ground truth") {
    const ParamPrior prior = ParamPrior::defaults();
    const AcquisitionProtocol proto = noiseless_protocol();
    AbcConfig cfg;
    cfg.n_proposals = 100000;
    cfg.acceptance_quantile = 1e-4; // keeps 10
    cfg.with_dephasing = false;
    cfg.workers = 2;

    const double prior_d_mean = 0.5 * (prior.lo.d + prior.hi.d);
    int closer = 0;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
        Rng rng(9000 + t);
        // d is only identifiable when the diffusion compartment carries
        // weight; f near 1 makes the trial a coin flip.
        IvimParams truth = sample_prior(prior, rng);
        while (truth.f > 0.6 || truth.f < 0.05) truth = sample_prior(prior, rng);
        const SignalVector obs = simulate_signal(truth, proto, false, rng);
        cfg.seed = 100 + t;
        const PosteriorSampleSet set = abc_posterior(obs, prior, proto, cfg);
        if (std::abs(set.mean[2] - truth.d) < std::abs(prior_d_mean - truth.d)) ++closer;
        CHECK(prior.lo.d <= set.mean[2]);
        CHECK(set.mean[2] <= prior.hi.d);
    }
    CHECK(closer >= 48); // >= 95% of trials
}

TEST_CASE("identical seeds give identical sample sets") {
    const ParamPrior prior = ParamPrior::defaults();
    const AcquisitionProtocol proto = default_protocol();
    AbcConfig cfg;
    cfg.n_proposals = 5000;
    cfg.acceptance_quantile = 0.01;
    cfg.seed = 7;
    cfg.workers = 2;
    const IvimParams truth(800, 0.2, 1.2e-3, 3e-2);
    Rng rng(6);
    const SignalVector obs = simulate_signal(truth, proto, true, rng);
    const PosteriorSampleSet a = abc_posterior(obs, prior, proto, cfg);
    const PosteriorSampleSet b = abc_posterior(obs, prior, proto, cfg);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(a.distances == b.distances);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].s0 == b.samples[i].s0);
        CHECK(a.samples[i].d_star == b.samples[i].d_star);
    }
}

TEST_CASE("accepted set is exactly the k smallest with index tie-break") {
    const ParamPrior prior = ParamPrior::defaults();
    const AcquisitionProtocol proto = default_protocol();
    AbcConfig cfg;
    cfg.n_proposals = 2000;
    cfg.acceptance_quantile = 0.01; // k = 20
    cfg.seed = 3;
    cfg.workers = 1;
    const IvimParams truth(1000, 0.25, 1e-3, 2e-2);
    Rng rng(2);
    const SignalVector obs = simulate_signal(truth, proto, true, rng);
    const PosteriorSampleSet set = abc_posterior(obs, prior, proto, cfg);
    REQUIRE(set.samples.size() == 20);
    CHECK(std::is_sorted(set.distances.begin(), set.distances.end()));

    // Replay the proposal streams to recover every distance.
    std::vector<double> all(cfg.n_proposals);
    const double scale = 1.0 / prior.hi.s0;
    for (std::int64_t i = 0; i < cfg.n_proposals; ++i) {
        Rng prop(cfg.seed, std::uint64_t(i));
        const IvimParams y = sample_prior(prior, prop);
        const SignalVector x = simulate_signal(y, proto, true, prop);
        double d2 = 0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double diff = (x[k] - obs[k]) * scale;
            d2 += diff * diff;
        }
        all[i] = std::sqrt(d2);
    }
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < set.distances.size(); ++i) {
        CHECK(set.distances[i] == sorted[i]);
    }

    // Every accepted sample lies in the prior box with d <= d_star.
    for (const auto& s : set.samples) {
        CHECK(prior.contains(s));
        CHECK(s.d <= s.d_star);
    }

    // Summary is recomputable from the samples.
    for (int p = 0; p < 4; ++p) {
        double mean = 0;
        for (const auto& s : set.samples) mean += s[p];
        mean /= double(set.samples.size());
        double var = 0;
        for (const auto& s : set.samples) var += (s[p] - mean) * (s[p] - mean);
        const double sd = std::sqrt(var / double(set.samples.size() - 1));
        CHECK(set.mean[p] == doctest::Approx(mean).epsilon(1e-12));
        CHECK(set.std_dev[p] == doctest::Approx(sd).epsilon(1e-12));
    }
}

TEST_CASE("halving the quantile does not widen the posterior (median over seeds)") {
    const ParamPrior prior = ParamPrior::defaults();
    const AcquisitionProtocol proto = default_protocol();
    const IvimParams truth(1200, 0.3, 1.5e-3, 2.5e-2);

    std::vector<double> wide, narrow;
    for (std::uint64_t s = 0; s < 5; ++s) {
        Rng rng(500 + s);
        const SignalVector obs = simulate_signal(truth, proto, true, rng);
        AbcConfig cfg;
        cfg.n_proposals = 20000;
        cfg.seed = 600 + s;
        cfg.workers = 2;
        cfg.acceptance_quantile = 0.02;
        wide.push_back(abc_posterior(obs, prior, proto, cfg).std_dev[1]);
        cfg.acceptance_quantile = 0.01;
        narrow.push_back(abc_posterior(obs, prior, proto, cfg).std_dev[1]);
    }
    std::sort(wide.begin(), wide.end());
    std::sort(narrow.begin(), narrow.end());
    CHECK(narrow[2] <= wide[2] * 1.05); // median comparison, MC slack
}

TEST_CASE("compare_posteriors") {
    SUBCASE("gaussian built from the ABC summary: zero shift, unit ratio") {
        PosteriorSampleSet set;
        Rng rng(31);
        for (int i = 0; i < 2000; ++i) {
            set.samples.push_back(IvimParams::unchecked(
                1000 + 40 * rng.normal(), 0.3 + 0.03 * rng.normal(),
                1e-3 + 1e-4 * rng.normal(), 2e-2 + 2e-3 * rng.normal()));
            set.distances.push_back(double(i));
        }
        for (int p = 0; p < 4; ++p) {
            double mean = 0;
            for (const auto& s : set.samples) mean += s[p];
            mean /= double(set.samples.size());
            double var = 0;
            for (const auto& s : set.samples) var += (s[p] - mean) * (s[p] - mean);
            set.mean[p] = mean;
            set.std_dev[p] = std::sqrt(var / double(set.samples.size() - 1));
        }
        GaussianPosterior g;
        g.mean = IvimParams::unchecked(set.mean[0], set.mean[1], set.mean[2], set.mean[3]);
        for (int p = 0; p < 4; ++p) g.log_std[p] = std::log(set.std_dev[p]);
        const PosteriorComparison cmp = compare_posteriors(set, g);
        for (int p = 0; p < 4; ++p) {
            CHECK(cmp.mean_shift[p] == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(cmp.std_ratio[p] == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(cmp.overlap[p] > 0.8);
        }
    }

    SUBCASE("disjoint distributions have negligible overlap") {
        PosteriorSampleSet set;
        Rng rng(33);
        for (int i = 0; i < 1000; ++i) {
            set.samples.push_back(
                IvimParams::unchecked(rng.normal() + 100.0, 0.5, 1e-3, 1e-3));
            set.distances.push_back(double(i));
        }
        for (int p = 0; p < 4; ++p) {
            double mean = 0;
            for (const auto& s : set.samples) mean += s[p];
            mean /= double(set.samples.size());
            double var = 0;
            for (const auto& s : set.samples) var += (s[p] - mean) * (s[p] - mean);
            set.mean[p] = mean;
            set.std_dev[p] = std::max(std::sqrt(var / double(set.samples.size() - 1)), 1e-12);
        }
        GaussianPosterior g;
        // 10 sigma away in s0, same spread.
        g.mean = IvimParams::unchecked(set.mean[0] + 10.0 * set.std_dev[0], set.mean[1],
                                       set.mean[2], set.mean[3]);
        g.log_std[0] = std::log(set.std_dev[0]);
        for (int p = 1; p < 4; ++p) g.log_std[p] = std::log(1.0);
        const PosteriorComparison cmp = compare_posteriors(set, g);
        CHECK(cmp.overlap[0] < 0.01);
        CHECK(cmp.mean_shift[0] == doctest::Approx(10.0).epsilon(1e-9));
    }
}
