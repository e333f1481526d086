#include "ivim/model.hpp"

#include <cmath>
#include <stdexcept>

#include "ivim/errors.hpp"

namespace ivim {

IvimParams::IvimParams(double s0_, double f_, double d_, double d_star_)
    : s0(s0_), f(f_), d(d_), d_star(d_star_) {
    if (!valid()) {
        throw std::invalid_argument("IvimParams: require s0 >= 0, f in [0,1], 0 < d <= d_star");
    }
}

IvimParams IvimParams::unchecked(double s0, double f, double d, double d_star) {
    IvimParams p;
    p.s0 = s0;
    p.f = f;
    p.d = d;
    p.d_star = d_star;
    return p;
}

bool IvimParams::valid() const {
    return std::isfinite(s0) && std::isfinite(f) && std::isfinite(d) && std::isfinite(d_star) &&
           s0 >= 0.0 && f >= 0.0 && f <= 1.0 && d > 0.0 && d <= d_star;
}

ParamPrior ParamPrior::defaults() {
    ParamPrior p;
    p.lo = IvimParams::unchecked(0.0, 0.0005, 0.045e-3, 0.34e-3);
    p.hi = IvimParams::unchecked(3000.0, 0.9995, 5e-3, 100e-3);
    return p;
}

void ParamPrior::validate() const {
    for (std::size_t i = 0; i < IvimParams::n_params; ++i) {
        if (!(lo[i] < hi[i])) {
            throw ConfigError(std::string("prior: lo must be < hi for ") + IvimParams::names[i]);
        }
    }
    if (lo.s0 < 0.0) throw ConfigError("prior: s0 lower bound must be >= 0");
    if (lo.f < 0.0 || hi.f > 1.0) throw ConfigError("prior: f bounds must stay in [0, 1]");
    if (lo.d <= 0.0) throw ConfigError("prior: d lower bound must be > 0");
    if (lo.d > hi.d_star) throw ConfigError("prior: admissible set {d <= d_star} is empty");
}

bool ParamPrior::contains(const IvimParams& p) const {
    for (std::size_t i = 0; i < IvimParams::n_params; ++i) {
        if (p[i] < lo[i] || p[i] > hi[i]) return false;
    }
    return true;
}

double signal_isotropic(const IvimParams& params, double b) {
    return params.s0 * (params.f * std::exp(-b * params.d_star) +
                        (1.0 - params.f) * std::exp(-b * params.d));
}

IvimParams sample_prior(const ParamPrior& prior, Rng& rng) {
    // Whole-vector redraw keeps the draw uniform on the admissible set.
    while (true) {
        const double s0 = rng.uniform(prior.lo.s0, prior.hi.s0);
        const double f = rng.uniform(prior.lo.f, prior.hi.f);
        const double d = rng.uniform(prior.lo.d, prior.hi.d);
        const double d_star = rng.uniform(prior.lo.d_star, prior.hi.d_star);
        if (d <= d_star) return IvimParams::unchecked(s0, f, d, d_star);
    }
}

} // namespace ivim
