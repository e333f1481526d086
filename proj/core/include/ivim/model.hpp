#pragma once

#include <array>
#include <cstddef>

#include "ivim/rng.hpp"

namespace ivim {

/// The four-parameter bi-exponential signal model state for one voxel:
/// unweighted amplitude s0, perfusion fraction f, tissue diffusion d and
/// pseudo-diffusion d_star, both in mm^2/s.
struct IvimParams {
    double s0 = 0.0;
    double f = 0.0;
    double d = 0.0;
    double d_star = 0.0;

    IvimParams() = default; // zero placeholder, not a valid parameter point
    IvimParams(double s0, double f, double d, double d_star);

    /// Bypasses invariant checks; for bound boxes and fit intermediates.
    static IvimParams unchecked(double s0, double f, double d, double d_star);

    /// s0 >= 0, f in [0,1], 0 < d <= d_star.
    bool valid() const;

    double operator[](std::size_t i) const {
        return i == 0 ? s0 : i == 1 ? f : i == 2 ? d : d_star;
    }

    static constexpr std::size_t n_params = 4;
    static constexpr std::array<const char*, 4> names = {"s0", "f", "d", "d_star"};
};

/// Componentwise uniform prior box over IvimParams.
struct ParamPrior {
    IvimParams lo;
    IvimParams hi;

    /// s0 in [0, 3000], f in [0.0005, 0.9995], d in [0.045, 5]e-3,
    /// d_star in [0.34, 100]e-3 mm^2/s.
    static ParamPrior defaults();

    /// Throws ConfigError unless lo < hi componentwise, the box is inside
    /// physical ranges, and the admissible set {d <= d_star} is nonempty.
    void validate() const;

    bool contains(const IvimParams& p) const;

    double width(std::size_t i) const { return hi[i] - lo[i]; }
};

/// Isotropic trace signal: s0 * (f*exp(-b*d_star) + (1-f)*exp(-b*d)).
double signal_isotropic(const IvimParams& params, double b);

/// Uniform draw inside the prior box, redrawn until d <= d_star so the
/// result is uniform on the admissible set.
IvimParams sample_prior(const ParamPrior& prior, Rng& rng);

} // namespace ivim
