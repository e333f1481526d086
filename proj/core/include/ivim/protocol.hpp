#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace ivim {

/// One simulated or observed trace signal, one value per b-value.
using SignalVector = std::vector<double>;

/// Acquisition description: b-value schedule, gradient set with per-gradient
/// Rician noise scales, and the per-b-value dephasing gate probabilities.
struct AcquisitionProtocol {
    std::vector<double> b_values;               // s/mm^2, strictly increasing
    std::vector<Eigen::Vector3d> gradient_dirs; // unit vectors
    std::vector<double> noise_sigmas;           // one per gradient, > 0
    std::vector<double> dephase_probs;          // one per b-value, in [0,1]

    std::size_t n_b() const { return b_values.size(); }
    std::size_t n_g() const { return gradient_dirs.size(); }

    /// Throws ConfigError on any invariant violation (names the field).
    void validate() const;
};

/// 17 b-values 0..900 s/mm^2, 4 tetrahedral gradients with sigmas
/// {6, 10, 14, 18}, dephasing 2% below b=300 rising linearly to 25% at b=900.
AcquisitionProtocol default_protocol();

/// 2% for b < 300, else linear from 10% at b=300 to 25% at b=900.
double default_dephase_prob(double b);

} // namespace ivim
