#include "ivim/protocol.hpp"

#include <cmath>

#include "ivim/errors.hpp"

namespace ivim {

void AcquisitionProtocol::validate() const {
    if (b_values.empty()) throw ConfigError("protocol.b_values: must be nonempty");
    for (std::size_t i = 0; i < b_values.size(); ++i) {
        if (!(b_values[i] >= 0.0)) throw ConfigError("protocol.b_values: all values must be >= 0");
        if (i > 0 && !(b_values[i] > b_values[i - 1])) {
            throw ConfigError("protocol.b_values: must be strictly increasing");
        }
    }
    if (gradient_dirs.empty()) throw ConfigError("protocol.gradient_dirs: must be nonempty");
    for (const auto& g : gradient_dirs) {
        if (std::abs(g.norm() - 1.0) > 1e-9) {
            throw ConfigError("protocol.gradient_dirs: directions must be unit norm");
        }
    }
    if (noise_sigmas.size() != gradient_dirs.size()) {
        throw ConfigError("protocol.noise_sigmas: need one value per gradient");
    }
    for (double s : noise_sigmas) {
        if (!(s > 0.0)) throw ConfigError("protocol.noise_sigmas: all values must be > 0");
    }
    if (dephase_probs.size() != b_values.size()) {
        throw ConfigError("protocol.dephase_probs: need one value per b-value");
    }
    for (double p : dephase_probs) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ConfigError("protocol.dephase_probs: values must be in [0, 1]");
        }
    }
}

double default_dephase_prob(double b) {
    if (b < 300.0) return 0.02;
    return 0.10 + 0.15 * (b - 300.0) / 600.0;
}

AcquisitionProtocol default_protocol() {
    AcquisitionProtocol p;
    p.b_values = {0, 10, 20, 30, 40, 60, 80, 100, 150, 200, 300, 400, 500, 600, 700, 800, 900};

    // Tetrahedral set: cube diagonals of even parity.
    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
    p.gradient_dirs = {
        Eigen::Vector3d(1, 1, 1) * inv_sqrt3,
        Eigen::Vector3d(1, -1, -1) * inv_sqrt3,
        Eigen::Vector3d(-1, 1, -1) * inv_sqrt3,
        Eigen::Vector3d(-1, -1, 1) * inv_sqrt3,
    };
    p.noise_sigmas = {6.0, 10.0, 14.0, 18.0};

    p.dephase_probs.reserve(p.b_values.size());
    for (double b : p.b_values) p.dephase_probs.push_back(default_dephase_prob(b));
    return p;
}

} // namespace ivim
