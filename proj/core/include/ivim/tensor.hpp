#pragma once

#include <Eigen/Core>

#include "ivim/rng.hpp"

namespace ivim {

/// Symmetric 3x3 tensor stored as its six unique upper-triangle components.
struct SymTensor3 {
    double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;

    double trace() const { return xx + yy + zz; }

    /// g^T T g for a direction g.
    double quad_form(const Eigen::Vector3d& g) const;

    Eigen::Matrix3d to_matrix() const;
    static SymTensor3 from_matrix(const Eigen::Matrix3d& m);

    /// d * I
    static SymTensor3 isotropic(double d) { return SymTensor3{d, 0, 0, d, 0, d}; }
};

/// Anisotropic generalization of IvimParams: diffusion and pseudo-diffusion
/// as tensors plus the scalar perfusion fraction.
struct DiffusionTensorPair {
    SymTensor3 d_tensor;
    SymTensor3 d_star_tensor;
    double f = 0.0;
};

/// Unit quaternion rotation.
struct Quaternion {
    double w = 1, x = 0, y = 0, z = 0;

    Eigen::Matrix3d to_matrix() const;

    /// Uniform draw over SO(3) (subgroup algorithm, three uniforms).
    static Quaternion random_rotation(Rng& rng);
};

/// Axially symmetric prolate tensor with eigenvalues (l1, l2, l2), l1 >= l2,
/// such that the eigenvalue mean equals mean_adc and the fractional
/// anisotropy equals fa. The axial/radial ratio is recovered by bisection.
/// Throws std::invalid_argument for fa outside [0, 1) or mean_adc <= 0.
SymTensor3 prolate_tensor_from_mean_adc_fa(double mean_adc, double fa, const Quaternion& rotation);

/// FA from three eigenvalues.
double fractional_anisotropy(double l1, double l2, double l3);

/// s0 * (f*exp(-b g^T D* g) + (1-f)*exp(-b g^T D g)); g must be unit norm
/// within 1e-9 (throws std::invalid_argument otherwise).
double signal_anisotropic(const DiffusionTensorPair& tensors, double s0, double b,
                          const Eigen::Vector3d& g);

} // namespace ivim
