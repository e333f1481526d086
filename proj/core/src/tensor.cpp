#include "ivim/tensor.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ivim {

double SymTensor3::quad_form(const Eigen::Vector3d& g) const {
    return g.x() * (xx * g.x() + xy * g.y() + xz * g.z()) +
           g.y() * (xy * g.x() + yy * g.y() + yz * g.z()) +
           g.z() * (xz * g.x() + yz * g.y() + zz * g.z());
}

Eigen::Matrix3d SymTensor3::to_matrix() const {
    Eigen::Matrix3d m;
    m << xx, xy, xz,
         xy, yy, yz,
         xz, yz, zz;
    return m;
}

SymTensor3 SymTensor3::from_matrix(const Eigen::Matrix3d& m) {
    return SymTensor3{m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2)};
}

Eigen::Matrix3d Quaternion::to_matrix() const {
    Eigen::Matrix3d m;
    m << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
         2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
         2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y);
    return m;
}

Quaternion Quaternion::random_rotation(Rng& rng) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double u3 = rng.uniform();
    const double two_pi = 2.0 * std::numbers::pi;
    Quaternion q;
    q.x = std::sqrt(1.0 - u1) * std::sin(two_pi * u2);
    q.y = std::sqrt(1.0 - u1) * std::cos(two_pi * u2);
    q.z = std::sqrt(u1) * std::sin(two_pi * u3);
    q.w = std::sqrt(u1) * std::cos(two_pi * u3);
    return q;
}

double fractional_anisotropy(double l1, double l2, double l3) {
    const double num = (l1 - l2) * (l1 - l2) + (l2 - l3) * (l2 - l3) + (l3 - l1) * (l3 - l1);
    const double den = l1 * l1 + l2 * l2 + l3 * l3;
    if (den <= 0.0) return 0.0;
    return std::sqrt(0.5 * num / den);
}

SymTensor3 prolate_tensor_from_mean_adc_fa(double mean_adc, double fa, const Quaternion& rotation) {
    if (!(mean_adc > 0.0)) throw std::invalid_argument("prolate tensor: mean_adc must be > 0");
    if (fa < 0.0 || fa >= 1.0) throw std::invalid_argument("prolate tensor: fa must be in [0, 1)");

    // For eigenvalues (rho*l2, l2, l2): FA(rho) = (rho - 1) / sqrt(rho^2 + 2),
    // monotone increasing on rho >= 1. Bisection over [1, 1e3].
    double lo = 1.0, hi = 1e3;
    const auto fa_of = [](double rho) { return (rho - 1.0) / std::sqrt(rho * rho + 2.0); };
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (fa_of(mid) < fa ? lo : hi) = mid;
    }
    const double rho = 0.5 * (lo + hi);
    const double l2 = 3.0 * mean_adc / (rho + 2.0);
    const double l1 = rho * l2;

    const Eigen::Matrix3d r = rotation.to_matrix();
    const Eigen::Vector3d eig(l1, l2, l2);
    const Eigen::Matrix3d t = r * eig.asDiagonal() * r.transpose();
    // Symmetrize away rounding asymmetry before extracting the triangle.
    return SymTensor3::from_matrix(0.5 * (t + t.transpose()));
}

double signal_anisotropic(const DiffusionTensorPair& tensors, double s0, double b,
                          const Eigen::Vector3d& g) {
    if (std::abs(g.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("signal_anisotropic: gradient direction must be unit norm");
    }
    const double adc_d = tensors.d_tensor.quad_form(g);
    const double adc_ds = tensors.d_star_tensor.quad_form(g);
    return s0 * (tensors.f * std::exp(-b * adc_ds) + (1.0 - tensors.f) * std::exp(-b * adc_d));
}

} // namespace ivim
