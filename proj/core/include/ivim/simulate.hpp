#pragma once

#include <utility>

#include "ivim/model.hpp"
#include "ivim/protocol.hpp"
#include "ivim/rng.hpp"
#include "ivim/tensor.hpp"

namespace ivim {

/// Rician magnitude draw: sqrt((amplitude + n1)^2 + n2^2) with n1, n2 iid
/// N(0, sigma^2). Consumes exactly one normal pair.
double sample_rician(double amplitude, double sigma, Rng& rng);

/// Stochastic acquisition model. Per b-value i, in order:
///   1. one uniform for the dephasing gate gamma_i ~ Bernoulli(beta_i)
///      (forced to 0 when with_dephasing is false, draw still consumed),
///   2. one uniform for the shared attenuation alpha ~ U(0,1)
///      (consumed regardless of gamma_i),
///   3. per gradient j, one normal pair for the Rician draw
///      Rice(clean_i * alpha^gamma_i, sigma_j).
/// x_i is the mean over gradients. The draw order is a compatibility
/// contract: identical seeds replay bit-identical signals, and the isotropic
/// and tensor variants consume identical streams.
SignalVector simulate_signal(const IvimParams& params, const AcquisitionProtocol& protocol,
                             bool with_dephasing, Rng& rng);

/// Same pipeline with per-gradient clean amplitudes from the tensor model.
SignalVector simulate_signal_anisotropic(const DiffusionTensorPair& tensors, double s0,
                                         const AcquisitionProtocol& protocol,
                                         bool with_dephasing, Rng& rng);

/// One training pair: y ~ prior, x ~ simulate_signal(y, ..., dephasing on).
std::pair<IvimParams, SignalVector> sample_training_pair(const ParamPrior& prior,
                                                         const AcquisitionProtocol& protocol,
                                                         Rng& rng);

} // namespace ivim
