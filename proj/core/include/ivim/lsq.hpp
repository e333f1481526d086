#pragma once

#include <array>
#include <vector>

#include "ivim/model.hpp"
#include "ivim/protocol.hpp"
#include "ivim/volume.hpp"

namespace ivim {

struct LsqConfig {
    double segmentation_threshold = 250.0; // s/mm^2
    ParamPrior bounds = ParamPrior::defaults();
    int max_iterations = 200;
    double convergence_tol = 1e-12; // relative objective decrease
    /// Keep the stage-1 diffusion amplitude fixed in stage 2 (fit the
    /// perfusion amplitude and d_star only) instead of re-estimating s0
    /// jointly.
    bool fix_s0_from_stage1 = false;

    void validate(const AcquisitionProtocol& protocol) const;
};

struct Stage1Fit {
    double d = 0.0;         // clamped to bounds
    double intercept = 0.0; // A ~ s0*(1-f)
    double r2 = 0.0;        // goodness of the log-linear fit
    int points_used = 0;
};

struct LsqFitResult {
    IvimParams params;
    double residual_norm = 0.0; // ||S(b;y) - x||_2 over all b-values
    double stage1_r2 = 0.0;
    bool converged = false;
    std::array<bool, 4> at_bound_mask{}; // s0, f, d, d_star
    std::vector<double> objective_trace; // accepted stage-2 objectives
};

/// Stage 1: log-linear mono-exponential fit over b >= threshold, nonpositive
/// samples excluded. Throws DataError when fewer than 2 usable points remain.
Stage1Fit fit_stage1_monoexp(const SignalVector& signal, const AcquisitionProtocol& protocol,
                             const LsqConfig& config);

/// Stage 2: bounded Levenberg-Marquardt over (s0, f, d_star) with d fixed,
/// box mapped onto unbounded coordinates by a logistic reparameterization,
/// 4 deterministic starts. Throws NumericalError if every start diverges.
LsqFitResult fit_stage2_perfusion(const SignalVector& signal, const AcquisitionProtocol& protocol,
                                  double d_fixed, const LsqConfig& config);

/// Two-stage segmented fit (stage 1 then stage 2).
LsqFitResult fit_lsq(const SignalVector& signal, const AcquisitionProtocol& protocol,
                     const LsqConfig& config);

struct LsqVolumeResult {
    Volume params;  // 4 channels: s0, f, d, d_star
    Volume quality; // residual_norm, stage1_r2, converged, at_bound_{s0,f,d,d_star}
};

/// Per-voxel fit_lsq, parallel across voxels. Voxels whose fit throws are
/// written as NaN with converged=0 instead of aborting the volume.
LsqVolumeResult fit_volume_lsq(const Volume& signals, const AcquisitionProtocol& protocol,
                               const LsqConfig& config, int workers = 0);

} // namespace ivim
