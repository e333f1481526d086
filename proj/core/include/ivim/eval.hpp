#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ivim/lsq.hpp"
#include "ivim/mlp.hpp"
#include "ivim/model.hpp"
#include "ivim/protocol.hpp"
#include "ivim/volume.hpp"

namespace ivim {

enum class ParamId { s0 = 0, f = 1, d = 2, d_star = 3 };

struct UncertaintyGridSpec {
    ParamId fixed_param = ParamId::f; // one of f, d, d_star
    double fixed_value = 0.2;
    std::array<double, 2> range_x{}; // varied axis 1 (prior range when 0,0)
    std::array<double, 2> range_y{}; // varied axis 2
    int resolution = 100;            // cells per axis
    int realizations = 1000;         // noise realizations per cell
    double s0 = 1000.0;

    void validate(const ParamPrior& prior) const;
};

/// One 2-D grid of mean predicted posterior std per output parameter.
/// Cells violating d <= d_star hold NaN.
struct UncertaintyGrid {
    ParamId axis_x, axis_y;
    std::vector<double> x_values, y_values;       // size = resolution
    std::array<std::vector<double>, 4> sigma;     // row-major [iy*res + ix]
    double at(int param, int ix, int iy) const {
        return sigma[param][std::size_t(iy) * x_values.size() + ix];
    }
};

UncertaintyGrid uncertainty_grid(const MlpModel& model, const UncertaintyGridSpec& spec,
                                 const AcquisitionProtocol& protocol, const ParamPrior& prior,
                                 std::uint64_t seed, int workers = 0);

struct BenchmarkCase {
    IvimParams lsq_estimate;
    IvimParams agp_estimate;
};

/// MAE comparison of both fitters on randomly rotated prolate tensor pairs
/// (directional-average ADC 9.4e-4 and 5.3e-2 mm^2/s, FA 0.8, f=0.18,
/// s0=1000), signals simulated with the tetrahedral protocol.
struct BenchmarkReport {
    IvimParams truth;
    std::array<double, 4> mae_lsq{}; // native units, per parameter
    std::array<double, 4> mae_agp{};
    std::vector<BenchmarkCase> cases;
    bool with_dephasing = false;
    std::uint64_t seed = 0;
    std::string fingerprint;
};

BenchmarkReport anisotropic_benchmark(const MlpModel& model, const LsqConfig& lsq_config,
                                      const AcquisitionProtocol& protocol, int n_cases,
                                      bool with_dephasing, std::uint64_t seed, int workers = 0);

/// Test-retest variability:
/// (100/N) * sum_i |t_i - r_i| / (|t_i + r_i| / 2).
/// Throws DataError naming the subject index when t_i + r_i == 0.
double repeatability_var(std::span<const double> test_means, std::span<const double> retest_means);

/// Mean of one map channel over nonzero mask voxels, NaN voxels excluded.
/// Throws DataError when the effective mask is empty.
double roi_mean(const Volume& map, int channel, const Volume& mask);

struct RepeatabilityRow {
    std::array<double, 3> var_percent{}; // f, d, d_star
    std::array<double, 3> mean{};        // across-subject mean of ROI means
};

struct RepeatabilityReport {
    RepeatabilityRow lsq, agp;
    int n_subjects = 0;
    std::uint64_t seed = 0;
    std::string fingerprint;
};

/// Synthetic surrogate for a paired-rescan study: per subject, a smooth
/// ground-truth ROI field (+-10% around f=0.3, d=1.5e-3, d_star=3e-2,
/// s0=1000) is acquired twice with independent noise and dephasing, fitted
/// with both methods, and summarized as VAR% per parameter.
RepeatabilityReport synthetic_repeatability_study(const MlpModel& model, const LsqConfig& lsq_config,
                                                  const AcquisitionProtocol& protocol,
                                                  int n_subjects, std::uint64_t seed,
                                                  int workers = 0);

} // namespace ivim
