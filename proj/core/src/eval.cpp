#include "ivim/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ivim/errors.hpp"
#include "ivim/parallel.hpp"
#include "ivim/simulate.hpp"
#include "ivim/tensor.hpp"

namespace ivim {

namespace {

// Protocol-and-seed digest embedded in report artifacts.
std::string protocol_fingerprint(const AcquisitionProtocol& protocol, std::uint64_t seed) {
    std::string blob;
    const auto add = [&blob](const void* p, std::size_t n) {
        blob.append(static_cast<const char*>(p), n);
    };
    for (double b : protocol.b_values) add(&b, sizeof(b));
    for (const auto& g : protocol.gradient_dirs) {
        for (int i = 0; i < 3; ++i) {
            const double v = g[i];
            add(&v, sizeof(v));
        }
    }
    for (double s : protocol.noise_sigmas) add(&s, sizeof(s));
    for (double p : protocol.dephase_probs) add(&p, sizeof(p));
    add(&seed, sizeof(seed));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", crc32(blob.data(), blob.size()));
    return buf;
}

// Canonical axis order for the two varied parameters: f < d < d_star.
std::pair<ParamId, ParamId> varied_axes(ParamId fixed) {
    switch (fixed) {
        case ParamId::f: return {ParamId::d, ParamId::d_star};
        case ParamId::d: return {ParamId::f, ParamId::d_star};
        case ParamId::d_star: return {ParamId::f, ParamId::d};
        default: throw ConfigError("uncertainty grid: fixed_param must be f, d or d_star");
    }
}

} // namespace

void UncertaintyGridSpec::validate(const ParamPrior& prior) const {
    if (fixed_param == ParamId::s0) {
        throw ConfigError("uncertainty grid: fixed_param must be f, d or d_star");
    }
    if (resolution < 2) throw ConfigError("uncertainty grid: resolution must be >= 2");
    if (realizations < 1) throw ConfigError("uncertainty grid: realizations must be >= 1");
    const auto fixed_idx = static_cast<std::size_t>(fixed_param);
    if (fixed_value < prior.lo[fixed_idx] || fixed_value > prior.hi[fixed_idx]) {
        throw ConfigError("uncertainty grid: fixed_value outside the prior range");
    }
    if (s0 < prior.lo.s0 || s0 > prior.hi.s0) {
        throw ConfigError("uncertainty grid: s0 outside the prior range");
    }
    const auto [ax, ay] = varied_axes(fixed_param);
    const auto check_range = [&](ParamId id, const std::array<double, 2>& r, const char* name) {
        if (r[0] == 0.0 && r[1] == 0.0) return; // default: full prior range
        const auto i = static_cast<std::size_t>(id);
        if (!(r[0] < r[1]) || r[0] < prior.lo[i] || r[1] > prior.hi[i]) {
            throw ConfigError(std::string("uncertainty grid: ") + name +
                              " must be an increasing range inside the prior");
        }
    };
    check_range(ax, range_x, "range_x");
    check_range(ay, range_y, "range_y");
}

UncertaintyGrid uncertainty_grid(const MlpModel& model, const UncertaintyGridSpec& spec,
                                 const AcquisitionProtocol& protocol, const ParamPrior& prior,
                                 std::uint64_t seed, int workers) {
    spec.validate(prior);
    const auto [ax, ay] = varied_axes(spec.fixed_param);

    const auto axis_range = [&](ParamId id, const std::array<double, 2>& requested) {
        if (requested[0] == 0.0 && requested[1] == 0.0) {
            const auto i = static_cast<std::size_t>(id);
            return std::array<double, 2>{prior.lo[i], prior.hi[i]};
        }
        return requested;
    };
    const auto rx = axis_range(ax, spec.range_x);
    const auto ry = axis_range(ay, spec.range_y);

    UncertaintyGrid grid;
    grid.axis_x = ax;
    grid.axis_y = ay;
    const int res = spec.resolution;
    grid.x_values.resize(res);
    grid.y_values.resize(res);
    for (int i = 0; i < res; ++i) {
        grid.x_values[i] = rx[0] + (rx[1] - rx[0]) * double(i) / double(res - 1);
        grid.y_values[i] = ry[0] + (ry[1] - ry[0]) * double(i) / double(res - 1);
    }
    for (auto& plane : grid.sigma) {
        plane.assign(std::size_t(res) * res, std::numeric_limits<double>::quiet_NaN());
    }

    const int n_b = static_cast<int>(protocol.n_b());
    parallel_for(std::int64_t(res) * res, workers, [&](std::int64_t cell) {
        const int ix = static_cast<int>(cell % res);
        const int iy = static_cast<int>(cell / res);
        double vals[4] = {spec.s0, 0, 0, 0};
        vals[static_cast<int>(spec.fixed_param)] = spec.fixed_value;
        vals[static_cast<int>(ax)] = grid.x_values[ix];
        vals[static_cast<int>(ay)] = grid.y_values[iy];
        if (vals[2] > vals[3]) return; // outside d <= d_star, stays NaN
        const IvimParams y = IvimParams::unchecked(vals[0], vals[1], vals[2], vals[3]);

        Rng rng(seed, static_cast<std::uint64_t>(cell));
        Eigen::MatrixXd x(n_b, spec.realizations);
        for (int rcol = 0; rcol < spec.realizations; ++rcol) {
            const SignalVector s = simulate_signal(y, protocol, /*with_dephasing=*/true, rng);
            for (int c = 0; c < n_b; ++c) x(c, rcol) = s[c];
        }
        const Eigen::MatrixXd raw = forward_batch(model, x);
        for (int p = 0; p < 4; ++p) {
            const double width = model.output_hi[p] - model.output_lo[p];
            double acc = 0.0;
            for (int rcol = 0; rcol < spec.realizations; ++rcol) {
                acc += std::exp(raw(4 + p, rcol)) * width;
            }
            grid.sigma[p][cell] = acc / double(spec.realizations);
        }
    });
    return grid;
}

BenchmarkReport anisotropic_benchmark(const MlpModel& model, const LsqConfig& lsq_config,
                                      const AcquisitionProtocol& protocol, int n_cases,
                                      bool with_dephasing, std::uint64_t seed, int workers) {
    if (n_cases < 1) throw ConfigError("anisotropic benchmark: n_cases must be >= 1");
    protocol.validate();

    BenchmarkReport report;
    report.truth = IvimParams::unchecked(1000.0, 0.18, 9.4e-4, 5.3e-2);
    report.with_dephasing = with_dephasing;
    report.seed = seed;
    report.fingerprint = protocol_fingerprint(protocol, seed);
    report.cases.resize(n_cases);

    constexpr double kFa = 0.8;
    parallel_for(n_cases, workers, [&](std::int64_t c) {
        Rng rng(seed, static_cast<std::uint64_t>(c));
        // One tissue orientation per case, shared by both tensors.
        const Quaternion rot = Quaternion::random_rotation(rng);
        DiffusionTensorPair tensors;
        tensors.d_tensor = prolate_tensor_from_mean_adc_fa(report.truth.d, kFa, rot);
        tensors.d_star_tensor = prolate_tensor_from_mean_adc_fa(report.truth.d_star, kFa, rot);
        tensors.f = report.truth.f;

        const SignalVector x =
            simulate_signal_anisotropic(tensors, report.truth.s0, protocol, with_dephasing, rng);

        BenchmarkCase& bc = report.cases[c];
        try {
            bc.lsq_estimate = fit_lsq(x, protocol, lsq_config).params;
        } catch (const std::exception&) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            bc.lsq_estimate = IvimParams::unchecked(nan, nan, nan, nan);
        }
        bc.agp_estimate = forward(model, x).mean;
    });

    for (int p = 0; p < 4; ++p) {
        double acc_lsq = 0.0, acc_agp = 0.0;
        int n_lsq = 0;
        for (const auto& bc : report.cases) {
            if (std::isfinite(bc.lsq_estimate[p])) {
                acc_lsq += std::abs(bc.lsq_estimate[p] - report.truth[p]);
                ++n_lsq;
            }
            acc_agp += std::abs(bc.agp_estimate[p] - report.truth[p]);
        }
        report.mae_lsq[p] = n_lsq > 0 ? acc_lsq / n_lsq : std::numeric_limits<double>::quiet_NaN();
        report.mae_agp[p] = acc_agp / double(n_cases);
    }
    return report;
}

double repeatability_var(std::span<const double> test_means, std::span<const double> retest_means) {
    if (test_means.empty() || test_means.size() != retest_means.size()) {
        throw DataError("repeatability_var: need equal-length nonempty lists");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < test_means.size(); ++i) {
        const double denom = std::abs(test_means[i] + retest_means[i]) / 2.0;
        if (denom == 0.0) {
            throw DataError("repeatability_var: TEST+RETEST is zero for subject " +
                            std::to_string(i));
        }
        acc += std::abs(test_means[i] - retest_means[i]) / denom;
    }
    return 100.0 * acc / double(test_means.size());
}

double roi_mean(const Volume& map, int channel, const Volume& mask) {
    if (channel < 0 || channel >= map.nc) throw DataError("roi_mean: channel out of range");
    if (mask.nx != map.nx || mask.ny != map.ny || mask.nz != map.nz) {
        throw DataError("roi_mean: mask dimensions do not match the map");
    }
    double acc = 0.0;
    std::int64_t n = 0;
    for (int z = 0; z < map.nz; ++z) {
        for (int y = 0; y < map.ny; ++y) {
            for (int x = 0; x < map.nx; ++x) {
                if (mask.at(x, y, z, 0) == 0.0f) continue;
                const float v = map.at(x, y, z, channel);
                if (std::isnan(v)) continue; // flagged voxels excluded
                acc += v;
                ++n;
            }
        }
    }
    if (n == 0) throw DataError("roi_mean: effective mask is empty");
    return acc / double(n);
}

namespace {

// Smooth field in [-1, 1]: bilinear interpolation of a coarse 2x2 draw.
double smooth_field(double u, double v, const double corner[4]) {
    const double top = corner[0] * (1 - u) + corner[1] * u;
    const double bot = corner[2] * (1 - u) + corner[3] * u;
    return top * (1 - v) + bot * v;
}

} // namespace

RepeatabilityReport synthetic_repeatability_study(const MlpModel& model, const LsqConfig& lsq_config,
                                                  const AcquisitionProtocol& protocol,
                                                  int n_subjects, std::uint64_t seed,
                                                  int workers) {
    if (n_subjects < 2) throw ConfigError("repeatability study: need at least 2 subjects");
    protocol.validate();

    constexpr int roi = 6; // ROI field is roi x roi voxels
    const IvimParams base = IvimParams::unchecked(1000.0, 0.3, 1.5e-3, 3.0e-2);

    // [method][param][subject][acq]
    std::vector<std::array<std::array<std::array<double, 2>, 4>, 2>> means(n_subjects);

    parallel_for(n_subjects, workers, [&](std::int64_t s) {
        Rng rng(seed, static_cast<std::uint64_t>(s));
        // Per-parameter smooth +-10% modulation around the base values.
        double corners[4][4];
        for (auto& c : corners) {
            for (double& v : c) v = rng.uniform(-1.0, 1.0);
        }
        std::vector<IvimParams> truth(roi * roi);
        for (int j = 0; j < roi; ++j) {
            for (int i = 0; i < roi; ++i) {
                const double u = double(i) / (roi - 1);
                const double v = double(j) / (roi - 1);
                double vals[4];
                for (int p = 0; p < 4; ++p) {
                    vals[p] = base[p] * (1.0 + 0.1 * smooth_field(u, v, corners[p]));
                }
                truth[j * roi + i] = IvimParams::unchecked(vals[0], vals[1], vals[2], vals[3]);
            }
        }

        for (int acq = 0; acq < 2; ++acq) {
            std::array<std::array<double, 2>, 4> acc{}; // [param][method] sums
            std::array<std::array<int, 2>, 4> cnt{};
            for (int v = 0; v < roi * roi; ++v) {
                Rng vox_rng(seed, (std::uint64_t(s) * 2 + acq) * 4096 + v + 1000000);
                const SignalVector x =
                    simulate_signal(truth[v], protocol, /*with_dephasing=*/true, vox_rng);
                try {
                    const IvimParams est = fit_lsq(x, protocol, lsq_config).params;
                    for (int p = 0; p < 4; ++p) {
                        acc[p][0] += est[p];
                        cnt[p][0] += 1;
                    }
                } catch (const std::exception&) {
                    // degenerate voxel excluded from the ROI mean
                }
                const IvimParams est_agp = forward(model, x).mean;
                for (int p = 0; p < 4; ++p) {
                    acc[p][1] += est_agp[p];
                    cnt[p][1] += 1;
                }
            }
            for (int p = 0; p < 4; ++p) {
                for (int m = 0; m < 2; ++m) {
                    means[s][m][p][acq] = cnt[p][m] > 0 ? acc[p][m] / cnt[p][m]
                                                        : std::numeric_limits<double>::quiet_NaN();
                }
            }
        }
    });

    RepeatabilityReport report;
    report.n_subjects = n_subjects;
    report.seed = seed;
    report.fingerprint = protocol_fingerprint(protocol, seed);
    for (int m = 0; m < 2; ++m) {
        RepeatabilityRow& row = m == 0 ? report.lsq : report.agp;
        // Table layout: f, d, d_star (s0 omitted).
        const int params[3] = {1, 2, 3};
        for (int k = 0; k < 3; ++k) {
            std::vector<double> test(n_subjects), retest(n_subjects);
            double mean_acc = 0.0;
            for (int s = 0; s < n_subjects; ++s) {
                test[s] = means[s][m][params[k]][0];
                retest[s] = means[s][m][params[k]][1];
                mean_acc += 0.5 * (test[s] + retest[s]);
            }
            row.var_percent[k] = repeatability_var(test, retest);
            row.mean[k] = mean_acc / n_subjects;
        }
    }
    return report;
}

} // namespace ivim
