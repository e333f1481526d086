#include "ivim/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ivim/errors.hpp"
#include "ivim/parallel.hpp"

namespace ivim {

namespace {

constexpr double kAtBoundFraction = 1e-3; // "at bound" = within 0.1% of the box edge

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// Map u in R onto (lo, hi); derivative dp/du for the chain rule.
double box_map(double u, double lo, double hi) { return lo + (hi - lo) * logistic(u); }
double box_map_deriv(double u, double lo, double hi) {
    const double s = logistic(u);
    return (hi - lo) * s * (1.0 - s);
}
double box_unmap(double p, double lo, double hi) {
    const double w = hi - lo;
    const double t = std::clamp((p - lo) / w, 1e-9, 1.0 - 1e-9);
    return std::log(t / (1.0 - t));
}

bool near_bound(double p, double lo, double hi) {
    const double w = hi - lo;
    return p - lo <= kAtBoundFraction * w || hi - p <= kAtBoundFraction * w;
}

// Residuals and Jacobian of the stage-2 model in transformed coordinates.
// Two parameterizations share the solver:
//   free-s0:   theta = (s0, f, d_star),  S = s0*(f e^{-b D*} + (1-f) e^{-b d})
//   fixed-amp: theta = (p, d_star),      S = A e^{-b d} + p e^{-b D*}
struct Stage2Problem {
    const SignalVector& x;
    const std::vector<double>& b;
    double d_fixed;
    bool fixed_amplitude;
    double amplitude; // stage-1 intercept A (fixed-amp mode only)
    std::vector<double> lo, hi; // per free parameter

    int dim() const { return fixed_amplitude ? 2 : 3; }

    void physical(const Eigen::VectorXd& u, std::vector<double>& p) const {
        p.resize(dim());
        for (int k = 0; k < dim(); ++k) p[k] = box_map(u[k], lo[k], hi[k]);
    }

    double objective(const Eigen::VectorXd& u) const {
        std::vector<double> p;
        physical(u, p);
        double obj = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double r = model(p, b[i]) - x[i];
            obj += r * r;
        }
        return obj;
    }

    double model(const std::vector<double>& p, double bi) const {
        if (fixed_amplitude) {
            return amplitude * std::exp(-bi * d_fixed) + p[0] * std::exp(-bi * p[1]);
        }
        return p[0] * (p[1] * std::exp(-bi * p[2]) + (1.0 - p[1]) * std::exp(-bi * d_fixed));
    }

    void residuals_jacobian(const Eigen::VectorXd& u, Eigen::VectorXd& r, Eigen::MatrixXd& jac) const {
        std::vector<double> p;
        physical(u, p);
        const int n = static_cast<int>(b.size());
        r.resize(n);
        jac.resize(n, dim());
        for (int i = 0; i < n; ++i) {
            const double bi = b[i];
            const double ed = std::exp(-bi * d_fixed);
            if (fixed_amplitude) {
                const double eds = std::exp(-bi * p[1]);
                r[i] = amplitude * ed + p[0] * eds - x[i];
                jac(i, 0) = eds;
                jac(i, 1) = -p[0] * bi * eds;
            } else {
                const double eds = std::exp(-bi * p[2]);
                r[i] = p[0] * (p[1] * eds + (1.0 - p[1]) * ed) - x[i];
                jac(i, 0) = p[1] * eds + (1.0 - p[1]) * ed;
                jac(i, 1) = p[0] * (eds - ed);
                jac(i, 2) = -p[0] * p[1] * bi * eds;
            }
        }
        for (int k = 0; k < dim(); ++k) {
            jac.col(k) *= box_map_deriv(u[k], lo[k], hi[k]);
        }
    }
};

struct LmOutcome {
    Eigen::VectorXd u;
    double objective = std::numeric_limits<double>::infinity();
    bool converged = false;
    std::vector<double> trace;
};

LmOutcome levenberg_marquardt(const Stage2Problem& problem, Eigen::VectorXd u,
                              int max_iterations, double tol) {
    LmOutcome out;
    double obj = problem.objective(u);
    out.trace.push_back(obj);
    double lambda = 1e-3;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    bool stationary = false;

    for (int it = 0; it < max_iterations; ++it) {
        problem.residuals_jacobian(u, r, jac);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        Eigen::MatrixXd a = jtj;
        for (int k = 0; k < a.rows(); ++k) {
            a(k, k) += lambda * std::max(jtj(k, k), 1e-14);
        }
        const Eigen::VectorXd step = a.ldlt().solve(-g);
        if (!step.allFinite()) {
            lambda *= 4.0;
            if (lambda > 1e15) { stationary = true; break; }
            continue;
        }
        const Eigen::VectorXd u_new = u + step;
        const double obj_new = problem.objective(u_new);
        if (obj_new < obj) {
            const double decrease = obj - obj_new;
            u = u_new;
            obj = obj_new;
            out.trace.push_back(obj);
            lambda = std::max(lambda * 0.3, 1e-14);
            if (decrease <= tol * std::max(obj, 1e-300) || step.lpNorm<Eigen::Infinity>() < 1e-14) {
                out.converged = true;
                break;
            }
        } else {
            lambda *= 4.0;
            if (lambda > 1e15) { stationary = true; break; }
        }
    }
    // No descent direction left at finite damping: a stationary point within
    // working precision counts as converged.
    if (stationary) out.converged = true;
    out.u = std::move(u);
    out.objective = obj;
    return out;
}

} // namespace

void LsqConfig::validate(const AcquisitionProtocol& protocol) const {
    protocol.validate();
    bounds.validate();
    if (protocol.n_b() >= 2) {
        if (!(segmentation_threshold > protocol.b_values.front() &&
              segmentation_threshold < protocol.b_values.back())) {
            throw ConfigError("lsq.segmentation_threshold: must lie strictly between the "
                              "smallest and largest protocol b-values");
        }
    }
    if (max_iterations < 1) throw ConfigError("lsq.max_iterations: must be >= 1");
    if (!(convergence_tol > 0.0)) throw ConfigError("lsq.convergence_tol: must be > 0");
}

Stage1Fit fit_stage1_monoexp(const SignalVector& signal, const AcquisitionProtocol& protocol,
                             const LsqConfig& config) {
    if (signal.size() != protocol.n_b()) {
        throw DataError("fit_stage1_monoexp: signal length does not match protocol b-value count");
    }
    // Plain linear least squares of log(x) on b over the high-b segment.
    double sum_b = 0, sum_y = 0, sum_bb = 0, sum_by = 0;
    int n = 0;
    std::vector<double> bs, ys;
    for (std::size_t i = 0; i < signal.size(); ++i) {
        if (protocol.b_values[i] < config.segmentation_threshold) continue;
        if (!(signal[i] > 0.0)) continue; // log undefined, excluded
        const double bi = protocol.b_values[i];
        const double yi = std::log(signal[i]);
        bs.push_back(bi);
        ys.push_back(yi);
        sum_b += bi; sum_y += yi; sum_bb += bi * bi; sum_by += bi * yi;
        ++n;
    }
    if (n < 2) {
        throw DataError("fit_stage1_monoexp: fit degenerate, fewer than 2 usable high-b points");
    }
    const double denom = n * sum_bb - sum_b * sum_b;
    const double slope = (n * sum_by - sum_b * sum_y) / denom;
    const double intercept_log = (sum_y - slope * sum_b) / n;

    Stage1Fit fit;
    fit.points_used = n;
    fit.d = std::clamp(-slope, config.bounds.lo.d, config.bounds.hi.d);
    fit.intercept = std::exp(intercept_log);

    double ss_res = 0, ss_tot = 0;
    const double mean_y = sum_y / n;
    for (int i = 0; i < n; ++i) {
        const double pred = intercept_log + slope * bs[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    return fit;
}

namespace {

LsqFitResult run_stage2(const SignalVector& signal, const AcquisitionProtocol& protocol,
                        double d_fixed, bool fixed_amplitude, double stage1_intercept,
                        double stage1_r2, const LsqConfig& config) {
    const ParamPrior& box = config.bounds;
    d_fixed = std::clamp(d_fixed, box.lo.d, std::min(box.hi.d, box.hi.d_star));
    const double ds_lo = std::max(box.lo.d_star, d_fixed); // enforce d <= d_star
    const double ds_hi = std::max(box.hi.d_star, ds_lo * (1.0 + 1e-12));

    Stage2Problem problem{signal, protocol.b_values, d_fixed, fixed_amplitude,
                          stage1_intercept, {}, {}};

    std::vector<std::array<double, 2>> starts; // (f_start, d_star_start)
    for (double f0 : {0.05, 0.3}) {
        for (double ds0 : {5e-3, 50e-3}) starts.push_back({f0, ds0});
    }

    const double s0_init = std::clamp(signal.front(), box.lo.s0 + 1e-12, box.hi.s0);

    if (fixed_amplitude) {
        // Free parameters (p, d_star) with S = A e^{-b d} + p e^{-b D*};
        // p's box is the intersection of the f box and the s0 box images.
        const double a = stage1_intercept;
        double p_lo = a * box.lo.f / (1.0 - box.lo.f);
        double p_hi = std::min(a * box.hi.f / (1.0 - box.hi.f), box.hi.s0 - a);
        if (!(p_hi > p_lo)) p_hi = p_lo + std::max(p_lo, 1.0) * 1e-9;
        problem.lo = {p_lo, ds_lo};
        problem.hi = {p_hi, ds_hi};
    } else {
        problem.lo = {box.lo.s0, box.lo.f, ds_lo};
        problem.hi = {box.hi.s0, box.hi.f, ds_hi};
    }

    LmOutcome best;
    double best_f = std::numeric_limits<double>::infinity();
    bool any_finished = false;
    for (const auto& [f0, ds0] : starts) {
        Eigen::VectorXd u(problem.dim());
        if (fixed_amplitude) {
            const double p0 = stage1_intercept * f0 / (1.0 - f0);
            u[0] = box_unmap(p0, problem.lo[0], problem.hi[0]);
            u[1] = box_unmap(ds0, problem.lo[1], problem.hi[1]);
        } else {
            u[0] = box_unmap(s0_init, problem.lo[0], problem.hi[0]);
            u[1] = box_unmap(f0, problem.lo[1], problem.hi[1]);
            u[2] = box_unmap(ds0, problem.lo[2], problem.hi[2]);
        }
        LmOutcome out = levenberg_marquardt(problem, std::move(u), config.max_iterations,
                                            config.convergence_tol);
        if (!std::isfinite(out.objective)) continue;
        any_finished = true;
        std::vector<double> p;
        problem.physical(out.u, p);
        const double f_val = fixed_amplitude ? p[0] / (stage1_intercept + p[0]) : p[1];
        const bool better = out.objective < best.objective ||
                            (out.objective == best.objective && f_val < best_f);
        if (better) {
            best = std::move(out);
            best_f = f_val;
        }
    }
    if (!any_finished) {
        throw NumericalError("fit_stage2_perfusion: every start diverged");
    }

    std::vector<double> p;
    problem.physical(best.u, p);

    LsqFitResult result;
    if (fixed_amplitude) {
        const double s0 = stage1_intercept + p[0];
        const double f = p[0] / s0;
        result.params = IvimParams::unchecked(std::clamp(s0, box.lo.s0, box.hi.s0),
                                              std::clamp(f, box.lo.f, box.hi.f), d_fixed, p[1]);
    } else {
        result.params = IvimParams::unchecked(p[0], p[1], d_fixed, p[2]);
    }
    result.residual_norm = std::sqrt(best.objective);
    result.stage1_r2 = stage1_r2;
    result.converged = best.converged;
    result.objective_trace = std::move(best.trace);
    result.at_bound_mask = {
        near_bound(result.params.s0, box.lo.s0, box.hi.s0),
        near_bound(result.params.f, box.lo.f, box.hi.f),
        near_bound(result.params.d, box.lo.d, box.hi.d),
        near_bound(result.params.d_star, box.lo.d_star, box.hi.d_star),
    };
    return result;
}

} // namespace

LsqFitResult fit_stage2_perfusion(const SignalVector& signal, const AcquisitionProtocol& protocol,
                                  double d_fixed, const LsqConfig& config) {
    if (signal.size() != protocol.n_b()) {
        throw DataError("fit_stage2_perfusion: signal length does not match protocol");
    }
    // The standalone operation always exposes the free-(s0, f, d_star) fit;
    // fix_s0_from_stage1 binds stage-1 outputs and so only applies inside
    // fit_lsq.
    return run_stage2(signal, protocol, d_fixed, /*fixed_amplitude=*/false, 0.0, 0.0, config);
}

LsqFitResult fit_lsq(const SignalVector& signal, const AcquisitionProtocol& protocol,
                     const LsqConfig& config) {
    const Stage1Fit stage1 = fit_stage1_monoexp(signal, protocol, config);
    return run_stage2(signal, protocol, stage1.d, config.fix_s0_from_stage1, stage1.intercept,
                      stage1.r2, config);
}

LsqVolumeResult fit_volume_lsq(const Volume& signals, const AcquisitionProtocol& protocol,
                               const LsqConfig& config, int workers) {
    if (signals.nc != static_cast<int>(protocol.n_b())) {
        throw DataError("fit_volume_lsq: volume has " + std::to_string(signals.nc) +
                        " channels, protocol expects " + std::to_string(protocol.n_b()));
    }
    LsqVolumeResult out;
    out.params = Volume::make(signals.nx, signals.ny, signals.nz, 4, "params");
    out.params.channel_names = {"s0", "f", "d", "d_star"};
    out.params.units = "s0: a.u.; f: fraction; d, d_star: mm^2/s";
    out.quality = Volume::make(signals.nx, signals.ny, signals.nz, 7, "quality");
    out.quality.channel_names = {"residual_norm", "stage1_r2", "converged",
                                 "at_bound_s0", "at_bound_f", "at_bound_d", "at_bound_d_star"};

    const std::int64_t n_vox = static_cast<std::int64_t>(signals.voxels());
    const int nc = signals.nc;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    parallel_for(n_vox, workers, [&](std::int64_t v) {
        SignalVector x(nc);
        for (int c = 0; c < nc; ++c) x[c] = signals.data[std::size_t(v) * nc + c];
        float* pv = &out.params.data[std::size_t(v) * 4];
        float* qv = &out.quality.data[std::size_t(v) * 7];
        try {
            const LsqFitResult r = fit_lsq(x, protocol, config);
            for (int k = 0; k < 4; ++k) pv[k] = static_cast<float>(r.params[k]);
            qv[0] = static_cast<float>(r.residual_norm);
            qv[1] = static_cast<float>(r.stage1_r2);
            qv[2] = r.converged ? 1.0f : 0.0f;
            for (int k = 0; k < 4; ++k) qv[3 + k] = r.at_bound_mask[k] ? 1.0f : 0.0f;
        } catch (const std::exception&) {
            for (int k = 0; k < 4; ++k) pv[k] = nan;
            qv[0] = nan;
            qv[1] = nan;
            qv[2] = 0.0f;
            for (int k = 0; k < 4; ++k) qv[3 + k] = 0.0f;
        }
    });
    return out;
}

} // namespace ivim
