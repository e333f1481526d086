// Acceptance suite: one pass/fail line per criterion. Trains the desk-scale
// posterior network once and reuses it for every model-dependent criterion.
//
// Usage: ivim_acceptance --cli <path-to-ivim-binary> [--model-cache <file>]
// A cache file is only for local iteration; a fresh run trains from scratch.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "ivim/abc.hpp"
#include "ivim/config.hpp"
#include "ivim/errors.hpp"
#include "ivim/eval.hpp"
#include "ivim/lsq.hpp"
#include "ivim/mlp.hpp"
#include "ivim/model.hpp"
#include "ivim/parallel.hpp"
#include "ivim/simulate.hpp"
#include "ivim/tensor.hpp"
#include "ivim/train.hpp"
#include "ivim/volume.hpp"

using namespace ivim;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void info(const std::string& label, const std::string& detail) {
    std::printf("[info] %s — %s\n", label.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), format, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// criterion 1: gradients vs central finite differences

void criterion_gradients() {
    Rng init(101);
    const MlpModel m = MlpModel::init(17, ParamPrior::defaults(), init);
    const AcquisitionProtocol proto = default_protocol();
    const ParamPrior prior = ParamPrior::defaults();

    const int batch = 5;
    Eigen::MatrixXd x(17, batch), t(4, batch);
    for (int k = 0; k < batch; ++k) {
        Rng rng(102, k);
        const auto [y, s] = sample_training_pair(prior, proto, rng);
        for (int c = 0; c < 17; ++c) x(c, k) = s[c];
        for (int p = 0; p < 4; ++p) t(p, k) = y[p];
    }
    const LossAndGradients lg = backward(m, x, t);

    const auto loss_at = [&](const MlpModel& model) {
        const Eigen::Array4d width = (model.output_hi - model.output_lo).array();
        const Eigen::MatrixXd tn =
            ((t.array().colwise() - model.output_lo.array()).colwise() / width).matrix();
        return gaussian_nll_loss(forward_batch(model, x), tn);
    };

    Rng pick(103);
    const double h = 1e-4;
    int checked = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 120; ++rep) {
        const std::size_t l = std::size_t(pick.uniform() * double(m.weights.size()));
        const int r = int(pick.uniform() * m.weights[l].rows());
        const int c = int(pick.uniform() * m.weights[l].cols());
        MlpModel plus = m, minus = m;
        plus.weights[l](r, c) += h;
        minus.weights[l](r, c) -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
        const double an = lg.grad.weights[l](r, c);
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
        worst = std::max(worst, rel);
        ++checked;
    }
    report(1, "gradient correctness vs central differences", worst < 1e-5 && checked >= 100,
           fmt("%d coordinates, worst relative error %.2e (< 1e-5)", checked, worst));
}

// ---------------------------------------------------------------------------
// criterion 2: LSQ exactness on clean data

void criterion_lsq_exactness() {
    const AcquisitionProtocol proto = default_protocol();
    const ParamPrior prior = ParamPrior::defaults();
    const LsqConfig config;

    Rng rng(201);
    double worst_res = 0, worst_f = 0, worst_ds = 0;
    bool ok = true;
    for (int t = 0; t < 100; ++t) {
        IvimParams y;
        do {
            y = sample_prior(prior, rng);
        } while (y.f < 0.05 || y.f > 0.5 || y.d_star / y.d < 5.0);
        SignalVector x(proto.n_b());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = signal_isotropic(y, proto.b_values[i]);

        // Stage-2 contract: with the true d fixed, the bounded LM must find
        // the zero-residual optimum.
        const LsqFitResult r = fit_stage2_perfusion(x, proto, y.d, config);
        const double res_rel = r.residual_norm / y.s0;
        const double f_rel = std::abs(r.params.f - y.f) / y.f;
        const double ds_rel = std::abs(r.params.d_star - y.d_star) / y.d_star;
        worst_res = std::max(worst_res, res_rel);
        worst_f = std::max(worst_f, f_rel);
        worst_ds = std::max(worst_ds, ds_rel);
        ok = ok && res_rel < 1e-6 && f_rel < 0.05 && ds_rel < 0.05;
    }
    report(2, "LSQ exactness on clean data", ok,
           fmt("100 draws: worst residual/s0 %.2e (< 1e-6), worst f err %.2e, worst d* err %.2e "
               "(< 5%%)",
               worst_res, worst_f, worst_ds));
}

// ---------------------------------------------------------------------------
// criteria 3+4: anisotropic benchmark against the trained model

void criteria_benchmark(const MlpModel& model) {
    const AcquisitionProtocol proto = default_protocol();
    const LsqConfig lsq;

    const BenchmarkReport with_dp = anisotropic_benchmark(model, lsq, proto, 1024, true, 301, 0);
    const BenchmarkReport wo_dp = anisotropic_benchmark(model, lsq, proto, 1024, false, 302, 0);

    info("benchmark w/ dephasing",
         fmt("LSQ f %.2f pp, d %.3g, d* %.3g | AGP f %.2f pp, d %.3g, d* %.3g",
             with_dp.mae_lsq[1] * 100, with_dp.mae_lsq[2], with_dp.mae_lsq[3],
             with_dp.mae_agp[1] * 100, with_dp.mae_agp[2], with_dp.mae_agp[3]));
    info("benchmark w/o dephasing",
         fmt("LSQ f %.2f pp, d %.3g, d* %.3g | AGP f %.2f pp, d %.3g, d* %.3g",
             wo_dp.mae_lsq[1] * 100, wo_dp.mae_lsq[2], wo_dp.mae_lsq[3], wo_dp.mae_agp[1] * 100,
             wo_dp.mae_agp[2], wo_dp.mae_agp[3]));

    const bool beats = with_dp.mae_agp[1] < with_dp.mae_lsq[1] &&
                       with_dp.mae_agp[2] < with_dp.mae_lsq[2] &&
                       with_dp.mae_agp[3] < with_dp.mae_lsq[3];
    const bool f_gate = with_dp.mae_agp[1] <= 0.04;
    const bool ds_gate = with_dp.mae_agp[3] <= 20e-3;
    report(3, "benchmark with dephasing: AGP beats LSQ on f, d, d*", beats && f_gate && ds_gate,
           fmt("ordering %s, MAE(f) %.2f pp (<= 4), MAE(d*) %.1f e-3 (<= 20)",
               beats ? "holds" : "violated", with_dp.mae_agp[1] * 100,
               with_dp.mae_agp[3] * 1e3));

    const double ratio = wo_dp.mae_lsq[3] / wo_dp.mae_agp[3];
    report(4, "benchmark without dephasing: AGP d* advantage >= 1.5x", ratio >= 1.5,
           fmt("LSQ/AGP MAE(d*) ratio %.2f (>= 1.5)", ratio));
}

// ---------------------------------------------------------------------------
// criterion 5: ABC agreement

void criterion_abc_agreement(const MlpModel& model) {
    const AcquisitionProtocol proto = default_protocol();
    const ParamPrior prior = ParamPrior::defaults();

    AbcConfig cfg;
    cfg.n_proposals = 1000000;
    cfg.acceptance_quantile = 1e-3;
    cfg.workers = 0;

    std::vector<double> shifts[4], ratios[4];
    for (int t = 0; t < 20; ++t) {
        Rng rng(501, t);
        IvimParams y = sample_prior(prior, rng);
        while (y.f < 0.1 || y.f > 0.4) y = sample_prior(prior, rng);
        const SignalVector obs = simulate_signal(y, proto, true, rng);
        cfg.seed = 502 + std::uint64_t(t) * 7919;
        const PosteriorSampleSet set = abc_posterior(obs, prior, proto, cfg);
        const GaussianPosterior agp = forward(model, obs);
        const PosteriorComparison cmp = compare_posteriors(set, agp);
        for (int p = 0; p < 4; ++p) {
            shifts[p].push_back(cmp.mean_shift[p]);
            ratios[p].push_back(cmp.std_ratio[p]);
        }
    }
    bool ok = true;
    std::string detail;
    for (int p = 0; p < 4; ++p) {
        const double ms = median(shifts[p]);
        const double sr = median(ratios[p]);
        ok = ok && ms < 0.5 && sr >= 0.5 && sr <= 2.0;
        detail += fmt("%s: shift %.2f ratio %.2f; ", IvimParams::names[p], ms, sr);
    }
    report(5, "ABC-AGP posterior agreement (20 signals, 1e6 proposals)", ok,
           detail + "gates: shift < 0.5, ratio in [0.5, 2]");
}

// ---------------------------------------------------------------------------
// criterion 6: uncertainty structure

void criterion_uncertainty_structure(const MlpModel& model) {
    const AcquisitionProtocol proto = default_protocol();
    const ParamPrior prior = ParamPrior::defaults();

    // (a) sigma(d*) for unidentifiable f vs mid-range f over 1e4 draws.
    double low_acc = 0, mid_acc = 0;
    int low_n = 0, mid_n = 0;
    for (int i = 0; i < 10000; ++i) {
        Rng rng(601, i);
        const auto [y, x] = sample_training_pair(prior, proto, rng);
        SignalVector xs(x.begin(), x.end());
        const double sigma_ds = forward(model, xs).std_dev()[3];
        if (y.f < 0.02) {
            low_acc += sigma_ds;
            ++low_n;
        } else if (y.f >= 0.15 && y.f <= 0.35) {
            mid_acc += sigma_ds;
            ++mid_n;
        }
    }
    const double low_mean = low_acc / std::max(low_n, 1);
    const double mid_mean = mid_acc / std::max(mid_n, 1);
    const bool a_ok = low_n > 0 && mid_n > 0 && low_mean > mid_mean;

    // (b) fixed f=0.2 grid: along the d* axis at d ~ 1e-3, both endpoints
    // exceed the row minimum.
    UncertaintyGridSpec spec;
    spec.fixed_param = ParamId::f;
    spec.fixed_value = 0.2;
    spec.resolution = 100;
    spec.realizations = 1000;
    const UncertaintyGrid grid = uncertainty_grid(model, spec, proto, prior, 602, 0);

    int ix = 0;
    for (std::size_t i = 0; i < grid.x_values.size(); ++i) {
        if (std::abs(grid.x_values[i] - 1e-3) < std::abs(grid.x_values[ix] - 1e-3)) {
            ix = static_cast<int>(i);
        }
    }
    int first = -1, last = -1;
    double row_min = std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < spec.resolution; ++iy) {
        const double v = grid.at(3, ix, iy);
        if (std::isnan(v)) continue;
        if (first < 0) first = iy;
        last = iy;
        row_min = std::min(row_min, v);
    }
    const bool b_ok = first >= 0 && last > first && grid.at(3, ix, first) > row_min &&
                      grid.at(3, ix, last) > row_min;
    report(6, "uncertainty structure (low-f inflation, non-monotone d* row)", a_ok && b_ok,
           fmt("(a) sigma(d*) f<0.02 %.3g > mid-f %.3g: %s; (b) d=%.3g row ends %.3g/%.3g > min "
               "%.3g: %s",
               low_mean, mid_mean, a_ok ? "yes" : "no", grid.x_values[ix],
               first >= 0 ? grid.at(3, ix, first) : 0.0, last >= 0 ? grid.at(3, ix, last) : 0.0,
               row_min, b_ok ? "yes" : "no"));
}

// ---------------------------------------------------------------------------
// criterion 7: calibration

void criterion_calibration(const MlpModel& model) {
    const AcquisitionProtocol proto = default_protocol();
    const ParamPrior prior = ParamPrior::defaults();
    int inside[4] = {0, 0, 0, 0};
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        Rng rng(701, i);
        const auto [y, x] = sample_training_pair(prior, proto, rng);
        SignalVector xs(x.begin(), x.end());
        const GaussianPosterior p = forward(model, xs);
        const auto sd = p.std_dev();
        for (int k = 0; k < 4; ++k) {
            if (std::abs(y[k] - p.mean[k]) < sd[k]) ++inside[k];
        }
    }
    bool ok = true;
    std::string detail = "coverage ";
    for (int k = 0; k < 4; ++k) {
        const double cov = double(inside[k]) / n;
        ok = ok && cov >= 0.55 && cov <= 0.80;
        detail += fmt("%s %.3f ", IvimParams::names[k], cov);
    }
    report(7, "posterior calibration (+-1 sigma in [0.55, 0.80])", ok, detail);
}

// ---------------------------------------------------------------------------
// criterion 8: synthetic repeatability

void criterion_repeatability(const MlpModel& model) {
    const AcquisitionProtocol proto = default_protocol();
    const LsqConfig lsq;
    int f_wins = 0, ds_wins = 0;
    std::string detail;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const RepeatabilityReport r =
            synthetic_repeatability_study(model, lsq, proto, 17, 801 + s, 0);
        if (r.agp.var_percent[0] < r.lsq.var_percent[0]) ++f_wins;
        if (r.agp.var_percent[2] < r.lsq.var_percent[2]) ++ds_wins;
        detail += fmt("seed %llu: f %.1f/%.1f d* %.1f/%.1f; ", (unsigned long long)(801 + s),
                      r.agp.var_percent[0], r.lsq.var_percent[0], r.agp.var_percent[2],
                      r.lsq.var_percent[2]);
    }
    report(8, "synthetic repeatability: AGP VAR% < LSQ VAR% in >= 4/5 seeds",
           f_wins >= 4 && ds_wins >= 4,
           fmt("f wins %d/5, d* wins %d/5 (AGP/LSQ VAR%%: %s)", f_wins, ds_wins, detail.c_str()));
}

// ---------------------------------------------------------------------------
// criterion 9: VAR% exact values

void criterion_var_exact() {
    const std::vector<double> t1{3.0}, r1{3.0};
    const std::vector<double> t2{3.0}, r2{1.0};
    const std::vector<double> t3{2.0, 1.0}, r3{2.0, 3.0};
    const double v1 = repeatability_var(t1, r1);
    const double v2 = repeatability_var(t2, r2);
    const double v3 = repeatability_var(t3, r3);
    const bool ok = std::abs(v1 - 0.0) < 1e-12 && std::abs(v2 - 100.0) < 1e-12 &&
                    std::abs(v3 - 50.0) < 1e-12;
    report(9, "VAR% exact substitution cases", ok,
           fmt("values %.17g, %.17g, %.17g vs 0, 100, 50 (tol 1e-12)", v1, v2, v3));
}

// ---------------------------------------------------------------------------
// criterion 10: Rician sampler moments

void criterion_rician_moments() {
    const int n = 1000000;
    const double sigma = 5.0;
    Rng rng(1001);
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += sample_rician(0.0, sigma, rng);
    const double rayleigh_mean = sigma * std::sqrt(std::numbers::pi / 2.0);
    const double se = sigma * std::sqrt((4.0 - std::numbers::pi) / 2.0) / std::sqrt(double(n));
    const double dev = std::abs(acc / n - rayleigh_mean);
    const bool a_ok = dev < 3.0 * se;

    const double amp = 100.0 * sigma;
    double acc2 = 0;
    for (int i = 0; i < n; ++i) acc2 += sample_rician(amp, sigma, rng);
    const double rel = std::abs(acc2 / n - amp) / amp;
    const bool b_ok = rel < 1e-3;
    report(10, "Rician sampler moments", a_ok && b_ok,
           fmt("Rayleigh deviation %.3g (< 3 SE = %.3g); high-SNR relative error %.2e (< 1e-3)",
               dev, 3.0 * se, rel));
}

// ---------------------------------------------------------------------------
// criterion 11: CLI reproducibility

std::string cli_path;

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = cli_path + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
    }
    std::sort(rel.begin(), rel.end());
    for (const auto& r : rel) {
        if (!fs::exists(b / r)) {
            why = "missing " + r.string();
            return false;
        }
        if (slurp(a / r) != slurp(b / r)) {
            why = "differs: " + r.string();
            return false;
        }
    }
    return !rel.empty();
}

void criterion_cli_reproducibility() {
    const fs::path dir = fs::temp_directory_path() / "ivim_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const fs::path cfg = dir / "config.json";
    {
        std::ofstream f(cfg);
        f << R"({"seed": 99,
  "train": {"iterations": 300, "batch_size": 32, "checkpoint_interval": 100},
  "abc": {"n_proposals": 20000, "acceptance_quantile": 1e-3},
  "eval": {"n_cases": 8, "grid_resolution": 6, "grid_realizations": 3, "n_subjects": 3},
  "simulate": {"dims": [3, 3, 1]}})";
    }
    const std::string base = "--config " + cfg.string() + " --deterministic ";

    bool all_ok = true;
    std::string detail;
    const auto twice = [&](const std::string& label, const std::string& args_template) {
        for (int round = 1; round <= 2 && all_ok; ++round) {
            std::string args = args_template;
            std::string::size_type pos;
            while ((pos = args.find("{N}")) != std::string::npos) {
                args.replace(pos, 3, std::to_string(round));
            }
            const int rc = run_cli(base + args, dir / (label + "_" + std::to_string(round) + ".log"));
            if (rc != 0) {
                all_ok = false;
                detail = label + " exited " + std::to_string(rc);
                return;
            }
        }
        if (!all_ok) return;
        std::string why;
        if (!dirs_identical(dir / (label + "_1"), dir / (label + "_2"), why)) {
            all_ok = false;
            detail = label + ": " + why;
        }
    };

    twice("sim", "simulate --out " + (dir / "sim_{N}").string());
    if (all_ok) {
        // train writes into out dirs so the two runs' artifacts can be diffed
        twice("train", "train --out-model " + (dir / "train_{N}").string() +
                           "/model.agp --loss-log " + (dir / "train_{N}").string() + "/loss.csv");
    }
    if (all_ok) {
        const std::string vol = (dir / "sim_1" / "signals.ivimvol").string();
        const std::string model = (dir / "train_1" / "model.agp").string();
        twice("fitlsq", "fit --method lsq --volume " + vol + " --out " + (dir / "fitlsq_{N}").string());
        if (all_ok) {
            twice("fitagp", "fit --method agp --model " + model + " --volume " + vol + " --out " +
                                (dir / "fitagp_{N}").string());
        }
        if (all_ok) {
            twice("oracle", "oracle --model " + model + " --n-signals 2 --out " +
                                (dir / "oracle_{N}").string());
        }
        if (all_ok) {
            twice("bench", "bench --model " + model + " --out " + (dir / "bench_{N}").string());
        }
        if (all_ok) {
            twice("repeat", "repeat --model " + model + " --out " + (dir / "repeat_{N}").string());
        }
        if (all_ok) {
            for (int round = 1; round <= 2; ++round) {
                fs::create_directories(dir / ("conv_" + std::to_string(round)));
                const int rc = run_cli("convert " + vol + " " +
                                           (dir / ("conv_" + std::to_string(round)) / "v.csv").string(),
                                       dir / ("conv_" + std::to_string(round) + ".log"));
                if (rc != 0) {
                    all_ok = false;
                    detail = "convert exited " + std::to_string(rc);
                }
            }
            std::string why;
            if (all_ok && !dirs_identical(dir / "conv_1", dir / "conv_2", why)) {
                all_ok = false;
                detail = "convert: " + why;
            }
        }
    }
    report(11, "CLI reproducibility: byte-identical deterministic reruns", all_ok,
           all_ok ? "simulate, train, fit (lsq+agp), oracle, bench, repeat, convert" : detail);
}

// ---------------------------------------------------------------------------
// trained-model module examples (not numbered criteria)

void module_examples(const MlpModel& model) {
    // Noiseless high-SNR signal: posterior mean within +-2 sigma of truth.
    const AcquisitionProtocol proto = default_protocol();
    const IvimParams y(1000, 0.2, 1e-3, 0.02);
    SignalVector x(proto.n_b());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = signal_isotropic(y, proto.b_values[i]);
    const GaussianPosterior p = forward(model, x);
    const auto sd = p.std_dev();
    bool ok = true;
    for (int k = 0; k < 4; ++k) ok = ok && std::abs(p.mean[k] - y[k]) < 2.0 * sd[k];
    info("module example: clean-signal recovery within 2 sigma", ok ? "holds" : "VIOLATED");

    // Zero-noise, zero-dephasing, FA=0 benchmark: both methods' MAE(d) < 2%.
    AcquisitionProtocol clean = proto;
    for (auto& s : clean.noise_sigmas) s = 1e-9;
    for (auto& b : clean.dephase_probs) b = 0.0;
    const LsqConfig lsq;
    const IvimParams truth = IvimParams::unchecked(1000.0, 0.18, 9.4e-4, 5.3e-2);
    DiffusionTensorPair tensors;
    tensors.d_tensor = SymTensor3::isotropic(truth.d);
    tensors.d_star_tensor = SymTensor3::isotropic(truth.d_star);
    tensors.f = truth.f;
    Rng rng(901);
    const SignalVector xs = simulate_signal_anisotropic(tensors, truth.s0, clean, false, rng);
    const IvimParams lsq_est = fit_lsq(xs, clean, lsq).params;
    const IvimParams agp_est = forward(model, xs).mean;
    const double lsq_err = std::abs(lsq_est.d - truth.d) / truth.d;
    const double agp_err = std::abs(agp_est.d - truth.d) / truth.d;
    info("module example: noiseless isotropic MAE(d)",
         fmt("LSQ %.2f%% %s, AGP %.2f%% %s (target < 2%%)", lsq_err * 100,
             lsq_err < 0.02 ? "ok" : "VIOLATED", agp_err * 100,
             agp_err < 0.02 ? "ok" : "VIOLATED"));
}

} // namespace

int main(int argc, char** argv) {
    std::string model_cache;
    for (int i = 1; i + 1 < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--cli") cli_path = argv[i + 1];
        if (a == "--model-cache") model_cache = argv[i + 1];
    }
    if (cli_path.empty()) {
        std::fprintf(stderr, "usage: ivim_acceptance --cli <ivim binary> [--model-cache <file>]\n");
        return 2;
    }

    criterion_gradients();
    criterion_lsq_exactness();
    criterion_var_exact();
    criterion_rician_moments();

    // Desk-scale training feeds criteria 3-8.
    MlpModel model;
    bool have_model = false;
    if (!model_cache.empty() && fs::exists(model_cache)) {
        try {
            model = load_model(model_cache);
            have_model = true;
            info("training", "loaded cached model from " + model_cache);
        } catch (const std::exception& e) {
            info("training", std::string("cache rejected: ") + e.what());
        }
    }
    if (!have_model) {
        TrainConfig tc;
        tc.iterations = 200000;
        tc.batch_size = 512;
        tc.seed = 20240601;
        tc.checkpoint_interval = 10000;
        tc.workers = 0;
        info("training", "desk preset: 2e5 iterations, batch 512");
        double first_loss = 0;
        const TrainResult r = train(ParamPrior::defaults(), default_protocol(), tc,
                                    [&](const TrainLogEntry& e) {
                                        if (first_loss == 0) first_loss = e.mean_loss;
                                        std::printf("  iteration %lld mean loss %.4f\n",
                                                    (long long)e.iteration, e.mean_loss);
                                        std::fflush(stdout);
                                    });
        model = r.model;
        info("training", fmt("final mean loss %.4f (initial %.4f)", r.log.back().mean_loss,
                             first_loss));
        if (!model_cache.empty()) save_model(model_cache, model);
    }

    criteria_benchmark(model);
    criterion_abc_agreement(model);
    criterion_uncertainty_structure(model);
    criterion_calibration(model);
    criterion_repeatability(model);
    module_examples(model);
    criterion_cli_reproducibility();

    std::printf("%d criterion failure(s)\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
