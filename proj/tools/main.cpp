// ivim: simulate, fit and benchmark bi-exponential diffusion-perfusion
// parameter estimation. Subcommands drive the core library; all randomness
// derives from (config, seed), so fixed seeds reproduce outputs byte for
// byte in deterministic mode.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ivim/abc.hpp"
#include "ivim/config.hpp"
#include "ivim/errors.hpp"
#include "ivim/eval.hpp"
#include "ivim/lsq.hpp"
#include "ivim/mlp.hpp"
#include "ivim/model.hpp"
#include "ivim/parallel.hpp"
#include "ivim/simulate.hpp"
#include "ivim/train.hpp"
#include "ivim/volume.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    bool deterministic = false;
    std::string preset;
};

ivim::RunConfig load_config(const GlobalOpts& g) {
    ivim::RunConfig c =
        g.config_path.empty() ? ivim::RunConfig::defaults() : ivim::parse_config_file(g.config_path);
    if (!g.preset.empty()) ivim::apply_preset(c, g.preset);
    if (g.seed) c.seed = *g.seed;
    if (g.workers) c.workers = *g.workers;
    if (g.deterministic) c.deterministic = true;
    return c;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void stamp(ivim::Volume& v, const ivim::RunConfig& c) {
    v.meta.emplace_back("seed", std::to_string(c.seed));
    v.meta.emplace_back("fingerprint", ivim::config_fingerprint(c));
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw ivim::DataError("cannot open " + path.string() + " for writing");
    f << text;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const ivim::RunConfig& c, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const int nx = c.simulate.dims[0], ny = c.simulate.dims[1], nz = c.simulate.dims[2];
    const int nb = static_cast<int>(c.protocol.n_b());

    ivim::Volume signals = ivim::Volume::make(nx, ny, nz, nb, "signal");
    ivim::Volume truth = ivim::Volume::make(nx, ny, nz, 4, "params");
    signals.b_values = c.protocol.b_values;
    for (double b : c.protocol.b_values) {
        signals.channel_names.push_back("b" + std::to_string(int(b)));
    }
    signals.units = "a.u.";
    truth.channel_names = {"s0", "f", "d", "d_star"};
    truth.units = "s0: a.u.; f: fraction; d, d_star: mm^2/s";
    stamp(signals, c);
    stamp(truth, c);

    const std::int64_t n_vox = static_cast<std::int64_t>(signals.voxels());
    ivim::parallel_for(n_vox, c.effective_workers(), [&](std::int64_t v) {
        ivim::Rng rng(c.seed, static_cast<std::uint64_t>(v));
        const ivim::IvimParams y = ivim::sample_prior(c.prior, rng);
        const ivim::SignalVector x =
            ivim::simulate_signal(y, c.protocol, c.simulate.with_dephasing, rng);
        for (int ch = 0; ch < nb; ++ch) signals.data[v * nb + ch] = static_cast<float>(x[ch]);
        for (int p = 0; p < 4; ++p) truth.data[v * 4 + p] = static_cast<float>(y[p]);
    });

    ivim::write_volume(fs::path(out_dir) / "signals.ivimvol", signals);
    ivim::write_volume(fs::path(out_dir) / "truth.ivimvol", truth);

    json manifest;
    manifest["seed"] = c.seed;
    manifest["fingerprint"] = ivim::config_fingerprint(c);
    manifest["dims"] = {nx, ny, nz};
    manifest["n_b"] = nb;
    manifest["with_dephasing"] = c.simulate.with_dephasing;
    manifest["files"] = {"signals.ivimvol", "truth.ivimvol"};
    write_text(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << out_dir << "/signals.ivimvol (" << n_vox << " voxels, " << nb
              << " channels)\n";
    return ivim::kExitOk;
}

// ------------------------------------------------------------------- train

int cmd_train(const ivim::RunConfig& c, const std::string& out_model,
              const std::string& loss_log, const std::string& resume_from) {
    for (const std::string& p : {out_model, loss_log}) {
        if (!p.empty() && fs::path(p).has_parent_path()) {
            fs::create_directories(fs::path(p).parent_path());
        }
    }
    ivim::TrainConfig tc = c.train;
    tc.seed = c.seed;
    tc.workers = c.effective_workers();
    if (tc.checkpoint_path.empty()) tc.checkpoint_path = out_model + ".ckpt";

    const auto progress = [&](const ivim::TrainLogEntry& e) {
        std::cout << "iteration " << e.iteration << "/" << tc.iterations << " mean loss "
                  << e.mean_loss << "\n";
    };
    const ivim::TrainResult r =
        resume_from.empty()
            ? ivim::train(c.prior, c.protocol, tc, progress)
            : ivim::resume_training(resume_from, c.prior, c.protocol, tc, progress);
    ivim::save_model(out_model, r.model);
    if (!loss_log.empty()) ivim::write_loss_log(loss_log, r.log);
    std::cout << "wrote " << out_model << "\n";
    return ivim::kExitOk;
}

// --------------------------------------------------------------------- fit

int cmd_fit(const ivim::RunConfig& c, const std::string& method, const std::string& volume_path,
            const std::string& model_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const ivim::Volume signals = ivim::read_volume(volume_path);
    if (signals.nc != static_cast<int>(c.protocol.n_b())) {
        throw ivim::DataError("fit: volume has " + std::to_string(signals.nc) +
                              " channels but the protocol has " +
                              std::to_string(c.protocol.n_b()) + " b-values");
    }
    if (method == "lsq") {
        ivim::LsqVolumeResult r =
            ivim::fit_volume_lsq(signals, c.protocol, c.lsq, c.effective_workers());
        stamp(r.params, c);
        stamp(r.quality, c);
        ivim::write_volume(fs::path(out_dir) / "params_lsq.ivimvol", r.params);
        ivim::write_volume(fs::path(out_dir) / "quality_lsq.ivimvol", r.quality);
        std::cout << "wrote " << out_dir << "/params_lsq.ivimvol\n";
    } else {
        const ivim::MlpModel model = ivim::load_model(model_path);
        if (model.input_width() != static_cast<int>(c.protocol.n_b())) {
            throw ivim::DataError("fit: model expects " + std::to_string(model.input_width()) +
                                  " channels but the protocol has " +
                                  std::to_string(c.protocol.n_b()) + " b-values");
        }
        ivim::AgpVolumeResult r =
            ivim::fit_volume_agp(model, signals, c.protocol, c.effective_workers());
        stamp(r.mean_maps, c);
        stamp(r.std_maps, c);
        ivim::write_volume(fs::path(out_dir) / "params_agp.ivimvol", r.mean_maps);
        ivim::write_volume(fs::path(out_dir) / "uncertainty_agp.ivimvol", r.std_maps);
        std::cout << "wrote " << out_dir << "/params_agp.ivimvol\n";
    }
    return ivim::kExitOk;
}

// ------------------------------------------------------------------ oracle

int cmd_oracle(const ivim::RunConfig& c, const std::string& model_path,
               const std::string& signals_csv, int n_signals, double f_lo, double f_hi,
               const std::string& out_dir) {
    fs::create_directories(out_dir);
    const ivim::MlpModel model = ivim::load_model(model_path);

    std::vector<ivim::SignalVector> test_signals;
    if (!signals_csv.empty()) {
        std::ifstream f(signals_csv);
        if (!f) throw ivim::DataError("oracle: cannot open " + signals_csv);
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty() || line[0] == '#') continue;
            ivim::SignalVector s;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) s.push_back(std::stod(cell));
            if (s.size() != c.protocol.n_b()) {
                throw ivim::DataError("oracle: signal row has " + std::to_string(s.size()) +
                                      " values, protocol expects " +
                                      std::to_string(c.protocol.n_b()));
            }
            test_signals.push_back(std::move(s));
        }
    } else {
        for (int i = 0; i < n_signals; ++i) {
            ivim::Rng rng(c.seed ^ 0x5151515151515151ULL, static_cast<std::uint64_t>(i));
            ivim::IvimParams y = ivim::sample_prior(c.prior, rng);
            while (y.f < f_lo || y.f > f_hi) y = ivim::sample_prior(c.prior, rng);
            test_signals.push_back(ivim::simulate_signal(y, c.protocol, true, rng));
        }
    }
    if (test_signals.empty()) throw ivim::DataError("oracle: no test signals");

    ivim::AbcConfig ac = c.abc;
    ac.seed = c.seed;
    ac.workers = c.effective_workers();

    std::ostringstream report;
    report << "signal,param,mean_abc,std_abc,mean_agp,std_agp,mean_shift,std_ratio,overlap\n";
    json summary;
    summary["seed"] = c.seed;
    summary["fingerprint"] = ivim::config_fingerprint(c);
    summary["n_signals"] = test_signals.size();
    json per_signal = json::array();

    for (std::size_t i = 0; i < test_signals.size(); ++i) {
        const ivim::PosteriorSampleSet set =
            ivim::abc_posterior(test_signals[i], c.prior, c.protocol, ac);
        const ivim::GaussianPosterior agp = ivim::forward(model, test_signals[i]);
        const ivim::PosteriorComparison cmp = ivim::compare_posteriors(set, agp);

        char name[32];
        std::snprintf(name, sizeof(name), "samples_%03zu.csv", i);
        std::ostringstream samples;
        samples << "s0,f,d,d_star,distance\n";
        for (std::size_t k = 0; k < set.samples.size(); ++k) {
            const auto& s = set.samples[k];
            samples << fmt(s.s0) << ',' << fmt(s.f) << ',' << fmt(s.d) << ',' << fmt(s.d_star)
                    << ',' << fmt(set.distances[k]) << '\n';
        }
        write_text(fs::path(out_dir) / name, samples.str());

        json entry;
        entry["samples_file"] = name;
        for (int p = 0; p < 4; ++p) {
            report << i << ',' << ivim::IvimParams::names[p] << ',' << fmt(set.mean[p]) << ','
                   << fmt(set.std_dev[p]) << ',' << fmt(agp.mean[p]) << ','
                   << fmt(agp.std_dev()[p]) << ',' << fmt(cmp.mean_shift[p]) << ','
                   << fmt(cmp.std_ratio[p]) << ',' << fmt(cmp.overlap[p]) << '\n';
            entry[ivim::IvimParams::names[p]] = {{"mean_shift", cmp.mean_shift[p]},
                                                 {"std_ratio", cmp.std_ratio[p]},
                                                 {"overlap", cmp.overlap[p]}};
        }
        per_signal.push_back(entry);
    }
    summary["signals"] = per_signal;
    write_text(fs::path(out_dir) / "comparison.csv", report.str());
    write_text(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
    std::cout << "wrote " << out_dir << "/comparison.csv (" << test_signals.size()
              << " signals)\n";
    return ivim::kExitOk;
}

// ------------------------------------------------------------------- bench

void append_benchmark_rows(std::ostringstream& out, const ivim::BenchmarkReport& r) {
    // Units follow the usual reporting convention: f in percentage points,
    // d in 1e-4 mm^2/s, d_star in 1e-3 mm^2/s.
    const char* cond = r.with_dephasing ? "w_dp" : "wo_dp";
    out << "f," << cond << ',' << fmt(r.mae_lsq[1] * 100) << ',' << fmt(r.mae_agp[1] * 100)
        << '\n';
    out << "d," << cond << ',' << fmt(r.mae_lsq[2] * 1e4) << ',' << fmt(r.mae_agp[2] * 1e4)
        << '\n';
    out << "d_star," << cond << ',' << fmt(r.mae_lsq[3] * 1e3) << ',' << fmt(r.mae_agp[3] * 1e3)
        << '\n';
}

int cmd_bench(const ivim::RunConfig& c, const std::string& model_path,
              const std::string& out_dir) {
    fs::create_directories(out_dir);
    const ivim::MlpModel model = ivim::load_model(model_path);
    const std::string fingerprint = ivim::config_fingerprint(c);

    std::ostringstream table;
    table << "param,condition,mae_lsq,mae_agp\n";
    std::ostringstream cases;
    cases << "condition,case,method,s0,f,d,d_star\n";
    std::ostringstream human;
    human << "Anisotropic benchmark, " << c.eval.n_cases << " randomly rotated tensor cases\n"
          << "MAE per parameter (f in percentage points, d in 1e-4 mm^2/s, d* in 1e-3 mm^2/s)\n\n"
          << "                     LSQ        AGP\n";
    for (const bool with_dp : {false, true}) {
        const ivim::BenchmarkReport r = ivim::anisotropic_benchmark(
            model, c.lsq, c.protocol, c.eval.n_cases, with_dp, c.seed, c.effective_workers());
        append_benchmark_rows(table, r);
        const char* tag = with_dp ? "w/ dephasing " : "w/o dephasing";
        char line[256];
        std::snprintf(line, sizeof(line), "f  [%%]  %s %8.2f %10.2f\n", tag,
                      r.mae_lsq[1] * 100, r.mae_agp[1] * 100);
        human << line;
        std::snprintf(line, sizeof(line), "d  [e-4] %s %8.2f %10.2f\n", tag, r.mae_lsq[2] * 1e4,
                      r.mae_agp[2] * 1e4);
        human << line;
        std::snprintf(line, sizeof(line), "d* [e-3] %s %8.2f %10.2f\n", tag, r.mae_lsq[3] * 1e3,
                      r.mae_agp[3] * 1e3);
        human << line;
        const char* cond = with_dp ? "w_dp" : "wo_dp";
        for (std::size_t i = 0; i < r.cases.size(); ++i) {
            const auto& bc = r.cases[i];
            cases << cond << ',' << i << ",lsq," << fmt(bc.lsq_estimate.s0) << ','
                  << fmt(bc.lsq_estimate.f) << ',' << fmt(bc.lsq_estimate.d) << ','
                  << fmt(bc.lsq_estimate.d_star) << '\n';
            cases << cond << ',' << i << ",agp," << fmt(bc.agp_estimate.s0) << ','
                  << fmt(bc.agp_estimate.f) << ',' << fmt(bc.agp_estimate.d) << ','
                  << fmt(bc.agp_estimate.d_star) << '\n';
        }
    }
    table << "# seed " << c.seed << "\n";
    table << "# fingerprint " << fingerprint << "\n";
    human << "\nseed " << c.seed << ", fingerprint " << fingerprint << "\n";
    write_text(fs::path(out_dir) / "benchmark_mae.csv", table.str());
    write_text(fs::path(out_dir) / "benchmark_cases.csv", cases.str());
    write_text(fs::path(out_dir) / "summary.txt", human.str());

    // One uncertainty grid per fixed parameter.
    const struct {
        ivim::ParamId id;
        double value;
        const char* name;
    } grids[] = {
        {ivim::ParamId::d_star, 0.02, "grid_fixed_d_star"},
        {ivim::ParamId::d, 0.001, "grid_fixed_d"},
        {ivim::ParamId::f, 0.2, "grid_fixed_f"},
    };
    for (const auto& g : grids) {
        ivim::UncertaintyGridSpec spec;
        spec.fixed_param = g.id;
        spec.fixed_value = g.value;
        spec.resolution = c.eval.grid_resolution;
        spec.realizations = c.eval.grid_realizations;
        const ivim::UncertaintyGrid grid = ivim::uncertainty_grid(
            model, spec, c.protocol, c.prior, c.seed, c.effective_workers());
        ivim::Volume vol = ivim::Volume::make(spec.resolution, spec.resolution, 1, 4, "grid");
        vol.channel_names = {"sigma_s0", "sigma_f", "sigma_d", "sigma_d_star"};
        vol.meta.emplace_back("fixed_param", ivim::IvimParams::names[int(g.id)]);
        vol.meta.emplace_back("fixed_value", fmt(g.value));
        vol.meta.emplace_back("axis_x", ivim::IvimParams::names[int(grid.axis_x)]);
        vol.meta.emplace_back("axis_y", ivim::IvimParams::names[int(grid.axis_y)]);
        vol.meta.emplace_back("x_min", fmt(grid.x_values.front()));
        vol.meta.emplace_back("x_max", fmt(grid.x_values.back()));
        vol.meta.emplace_back("y_min", fmt(grid.y_values.front()));
        vol.meta.emplace_back("y_max", fmt(grid.y_values.back()));
        stamp(vol, c);
        for (int iy = 0; iy < spec.resolution; ++iy) {
            for (int ix = 0; ix < spec.resolution; ++ix) {
                for (int p = 0; p < 4; ++p) {
                    vol.at(ix, iy, 0, p) = static_cast<float>(grid.at(p, ix, iy));
                }
            }
        }
        ivim::write_volume(fs::path(out_dir) / (std::string(g.name) + ".ivimvol"), vol);
    }
    std::cout << "wrote " << out_dir << "/benchmark_mae.csv and 3 uncertainty grids\n";
    return ivim::kExitOk;
}

// ------------------------------------------------------------------ repeat

int cmd_repeat(const ivim::RunConfig& c, const std::string& model_path,
               const std::string& out_dir) {
    fs::create_directories(out_dir);
    const ivim::MlpModel model = ivim::load_model(model_path);
    const ivim::RepeatabilityReport r = ivim::synthetic_repeatability_study(
        model, c.lsq, c.protocol, c.eval.n_subjects, c.seed, c.effective_workers());

    std::ostringstream out;
    out << "method,var_f,var_d,var_d_star,mean_f,mean_d,mean_d_star\n";
    const auto row = [&](const char* name, const ivim::RepeatabilityRow& rr) {
        out << name;
        for (double v : rr.var_percent) out << ',' << fmt(v);
        for (double m : rr.mean) out << ',' << fmt(m);
        out << '\n';
    };
    row("lsq", r.lsq);
    row("agp", r.agp);
    out << "# seed " << c.seed << "\n";
    out << "# fingerprint " << ivim::config_fingerprint(c) << "\n";
    write_text(fs::path(out_dir) / "repeatability.csv", out.str());

    std::ostringstream human;
    human << "Synthetic test-retest repeatability, " << r.n_subjects << " subjects\n\n"
          << "         VAR% f   VAR% d  VAR% d*    mean f    mean d   mean d*\n";
    const auto hrow = [&](const char* name, const ivim::RepeatabilityRow& rr) {
        char line[256];
        std::snprintf(line, sizeof(line), "%-6s %8.2f %8.2f %8.2f %9.3f %9.5f %9.5f\n", name,
                      rr.var_percent[0], rr.var_percent[1], rr.var_percent[2], rr.mean[0],
                      rr.mean[1], rr.mean[2]);
        human << line;
    };
    hrow("lsq", r.lsq);
    hrow("agp", r.agp);
    human << "\nseed " << c.seed << ", fingerprint " << ivim::config_fingerprint(c) << "\n";
    write_text(fs::path(out_dir) / "summary.txt", human.str());
    std::cout << "wrote " << out_dir << "/repeatability.csv (" << r.n_subjects << " subjects)\n";
    return ivim::kExitOk;
}

// ----------------------------------------------------------------- convert

int cmd_convert(const std::string& input, const std::string& output, const std::string& kind) {
    if (fs::path(output).extension() == ".csv") {
        ivim::volume_to_csv(ivim::read_volume(input), output);
    } else {
        ivim::write_volume(output, ivim::csv_to_volume(input, kind));
    }
    std::cout << "wrote " << output << "\n";
    return ivim::kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bi-exponential diffusion-perfusion estimation: simulator, segmented "
                 "least-squares and amortized-posterior fitting, evaluation harness"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags are accepted after the subcommand too

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON run configuration");
    std::uint64_t seed_opt = 0;
    auto* seed_flag = app.add_option("--seed", seed_opt, "Override the config seed");
    int workers_opt = 0;
    auto* workers_flag = app.add_option("--workers", workers_opt, "Worker threads (0 = hardware)");
    app.add_flag("--deterministic", g.deterministic,
                 "Single-worker mode for byte-identical reruns");
    app.add_option("--preset", g.preset, "Scale preset: smoke, desk or paper")
        ->check(CLI::IsMember({"smoke", "desk", "paper"}));

    auto* sim = app.add_subcommand("simulate", "Simulate a signal volume from prior draws");
    std::string sim_out = "sim_out";
    sim->add_option("--out", sim_out, "Output directory");
    std::vector<int> sim_dims;
    auto* sim_dims_opt = sim->add_option("--dims", sim_dims, "Volume dims X Y Z")->expected(3);

    auto* tr = app.add_subcommand("train", "Train the posterior network on-the-fly");
    std::string train_out = "model.agp";
    std::string train_log;
    std::string train_resume;
    tr->add_option("--out-model", train_out, "Model file to write");
    tr->add_option("--loss-log", train_log, "CSV loss curve");
    tr->add_option("--resume", train_resume, "Resume from a checkpoint file");

    auto* fit = app.add_subcommand("fit", "Fit a signal volume (lsq or agp)");
    std::string fit_method, fit_volume, fit_model, fit_out = "fit_out";
    fit->add_option("--method", fit_method, "lsq or agp")
        ->required()
        ->check(CLI::IsMember({"lsq", "agp"}));
    fit->add_option("--volume", fit_volume, "Input signal volume")->required();
    fit->add_option("--model", fit_model, "Model file (agp only)");
    fit->add_option("--out", fit_out, "Output directory");

    auto* orc = app.add_subcommand("oracle", "Rejection-sampled posteriors vs the network");
    std::string orc_model, orc_csv, orc_out = "oracle_out";
    int orc_n = 20;
    std::vector<double> orc_f_range{0.1, 0.4};
    orc->add_option("--model", orc_model, "Model file")->required();
    orc->add_option("--signals-csv", orc_csv, "CSV of test signals (one row per signal)");
    orc->add_option("--n-signals", orc_n, "Generated test signal count");
    orc->add_option("--f-range", orc_f_range, "Generated signals: f range lo hi")->expected(2);
    orc->add_option("--out", orc_out, "Output directory");

    auto* bench = app.add_subcommand("bench", "Anisotropic MAE benchmark and uncertainty grids");
    std::string bench_model, bench_out = "bench_out";
    bench->add_option("--model", bench_model, "Model file")->required();
    bench->add_option("--out", bench_out, "Output directory");

    auto* rep = app.add_subcommand("repeat", "Synthetic test-retest repeatability study");
    std::string rep_model, rep_out = "repeat_out";
    rep->add_option("--model", rep_model, "Model file")->required();
    rep->add_option("--out", rep_out, "Output directory");

    auto* conv = app.add_subcommand("convert", "Convert volumes to/from CSV");
    std::string conv_in, conv_out, conv_kind = "params";
    conv->add_option("input", conv_in, "Input file (.ivimvol or .csv)")->required();
    conv->add_option("output", conv_out, "Output file (.csv or .ivimvol)")->required();
    conv->add_option("--kind", conv_kind, "Volume kind for csv -> volume");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ivim::kExitConfig;
    }

    try {
        if (seed_flag->count() > 0) g.seed = seed_opt;
        if (workers_flag->count() > 0) g.workers = workers_opt;
        ivim::RunConfig config = load_config(g);

        if (sim->parsed()) {
            if (sim_dims_opt->count() > 0) {
                config.simulate.dims = {sim_dims[0], sim_dims[1], sim_dims[2]};
            }
            return cmd_simulate(config, sim_out);
        }
        if (tr->parsed()) return cmd_train(config, train_out, train_log, train_resume);
        if (fit->parsed()) {
            if (fit_method == "agp" && fit_model.empty()) {
                std::cerr << "error: fit --method agp requires --model\n";
                return ivim::kExitConfig;
            }
            return cmd_fit(config, fit_method, fit_volume, fit_model, fit_out);
        }
        if (orc->parsed()) {
            return cmd_oracle(config, orc_model, orc_csv, orc_n, orc_f_range[0], orc_f_range[1],
                              orc_out);
        }
        if (bench->parsed()) return cmd_bench(config, bench_model, bench_out);
        if (rep->parsed()) return cmd_repeat(config, rep_model, rep_out);
        if (conv->parsed()) return cmd_convert(conv_in, conv_out, conv_kind);
        std::cerr << "error: no subcommand\n";
        return ivim::kExitConfig;
    } catch (const ivim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ivim::kExitConfig;
    } catch (const ivim::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return ivim::kExitNumerical;
    } catch (const ivim::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return ivim::kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ivim::kExitData;
    }
}
