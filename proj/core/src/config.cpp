#include "ivim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ivim/errors.hpp"
#include "ivim/volume.hpp"

namespace ivim {

using nlohmann::json;

namespace {

// Strict object walker: every present key must be consumed, every absence
// falls back to the default already present in the target struct.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    ~Section() = default;

    void finish() const {
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError(path_.empty() ? "unknown key '" + key + "'"
                                                : path_ + "." + key + ": unknown key");
            }
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) { return j_.at(key); }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(join(key) + ": wrong type");
        }
    }

    std::string join(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void parse_pair(const json& j, const std::string& path, double& lo, double& hi) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(path + ": expected [lo, hi]");
    }
    lo = j[0].get<double>();
    hi = j[1].get<double>();
}

void parse_protocol(const json& j, const std::string& path, AcquisitionProtocol& p) {
    Section s(j, path);
    s.get("b_values", p.b_values);
    if (s.has("gradient_dirs")) {
        const json& dirs = s.at("gradient_dirs");
        if (!dirs.is_array()) throw ConfigError(path + ".gradient_dirs: expected an array");
        p.gradient_dirs.clear();
        for (const auto& d : dirs) {
            if (!d.is_array() || d.size() != 3) {
                throw ConfigError(path + ".gradient_dirs: each direction needs 3 components");
            }
            p.gradient_dirs.emplace_back(d[0].get<double>(), d[1].get<double>(),
                                         d[2].get<double>());
        }
    }
    s.get("noise_sigmas", p.noise_sigmas);
    s.get("dephase_probs", p.dephase_probs);
    s.finish();
    // A config that overrides b_values without a dephasing schedule gets the
    // default schedule re-derived per b-value.
    if (p.dephase_probs.size() != p.b_values.size() && !j.contains("dephase_probs")) {
        p.dephase_probs.clear();
        for (double b : p.b_values) p.dephase_probs.push_back(default_dephase_prob(b));
    }
}

void parse_prior(const json& j, const std::string& path, ParamPrior& prior) {
    Section s(j, path);
    if (s.has("s0")) parse_pair(s.at("s0"), path + ".s0", prior.lo.s0, prior.hi.s0);
    if (s.has("f")) parse_pair(s.at("f"), path + ".f", prior.lo.f, prior.hi.f);
    if (s.has("d")) parse_pair(s.at("d"), path + ".d", prior.lo.d, prior.hi.d);
    if (s.has("d_star")) parse_pair(s.at("d_star"), path + ".d_star", prior.lo.d_star, prior.hi.d_star);
    s.finish();
}

} // namespace

RunConfig RunConfig::defaults() {
    RunConfig c;
    c.protocol = default_protocol();
    c.prior = ParamPrior::defaults();
    return c;
}

int RunConfig::effective_workers() const {
    return deterministic ? 1 : workers;
}

RunConfig parse_config_text(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }

    RunConfig c = RunConfig::defaults();
    Section root(j, "");
    root.get("seed", c.seed);
    root.get("output_dir", c.output_dir);
    root.get("workers", c.workers);
    root.get("deterministic", c.deterministic);

    if (root.has("protocol")) parse_protocol(root.at("protocol"), "protocol", c.protocol);
    if (root.has("prior")) parse_prior(root.at("prior"), "prior", c.prior);

    if (root.has("lsq")) {
        Section s(root.at("lsq"), "lsq");
        s.get("segmentation_threshold", c.lsq.segmentation_threshold);
        s.get("max_iterations", c.lsq.max_iterations);
        s.get("convergence_tol", c.lsq.convergence_tol);
        s.get("fix_s0_from_stage1", c.lsq.fix_s0_from_stage1);
        s.finish();
    }
    if (root.has("train")) {
        Section s(root.at("train"), "train");
        s.get("iterations", c.train.iterations);
        s.get("batch_size", c.train.batch_size);
        s.get("learning_rate", c.train.learning_rate);
        s.get("adam_beta1", c.train.adam_beta1);
        s.get("adam_beta2", c.train.adam_beta2);
        s.get("adam_eps", c.train.adam_eps);
        s.get("checkpoint_interval", c.train.checkpoint_interval);
        s.get("tail_average_fraction", c.train.tail_average_fraction);
        s.get("calibration_samples", c.train.calibration_samples);
        s.finish();
    }
    if (root.has("abc")) {
        Section s(root.at("abc"), "abc");
        s.get("n_proposals", c.abc.n_proposals);
        s.get("acceptance_quantile", c.abc.acceptance_quantile);
        s.get("distance", c.abc.distance);
        s.get("with_dephasing", c.abc.with_dephasing);
        s.finish();
    }
    if (root.has("eval")) {
        Section s(root.at("eval"), "eval");
        s.get("n_cases", c.eval.n_cases);
        s.get("grid_resolution", c.eval.grid_resolution);
        s.get("grid_realizations", c.eval.grid_realizations);
        s.get("n_subjects", c.eval.n_subjects);
        s.finish();
    }
    if (root.has("simulate")) {
        Section s(root.at("simulate"), "simulate");
        s.get("dims", c.simulate.dims);
        s.get("with_dephasing", c.simulate.with_dephasing);
        s.finish();
    }
    root.finish();

    // Fail before any computation: validate every referenced section.
    c.protocol.validate();
    c.prior.validate();
    c.lsq.validate(c.protocol);
    c.train.validate();
    c.abc.validate();
    if (c.workers < 0) throw ConfigError("workers: must be >= 0");
    for (int d : c.simulate.dims) {
        if (d < 1) throw ConfigError("simulate.dims: dimensions must be >= 1");
    }
    if (c.eval.n_cases < 1) throw ConfigError("eval.n_cases: must be >= 1");
    if (c.eval.grid_resolution < 2) throw ConfigError("eval.grid_resolution: must be >= 2");
    if (c.eval.grid_realizations < 1) throw ConfigError("eval.grid_realizations: must be >= 1");
    if (c.eval.n_subjects < 2) throw ConfigError("eval.n_subjects: must be >= 2");
    return c;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

void apply_preset(RunConfig& config, const std::string& name) {
    if (name == "smoke") {
        config.train.iterations = 1000;
        config.train.batch_size = 64;
        config.eval.n_cases = 32;
        config.eval.grid_resolution = 16;
        config.eval.grid_realizations = 10;
        config.eval.n_subjects = 3;
        config.abc.n_proposals = 20000;
    } else if (name == "desk") {
        config.train.iterations = 200000;
        config.train.batch_size = 512;
        config.eval.n_cases = 1024;
        config.eval.grid_resolution = 100;
        config.eval.grid_realizations = 1000;
        config.eval.n_subjects = 17;
    } else if (name == "paper") {
        config.train.iterations = 1000000;
        config.train.batch_size = 2000;
        config.eval.n_cases = 1024;
        config.eval.grid_resolution = 1000;
        config.eval.grid_realizations = 1000;
        config.eval.n_subjects = 17;
    } else {
        throw ConfigError("preset: unknown preset '" + name + "' (smoke, desk, paper)");
    }
}

namespace {

json config_to_json_internal(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["workers"] = c.workers;
    j["deterministic"] = c.deterministic;
    json proto;
    proto["b_values"] = c.protocol.b_values;
    json dirs = json::array();
    for (const auto& g : c.protocol.gradient_dirs) dirs.push_back({g.x(), g.y(), g.z()});
    proto["gradient_dirs"] = dirs;
    proto["noise_sigmas"] = c.protocol.noise_sigmas;
    proto["dephase_probs"] = c.protocol.dephase_probs;
    j["protocol"] = proto;
    json prior;
    prior["s0"] = {c.prior.lo.s0, c.prior.hi.s0};
    prior["f"] = {c.prior.lo.f, c.prior.hi.f};
    prior["d"] = {c.prior.lo.d, c.prior.hi.d};
    prior["d_star"] = {c.prior.lo.d_star, c.prior.hi.d_star};
    j["prior"] = prior;
    j["lsq"] = {{"segmentation_threshold", c.lsq.segmentation_threshold},
                {"max_iterations", c.lsq.max_iterations},
                {"convergence_tol", c.lsq.convergence_tol},
                {"fix_s0_from_stage1", c.lsq.fix_s0_from_stage1}};
    j["train"] = {{"iterations", c.train.iterations},
                  {"batch_size", c.train.batch_size},
                  {"learning_rate", c.train.learning_rate},
                  {"adam_beta1", c.train.adam_beta1},
                  {"adam_beta2", c.train.adam_beta2},
                  {"adam_eps", c.train.adam_eps},
                  {"checkpoint_interval", c.train.checkpoint_interval},
                  {"tail_average_fraction", c.train.tail_average_fraction},
                  {"calibration_samples", c.train.calibration_samples}};
    j["abc"] = {{"n_proposals", c.abc.n_proposals},
                {"acceptance_quantile", c.abc.acceptance_quantile},
                {"distance", c.abc.distance},
                {"with_dephasing", c.abc.with_dephasing}};
    j["eval"] = {{"n_cases", c.eval.n_cases},
                 {"grid_resolution", c.eval.grid_resolution},
                 {"grid_realizations", c.eval.grid_realizations},
                 {"n_subjects", c.eval.n_subjects}};
    j["simulate"] = {{"dims", c.simulate.dims}, {"with_dephasing", c.simulate.with_dephasing}};
    return j;
}

} // namespace

std::string config_to_json_text(const RunConfig& config) {
    return config_to_json_internal(config).dump(2);
}

std::string config_fingerprint(const RunConfig& config) {
    const std::string canonical = config_to_json_text(config);
    const std::uint32_t a = crc32(canonical.data(), canonical.size());
    const std::uint32_t b = crc32(canonical.data(), canonical.size(), a ^ 0x9e3779b9u);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%08x%08x", a, b);
    return buf;
}

} // namespace ivim
