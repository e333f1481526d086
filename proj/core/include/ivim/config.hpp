#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "ivim/abc.hpp"
#include "ivim/lsq.hpp"
#include "ivim/model.hpp"
#include "ivim/protocol.hpp"
#include "ivim/train.hpp"

namespace ivim {

struct EvalConfig {
    int n_cases = 1024;        // anisotropic benchmark cases
    int grid_resolution = 100; // uncertainty grid cells per axis
    int grid_realizations = 1000;
    int n_subjects = 17;       // repeatability surrogate
};

struct SimulateConfig {
    std::array<int, 3> dims = {8, 8, 1};
    bool with_dephasing = true;
};

/// Whole-run configuration, parsed from a strict JSON file: unknown keys are
/// rejected with the offending key path, and every section validates against
/// its module's invariants before any computation starts.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    int workers = 0;          // 0 = hardware concurrency
    bool deterministic = false;

    AcquisitionProtocol protocol;
    ParamPrior prior;
    LsqConfig lsq;
    TrainConfig train;
    AbcConfig abc;
    EvalConfig eval;
    SimulateConfig simulate;

    static RunConfig defaults();

    /// Effective worker count (1 when deterministic).
    int effective_workers() const;
};

RunConfig parse_config_file(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& json_text);

/// Training/eval scale presets: smoke (1e3 x 64), desk (2e5 x 512),
/// paper (1e6 x 2000, grid 1000). Throws ConfigError on unknown names.
void apply_preset(RunConfig& config, const std::string& name);

/// Canonical serialization (sorted keys); basis of the fingerprint.
std::string config_to_json_text(const RunConfig& config);

/// Hex digest of (canonical config, seed); embedded in report artifacts.
std::string config_fingerprint(const RunConfig& config);

} // namespace ivim
