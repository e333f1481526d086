#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ivim/mlp.hpp"
#include "ivim/model.hpp"
#include "ivim/protocol.hpp"

namespace ivim {

struct TrainConfig {
    std::int64_t iterations = 200000; // desk preset
    int batch_size = 512;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    std::int64_t checkpoint_interval = 1000;
    int workers = 0;

    /// When nonempty, a resumable checkpoint (model + optimizer state +
    /// iteration counter) is written here every checkpoint_interval steps.
    std::string checkpoint_path;

    /// Fraction of the run (from the end) over which weights are averaged;
    /// the averaged iterate is returned as the trained model. Constant-rate
    /// Adam never settles, and the averaged tail removes that jitter from
    /// the predicted standard deviations. 0 disables.
    double tail_average_fraction = 0.2;

    /// Fresh draws used to refit the four log-std output biases to the
    /// averaged weights (closed-form NLL step). The averaged means have
    /// smaller residuals than the iterates the log-std heads were trained
    /// against, so without this the returned stds run wide. 0 disables.
    std::int64_t calibration_samples = 20000;

    void validate() const;
};

struct TrainLogEntry {
    std::int64_t iteration = 0;
    double mean_loss = 0.0; // running mean since the previous entry
};

struct TrainResult {
    MlpModel model;
    std::vector<TrainLogEntry> log;
};

/// Adam over fresh simulator batches. Batch sample k of iteration t draws
/// from Rng(seed, t*batch_size + k), so the run is reproducible for a fixed
/// worker count and identical under any scheduling for workers fixed.
/// Throws NumericalError (with iteration and batch seed) if the loss goes
/// non-finite.
TrainResult train(const ParamPrior& prior, const AcquisitionProtocol& protocol,
                  const TrainConfig& config,
                  const std::function<void(const TrainLogEntry&)>& on_checkpoint = {});

/// Continue a checkpointed run up to config.iterations. Bit-identical to the
/// uninterrupted run with the same config and worker count.
TrainResult resume_training(const std::filesystem::path& checkpoint,
                            const ParamPrior& prior, const AcquisitionProtocol& protocol,
                            const TrainConfig& config,
                            const std::function<void(const TrainLogEntry&)>& on_checkpoint = {});

void write_loss_log(const std::filesystem::path& path, const std::vector<TrainLogEntry>& log);

} // namespace ivim
