#include "ivim/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "ivim/errors.hpp"
#include "ivim/parallel.hpp"
#include "ivim/simulate.hpp"
#include "ivim/volume.hpp"

namespace ivim {

namespace {

constexpr char kCkptMagic[8] = {'I', 'V', 'I', 'M', 'C', 'K', 'P', '\0'};
constexpr std::uint32_t kCkptVersion = 1;

// Weight-init stream id, outside the per-sample stream range.
constexpr std::uint64_t kWeightInitStream = ~std::uint64_t{0};
// Calibration draws live far above any (iteration, sample) stream.
constexpr std::uint64_t kCalibrationStreamBase = std::uint64_t{1} << 62;

struct AdamState {
    MlpGradients m, v;
    std::int64_t t = 0;

    static AdamState zeros_like(const MlpModel& model) {
        return AdamState{MlpGradients::zeros_like(model), MlpGradients::zeros_like(model), 0};
    }
};

// Running mean of the weight trajectory over the averaging tail.
struct TailAverage {
    MlpGradients sum; // reused as weight accumulators
    std::int64_t count = 0;

    static TailAverage zeros_like(const MlpModel& model) {
        return TailAverage{MlpGradients::zeros_like(model), 0};
    }

    void accumulate(const MlpModel& model) {
        ++count;
        const double w = 1.0 / double(count);
        for (std::size_t l = 0; l < sum.weights.size(); ++l) {
            sum.weights[l] += w * (model.weights[l] - sum.weights[l]);
            sum.biases[l] += w * (model.biases[l] - sum.biases[l]);
        }
    }

    MlpModel apply(MlpModel model) const {
        if (count == 0) return model;
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            model.weights[l] = sum.weights[l];
            model.biases[l] = sum.biases[l];
        }
        return model;
    }
};

void adam_update(Eigen::Ref<Eigen::MatrixXd> w, Eigen::Ref<Eigen::MatrixXd> m,
                 Eigen::Ref<Eigen::MatrixXd> v, const Eigen::MatrixXd& g,
                 const TrainConfig& cfg, double bias1, double bias2) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = (cfg.adam_beta2 * v.array() + (1.0 - cfg.adam_beta2) * g.array().square()).matrix();
    w.array() -= cfg.learning_rate * (m.array() / bias1) /
                 ((v.array() / bias2).sqrt() + cfg.adam_eps);
}

void write_checkpoint(const std::filesystem::path& path, const MlpModel& model,
                      const AdamState& adam, const TailAverage& avg, std::int64_t iteration) {
    std::vector<char> out;
    auto raw = [&out](const void* p, std::size_t n) {
        const char* c = static_cast<const char*>(p);
        out.insert(out.end(), c, c + n);
    };
    raw(kCkptMagic, sizeof(kCkptMagic));
    raw(&kCkptVersion, 4);
    raw(&iteration, 8);
    raw(&adam.t, 8);
    const std::vector<char> model_bytes = serialize_model(model);
    const std::uint64_t model_len = model_bytes.size();
    raw(&model_len, 8);
    raw(model_bytes.data(), model_bytes.size());
    auto dump = [&raw](const MlpGradients& g) {
        for (std::size_t l = 0; l < g.weights.size(); ++l) {
            raw(g.weights[l].data(), sizeof(double) * g.weights[l].size());
            raw(g.biases[l].data(), sizeof(double) * g.biases[l].size());
        }
    };
    dump(adam.m);
    dump(adam.v);
    raw(&avg.count, 8);
    dump(avg.sum);
    const std::uint32_t checksum = crc32(out.data(), out.size());
    raw(&checksum, 4);

    // Write-then-rename so an interrupted run never leaves a torn checkpoint.
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("checkpoint: cannot open " + tmp.string());
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw DataError("checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct Checkpoint {
    MlpModel model;
    AdamState adam;
    TailAverage avg;
    std::int64_t iteration = 0;
};

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("checkpoint: cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kCkptMagic) + 4 + 4 ||
        std::memcmp(bytes.data(), kCkptMagic, sizeof(kCkptMagic)) != 0) {
        throw DataError("checkpoint: bad magic in " + path.string());
    }
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    if (crc32(bytes.data(), bytes.size() - 4) != stored) {
        throw DataError("checkpoint: checksum mismatch in " + path.string());
    }
    std::size_t pos = sizeof(kCkptMagic);
    auto read = [&](void* p, std::size_t n) {
        if (pos + n > bytes.size() - 4) throw DataError("checkpoint: truncated file");
        std::memcpy(p, bytes.data() + pos, n);
        pos += n;
    };
    std::uint32_t version;
    read(&version, 4);
    if (version != kCkptVersion) throw DataError("checkpoint: unsupported version");
    Checkpoint ck;
    read(&ck.iteration, 8);
    read(&ck.adam.t, 8);
    std::uint64_t model_len;
    read(&model_len, 8);
    std::vector<char> model_bytes(model_len);
    read(model_bytes.data(), model_len);
    ck.model = deserialize_model(model_bytes);
    ck.adam.m = MlpGradients::zeros_like(ck.model);
    ck.adam.v = MlpGradients::zeros_like(ck.model);
    auto slurp = [&](MlpGradients& g) {
        for (std::size_t l = 0; l < g.weights.size(); ++l) {
            read(g.weights[l].data(), sizeof(double) * g.weights[l].size());
            read(g.biases[l].data(), sizeof(double) * g.biases[l].size());
        }
    };
    slurp(ck.adam.m);
    slurp(ck.adam.v);
    ck.avg = TailAverage::zeros_like(ck.model);
    read(&ck.avg.count, 8);
    slurp(ck.avg.sum);
    return ck;
}

TrainResult train_loop(const ParamPrior& prior, const AcquisitionProtocol& protocol,
                       const TrainConfig& config,
                       const std::function<void(const TrainLogEntry&)>& on_checkpoint,
                       MlpModel model, AdamState adam, TailAverage avg,
                       std::int64_t start_iteration) {
    config.validate();
    prior.validate();
    protocol.validate();

    const int n_b = static_cast<int>(protocol.n_b());
    const int batch = config.batch_size;
    const int workers = resolve_workers(config.workers);

    TrainResult result;
    Eigen::MatrixXd signals(n_b, batch);
    Eigen::MatrixXd targets(4, batch);

    // Per-worker contiguous column blocks; gradients reduced in block order
    // so a fixed worker count reproduces bit-identical runs.
    const int blocks = std::min(workers, batch);
    std::vector<LossAndGradients> partial(blocks);

    double loss_acc = 0.0;
    std::int64_t loss_count = 0;

    const std::int64_t tail_start =
        config.tail_average_fraction > 0.0
            ? config.iterations -
                  std::int64_t(config.tail_average_fraction * double(config.iterations))
            : config.iterations + 1;

    for (std::int64_t iter = start_iteration + 1; iter <= config.iterations; ++iter) {
        parallel_for(batch, workers, [&](std::int64_t k) {
            // One independent stream per (iteration, sample).
            Rng rng(config.seed, static_cast<std::uint64_t>(iter - 1) * batch + k);
            const auto [y, x] = sample_training_pair(prior, protocol, rng);
            for (int c = 0; c < n_b; ++c) signals(c, k) = x[c];
            for (int p = 0; p < 4; ++p) targets(p, k) = y[p];
        });

        double loss;
        if (blocks == 1) {
            partial[0] = backward(model, signals, targets);
            loss = partial[0].loss;
        } else {
            parallel_for(blocks, blocks, [&](std::int64_t w) {
                const int lo = static_cast<int>(batch * w / blocks);
                const int hi = static_cast<int>(batch * (w + 1) / blocks);
                partial[w] = backward(model, signals.middleCols(lo, hi - lo),
                                      targets.middleCols(lo, hi - lo));
            });
            loss = 0.0;
            for (int w = 0; w < blocks; ++w) {
                const int lo = static_cast<int>(batch * w / blocks);
                const int hi = static_cast<int>(batch * (w + 1) / blocks);
                const double share = double(hi - lo) / batch;
                loss += share * partial[w].loss;
                for (std::size_t l = 0; l < partial[w].grad.weights.size(); ++l) {
                    partial[w].grad.weights[l] *= share;
                    partial[w].grad.biases[l] *= share;
                }
                if (w > 0) partial[0].grad.add(partial[w].grad);
            }
        }

        if (!std::isfinite(loss)) {
            throw NumericalError("train: non-finite loss at iteration " + std::to_string(iter) +
                                 " (seed " + std::to_string(config.seed) + ", first batch stream " +
                                 std::to_string(static_cast<std::uint64_t>(iter - 1) * batch) + ")");
        }

        adam.t += 1;
        const double bias1 = 1.0 - std::pow(config.adam_beta1, double(adam.t));
        const double bias2 = 1.0 - std::pow(config.adam_beta2, double(adam.t));
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            adam_update(model.weights[l], adam.m.weights[l], adam.v.weights[l],
                        partial[0].grad.weights[l], config, bias1, bias2);
            adam_update(model.biases[l], adam.m.biases[l], adam.v.biases[l],
                        partial[0].grad.biases[l], config, bias1, bias2);
        }

        if (iter > tail_start) avg.accumulate(model);

        loss_acc += loss;
        loss_count += 1;
        if (iter % config.checkpoint_interval == 0 || iter == config.iterations) {
            TrainLogEntry entry{iter, loss_acc / double(loss_count)};
            result.log.push_back(entry);
            loss_acc = 0.0;
            loss_count = 0;
            if (!config.checkpoint_path.empty()) {
                write_checkpoint(config.checkpoint_path, model, adam, avg, iter);
            }
            if (on_checkpoint) on_checkpoint(entry);
        }
    }

    result.model = avg.apply(std::move(model));

    // Refit the log-std biases to the averaged means: the NLL optimum over a
    // shared per-parameter shift c is exp(2c) = mean(r^2 exp(-2 lambda)).
    if (config.calibration_samples > 0) {
        const std::int64_t n_cal = config.calibration_samples;
        Eigen::MatrixXd x(n_b, n_cal), t(4, n_cal);
        parallel_for(n_cal, workers, [&](std::int64_t k) {
            Rng rng(config.seed, kCalibrationStreamBase + std::uint64_t(k));
            const auto [y, s] = sample_training_pair(prior, protocol, rng);
            for (int c = 0; c < n_b; ++c) x(c, k) = s[c];
            for (int p = 0; p < 4; ++p) t(p, k) = y[p];
        });
        const Eigen::MatrixXd raw = forward_batch(result.model, x);
        const Eigen::Array4d width = (result.model.output_hi - result.model.output_lo).array();
        Eigen::Array4d mean_sq = Eigen::Array4d::Zero();
        for (std::int64_t k = 0; k < n_cal; ++k) {
            for (int p = 0; p < 4; ++p) {
                const double tn = (t(p, k) - result.model.output_lo[p]) / width[p];
                const double r = tn - raw(p, k);
                mean_sq[p] += r * r * std::exp(-2.0 * raw(4 + p, k));
            }
        }
        mean_sq = (mean_sq / double(n_cal)).max(1e-30);
        for (int p = 0; p < 4; ++p) {
            result.model.biases.back()[4 + p] += 0.5 * std::log(mean_sq[p]);
        }
    }
    return result;
}

} // namespace

void TrainConfig::validate() const {
    if (iterations < 1) throw ConfigError("train.iterations: must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate: must be > 0");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ConfigError("train.adam_beta1: must be in (0, 1)");
    if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ConfigError("train.adam_beta2: must be in (0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps: must be > 0");
    if (checkpoint_interval < 1) throw ConfigError("train.checkpoint_interval: must be >= 1");
    if (tail_average_fraction < 0.0 || tail_average_fraction > 1.0) {
        throw ConfigError("train.tail_average_fraction: must be in [0, 1]");
    }
    if (calibration_samples < 0) {
        throw ConfigError("train.calibration_samples: must be >= 0");
    }
}

TrainResult train(const ParamPrior& prior, const AcquisitionProtocol& protocol,
                  const TrainConfig& config,
                  const std::function<void(const TrainLogEntry&)>& on_checkpoint) {
    Rng init_rng(config.seed, kWeightInitStream);
    MlpModel model = MlpModel::init(static_cast<int>(protocol.n_b()), prior, init_rng);
    AdamState adam = AdamState::zeros_like(model);
    TailAverage avg = TailAverage::zeros_like(model);
    return train_loop(prior, protocol, config, on_checkpoint, std::move(model), std::move(adam),
                      std::move(avg), 0);
}

TrainResult resume_training(const std::filesystem::path& checkpoint,
                            const ParamPrior& prior, const AcquisitionProtocol& protocol,
                            const TrainConfig& config,
                            const std::function<void(const TrainLogEntry&)>& on_checkpoint) {
    Checkpoint ck = read_checkpoint(checkpoint);
    if (ck.iteration >= config.iterations) {
        // Already complete: return the averaged model without the
        // calibration step re-applied (the saved model had it folded in
        // when the original run finished).
        TrainResult done;
        done.model = ck.avg.apply(std::move(ck.model));
        return done;
    }
    // The averaging window is defined by the current iteration target; a
    // checkpoint taken before the window opens starts a fresh average.
    const std::int64_t tail_start =
        config.tail_average_fraction > 0.0
            ? config.iterations -
                  std::int64_t(config.tail_average_fraction * double(config.iterations))
            : config.iterations + 1;
    if (ck.iteration <= tail_start) ck.avg = TailAverage::zeros_like(ck.model);
    return train_loop(prior, protocol, config, on_checkpoint, std::move(ck.model),
                      std::move(ck.adam), std::move(ck.avg), ck.iteration);
}

void write_loss_log(const std::filesystem::path& path, const std::vector<TrainLogEntry>& log) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("loss log: cannot open " + path.string());
    f << "iteration,mean_loss\n";
    char buf[64];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(e.iteration),
                      e.mean_loss);
        f << buf;
    }
}

} // namespace ivim
