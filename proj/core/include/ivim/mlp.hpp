#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "ivim/model.hpp"
#include "ivim/protocol.hpp"
#include "ivim/rng.hpp"
#include "ivim/volume.hpp"

namespace ivim {

/// Network outputs live in a normalized space: inputs are signals scaled by
/// input_scale (1/3000 by default), targets are mapped linearly so that each
/// prior range becomes [0,1]. The 8 outputs split into 4 means and 4
/// log-stds; log-stds are clamped to [-10, 10] before use.
struct MlpModel {
    static constexpr int hidden_layers = 5;
    static constexpr int hidden_width = 50;
    static constexpr int n_outputs = 8; // 2 * n_params
    static constexpr double log_std_clamp = 10.0;

    std::vector<Eigen::MatrixXd> weights; // [out x in], 6 layers
    std::vector<Eigen::VectorXd> biases;
    Eigen::VectorXd input_scale;  // per channel
    Eigen::VectorXd input_offset; // per channel
    Eigen::Vector4d output_lo;    // physical lower bound per parameter
    Eigen::Vector4d output_hi;    // physical upper bound per parameter

    int input_width() const { return weights.empty() ? 0 : int(weights.front().cols()); }

    /// Scaled-uniform (fan-in/fan-out) initialization, zero biases,
    /// normalization constants from the prior and protocol size.
    static MlpModel init(int n_b, const ParamPrior& prior, Rng& rng);

    bool finite() const;
};

struct GaussianPosterior {
    IvimParams mean;                     // physical units
    std::array<double, 4> log_std{};     // log of physical-unit std
    std::array<double, 4> std_dev() const;
};

/// Single-signal inference. Throws DataError on input width mismatch.
GaussianPosterior forward(const MlpModel& model, const SignalVector& signal);

/// Batched inference: signals as columns (n_b x n). Returns the raw 8 x n
/// normalized outputs (means then clamped log-stds).
Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& signals);

GaussianPosterior to_physical(const MlpModel& model, const Eigen::Matrix<double, 8, 1>& raw);

/// Mean over columns of sum_j [lambda_j + (t_j - mu_j)^2 / (2 exp(2 lambda_j))],
/// all in normalized space. `out` is 8 x n (mu rows 0..3, lambda rows 4..7,
/// lambda already clamped), `targets` 4 x n.
double gaussian_nll_loss(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets);

struct MlpGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    static MlpGradients zeros_like(const MlpModel& model);
    void add(const MlpGradients& other);
};

struct LossAndGradients {
    double loss = 0.0;
    MlpGradients grad;
};

/// Exact reverse-mode gradients of the mean batch NLL with respect to all
/// weights and biases. `signals` are physical-unit columns, `targets`
/// physical-unit parameter columns; normalization happens inside. The
/// log-std clamp backpropagates zero outside its range.
LossAndGradients backward(const MlpModel& model, const Eigen::MatrixXd& signals,
                          const Eigen::MatrixXd& targets);

/// Binary model file: magic, format version, architecture descriptor,
/// normalization constants, float64 weights in layer order, trailing crc32.
/// load_model throws ModelIoError with a distinct code for corrupt files,
/// version mismatches and architecture mismatches.
void save_model(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_model(const std::filesystem::path& path);

/// In-memory form of the model file (same bytes); used by checkpoints.
std::vector<char> serialize_model(const MlpModel& model);
MlpModel deserialize_model(const std::vector<char>& bytes);

struct AgpVolumeResult {
    Volume mean_maps; // 4 channels
    Volume std_maps;  // 4 channels
};

/// Per-voxel forward pass over a signal volume.
AgpVolumeResult fit_volume_agp(const MlpModel& model, const Volume& signals,
                               const AcquisitionProtocol& protocol, int workers = 0);

} // namespace ivim
