#include "ivim/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "ivim/errors.hpp"
#include "ivim/parallel.hpp"

namespace ivim {

namespace {

// tanh computed through Eigen's vectorized exp; agrees with std::tanh to
// machine precision and saturates correctly at both ends.
template <typename Derived>
Eigen::MatrixXd tanh_fast(const Eigen::MatrixBase<Derived>& z) {
    return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

constexpr char kMagic[8] = {'I', 'V', 'I', 'M', 'A', 'G', 'P', '\0'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kActivationTanh = 0;

std::vector<int> layer_sizes(int n_b) {
    std::vector<int> sizes{n_b};
    for (int l = 0; l < MlpModel::hidden_layers; ++l) sizes.push_back(MlpModel::hidden_width);
    sizes.push_back(MlpModel::n_outputs);
    return sizes;
}

} // namespace

MlpModel MlpModel::init(int n_b, const ParamPrior& prior, Rng& rng) {
    MlpModel m;
    const auto sizes = layer_sizes(n_b);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double lim = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-lim, lim);
        }
        m.weights.push_back(std::move(w));
        m.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    m.input_scale = Eigen::VectorXd::Constant(n_b, 1.0 / prior.hi.s0);
    m.input_offset = Eigen::VectorXd::Zero(n_b);
    for (int k = 0; k < 4; ++k) {
        m.output_lo[k] = prior.lo[k];
        m.output_hi[k] = prior.hi[k];
    }
    return m;
}

bool MlpModel::finite() const {
    for (const auto& w : weights) {
        if (!w.allFinite()) return false;
    }
    for (const auto& b : biases) {
        if (!b.allFinite()) return false;
    }
    return input_scale.allFinite() && input_offset.allFinite() &&
           output_lo.allFinite() && output_hi.allFinite();
}

Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& signals) {
    if (signals.rows() != model.input_width()) {
        throw DataError("forward: signal has " + std::to_string(signals.rows()) +
                        " channels, model expects " + std::to_string(model.input_width()));
    }
    Eigen::MatrixXd h =
        (signals.array().colwise() * model.input_scale.array()).colwise() +
        model.input_offset.array();
    const std::size_t n_layers = model.weights.size();
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        h = tanh_fast((model.weights[l] * h).colwise() + model.biases[l]);
    }
    Eigen::MatrixXd out = (model.weights.back() * h).colwise() + model.biases.back();
    out.bottomRows(4) = out.bottomRows(4)
                            .cwiseMax(-MlpModel::log_std_clamp)
                            .cwiseMin(MlpModel::log_std_clamp);
    return out;
}

GaussianPosterior to_physical(const MlpModel& model, const Eigen::Matrix<double, 8, 1>& raw) {
    GaussianPosterior p;
    const Eigen::Vector4d width = model.output_hi - model.output_lo;
    const Eigen::Vector4d mean = model.output_lo + raw.head<4>().cwiseProduct(width);
    p.mean = IvimParams::unchecked(mean[0], mean[1], mean[2], mean[3]);
    for (int k = 0; k < 4; ++k) p.log_std[k] = raw[4 + k] + std::log(width[k]);
    return p;
}

std::array<double, 4> GaussianPosterior::std_dev() const {
    return {std::exp(log_std[0]), std::exp(log_std[1]), std::exp(log_std[2]),
            std::exp(log_std[3])};
}

GaussianPosterior forward(const MlpModel& model, const SignalVector& signal) {
    if (static_cast<int>(signal.size()) != model.input_width()) {
        throw DataError("forward: signal has " + std::to_string(signal.size()) +
                        " values, model expects " + std::to_string(model.input_width()));
    }
    Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(signal.data(), signal.size());
    return to_physical(model, forward_batch(model, x).col(0));
}

double gaussian_nll_loss(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets) {
    const auto mu = out.topRows(4).array();
    const auto lam = out.bottomRows(4).array();
    const auto r = targets.array() - mu;
    const double total = (lam + 0.5 * r.square() * (-2.0 * lam).exp()).sum();
    return total / static_cast<double>(out.cols());
}

MlpGradients MlpGradients::zeros_like(const MlpModel& model) {
    MlpGradients g;
    for (const auto& w : model.weights) g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : model.biases) g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    return g;
}

void MlpGradients::add(const MlpGradients& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l] += other.weights[l];
        biases[l] += other.biases[l];
    }
}

LossAndGradients backward(const MlpModel& model, const Eigen::MatrixXd& signals,
                          const Eigen::MatrixXd& targets) {
    if (signals.cols() == 0) throw DataError("backward: empty batch");
    const auto n = signals.cols();
    const std::size_t n_layers = model.weights.size();

    // Normalize inputs and targets into network space.
    Eigen::MatrixXd a0 =
        (signals.array().colwise() * model.input_scale.array()).colwise() +
        model.input_offset.array();
    const Eigen::Array4d width = (model.output_hi - model.output_lo).array();
    Eigen::MatrixXd t =
        ((targets.array().colwise() - model.output_lo.array()).colwise() / width).matrix();

    std::vector<Eigen::MatrixXd> acts(n_layers + 1);
    acts[0] = std::move(a0);
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        acts[l + 1] = tanh_fast((model.weights[l] * acts[l]).colwise() + model.biases[l]);
    }
    Eigen::MatrixXd out =
        (model.weights.back() * acts[n_layers - 1]).colwise() + model.biases.back();

    const auto pre_clamp = out.bottomRows(4);
    Eigen::MatrixXd clamped = out;
    clamped.bottomRows(4) = pre_clamp.cwiseMax(-MlpModel::log_std_clamp)
                                .cwiseMin(MlpModel::log_std_clamp);

    const auto mu = clamped.topRows(4).array();
    const auto lam = clamped.bottomRows(4).array();
    const auto r = t.array() - mu;
    const auto e2l = (-2.0 * lam).exp();

    LossAndGradients result;
    result.loss = (lam + 0.5 * r.square() * e2l).sum() / static_cast<double>(n);

    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd dout(8, n);
    dout.topRows(4) = (-r * e2l * inv_n).matrix();
    // Saturating clamp: no gradient outside the clamp range.
    const auto in_range = (pre_clamp.array().abs() <= MlpModel::log_std_clamp).cast<double>();
    dout.bottomRows(4) = ((1.0 - r.square() * e2l) * inv_n * in_range).matrix();

    result.grad.weights.resize(n_layers);
    result.grad.biases.resize(n_layers);
    Eigen::MatrixXd g = std::move(dout);
    for (std::size_t l = n_layers; l-- > 0;) {
        result.grad.weights[l] = g * acts[l].transpose();
        result.grad.biases[l] = g.rowwise().sum();
        if (l > 0) {
            g = (model.weights[l].transpose() * g).array() * (1.0 - acts[l].array().square());
        }
    }
    return result;
}

namespace {

struct ByteWriter {
    std::vector<char> bytes;
    void raw(const void* p, std::size_t n) {
        const char* c = static_cast<const char*>(p);
        bytes.insert(bytes.end(), c, c + n);
    }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void f64(double v) { raw(&v, 8); }
};

struct ByteReader {
    const std::vector<char>& bytes;
    std::size_t pos = 0;
    void raw(void* p, std::size_t n) {
        if (pos + n > bytes.size()) {
            throw ModelIoError(ModelIoError::Code::corrupt_file, "model file truncated");
        }
        std::memcpy(p, bytes.data() + pos, n);
        pos += n;
    }
    std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
    double f64() { double v; raw(&v, 8); return v; }
};

} // namespace

std::vector<char> serialize_model(const MlpModel& model) {
    ByteWriter w;
    w.raw(kMagic, sizeof(kMagic));
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(model.weights.size()));
    w.u32(static_cast<std::uint32_t>(model.input_width()));
    for (const auto& wm : model.weights) w.u32(static_cast<std::uint32_t>(wm.rows()));
    w.u32(kActivationTanh);
    for (int i = 0; i < model.input_scale.size(); ++i) w.f64(model.input_scale[i]);
    for (int i = 0; i < model.input_offset.size(); ++i) w.f64(model.input_offset[i]);
    for (int k = 0; k < 4; ++k) w.f64(model.output_lo[k]);
    for (int k = 0; k < 4; ++k) w.f64(model.output_hi[k]);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const auto& wm = model.weights[l];
        for (int r = 0; r < wm.rows(); ++r) {
            for (int c = 0; c < wm.cols(); ++c) w.f64(wm(r, c));
        }
        for (int r = 0; r < model.biases[l].size(); ++r) w.f64(model.biases[l][r]);
    }
    w.u32(crc32(w.bytes.data(), w.bytes.size()));
    return std::move(w.bytes);
}

void save_model(const std::filesystem::path& path, const MlpModel& model) {
    const std::vector<char> bytes = serialize_model(model);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("save_model: cannot open " + path.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("save_model: write failed for " + path.string());
}

MlpModel deserialize_model(const std::vector<char>& bytes) {
    if (bytes.size() < sizeof(kMagic) + 8 ||
        std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw ModelIoError(ModelIoError::Code::corrupt_file, "not a model file (bad magic)");
    }
    ByteReader r{bytes, sizeof(kMagic)};
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw ModelIoError(ModelIoError::Code::version_mismatch,
                           "model format version " + std::to_string(version) + ", expected " +
                               std::to_string(kFormatVersion));
    }
    // Whole-file checksum before trusting any structure.
    if (bytes.size() < 4) throw ModelIoError(ModelIoError::Code::corrupt_file, "model file truncated");
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    if (crc32(bytes.data(), bytes.size() - 4) != stored) {
        throw ModelIoError(ModelIoError::Code::corrupt_file, "model file checksum mismatch");
    }

    const std::uint32_t n_layers = r.u32();
    const std::uint32_t input_width = r.u32();
    if (n_layers > 64 || input_width > 65536) {
        throw ModelIoError(ModelIoError::Code::corrupt_file, "implausible model header");
    }
    std::vector<std::uint32_t> out_sizes(n_layers);
    for (auto& s : out_sizes) s = r.u32();
    const std::uint32_t activation = r.u32();

    // Fixed architecture: 5 tanh hidden layers of 50, linear output of 8.
    bool arch_ok = n_layers == MlpModel::hidden_layers + 1 && activation == kActivationTanh;
    if (arch_ok) {
        for (std::size_t l = 0; l < MlpModel::hidden_layers; ++l) {
            arch_ok = arch_ok && out_sizes[l] == MlpModel::hidden_width;
        }
        arch_ok = arch_ok && out_sizes[n_layers - 1] == MlpModel::n_outputs;
    }
    if (!arch_ok) {
        throw ModelIoError(ModelIoError::Code::architecture_mismatch,
                           "model architecture does not match this build");
    }

    MlpModel m;
    m.input_scale.resize(input_width);
    m.input_offset.resize(input_width);
    for (std::uint32_t i = 0; i < input_width; ++i) m.input_scale[i] = r.f64();
    for (std::uint32_t i = 0; i < input_width; ++i) m.input_offset[i] = r.f64();
    for (int k = 0; k < 4; ++k) m.output_lo[k] = r.f64();
    for (int k = 0; k < 4; ++k) m.output_hi[k] = r.f64();
    std::uint32_t in_size = input_width;
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd w(out_sizes[l], in_size);
        for (int row = 0; row < w.rows(); ++row) {
            for (int col = 0; col < w.cols(); ++col) w(row, col) = r.f64();
        }
        Eigen::VectorXd b(out_sizes[l]);
        for (int row = 0; row < b.size(); ++row) b[row] = r.f64();
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
        in_size = out_sizes[l];
    }
    if (r.pos != bytes.size() - 4) {
        throw ModelIoError(ModelIoError::Code::corrupt_file, "model file has trailing bytes");
    }
    return m;
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_model: cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

AgpVolumeResult fit_volume_agp(const MlpModel& model, const Volume& signals,
                               const AcquisitionProtocol& protocol, int workers) {
    if (signals.nc != static_cast<int>(protocol.n_b()) ||
        signals.nc != model.input_width()) {
        throw DataError("fit_volume_agp: volume has " + std::to_string(signals.nc) +
                        " channels, model expects " + std::to_string(model.input_width()) +
                        " and protocol " + std::to_string(protocol.n_b()));
    }
    AgpVolumeResult out;
    out.mean_maps = Volume::make(signals.nx, signals.ny, signals.nz, 4, "params");
    out.mean_maps.channel_names = {"s0", "f", "d", "d_star"};
    out.mean_maps.units = "s0: a.u.; f: fraction; d, d_star: mm^2/s";
    out.std_maps = Volume::make(signals.nx, signals.ny, signals.nz, 4, "uncertainty");
    out.std_maps.channel_names = {"sigma_s0", "sigma_f", "sigma_d", "sigma_d_star"};
    out.std_maps.units = out.mean_maps.units;

    const std::int64_t n_vox = static_cast<std::int64_t>(signals.voxels());
    const int nc = signals.nc;
    constexpr std::int64_t chunk = 1024;
    const std::int64_t n_chunks = (n_vox + chunk - 1) / chunk;
    parallel_for(n_chunks, workers, [&](std::int64_t ci) {
        const std::int64_t lo = ci * chunk;
        const std::int64_t hi = std::min(lo + chunk, n_vox);
        Eigen::MatrixXd x(nc, hi - lo);
        for (std::int64_t v = lo; v < hi; ++v) {
            for (int c = 0; c < nc; ++c) x(c, v - lo) = signals.data[std::size_t(v) * nc + c];
        }
        const Eigen::MatrixXd raw = forward_batch(model, x);
        for (std::int64_t v = lo; v < hi; ++v) {
            const GaussianPosterior p = to_physical(model, raw.col(v - lo));
            const auto sd = p.std_dev();
            for (int k = 0; k < 4; ++k) {
                out.mean_maps.data[std::size_t(v) * 4 + k] = static_cast<float>(p.mean[k]);
                out.std_maps.data[std::size_t(v) * 4 + k] = static_cast<float>(sd[k]);
            }
        }
    });
    return out;
}

} // namespace ivim
