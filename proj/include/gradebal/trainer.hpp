#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "json.hpp"

#include "dataset.hpp"
#include "error.hpp"
#include "image.hpp"
#include "imageops.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace gradebal::trainer {

// ---------------------------------------------------------------------------
// Feature extraction

class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> extract(const ImageRGB& img) const = 0;
};

// Stand-in for a pretrained backbone: resize to side x side, normalize,
// flatten channel-major. dimension() == 3 * side^2.
class ReferenceExtractor final : public FeatureExtractor {
public:
    explicit ReferenceExtractor(int side, dataset::NormalizationStats stats = {}) : side_(side), stats_(stats) {
        if (side < 1)
            throw Error(ErrorKind::InvalidConfig, "extractor side must be >= 1");
        stats_.validate();
    }

    std::size_t dimension() const override { return 3u * static_cast<std::size_t>(side_) * side_; }

    std::vector<double> extract(const ImageRGB& img) const override {
        const ImageRGB small =
            img.width == side_ && img.height == side_ ? img : imageops::resize_bilinear(img, side_, side_);
        return dataset::normalize_image(small, stats_).data;
    }

private:
    int side_;
    dataset::NormalizationStats stats_;
};

// N x D features in manifest order plus their labels.
struct FeatureSet {
    std::size_t dim = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
};

inline FeatureSet extract_features(const FeatureExtractor& extractor, const std::vector<ImageRGB>& images,
                                   const std::vector<int>& labels, unsigned workers = 1) {
    if (images.size() != labels.size())
        throw Error(ErrorKind::LengthMismatch, "images and labels differ in length");
    FeatureSet set{extractor.dimension(), std::vector<double>(images.size() * extractor.dimension()), labels};
    parallel_for(images.size(), workers, [&](std::size_t i) {
        const auto f = extractor.extract(images[i]);
        if (f.size() != set.dim)
            throw Error(ErrorKind::DimensionMismatch, "extractor returned wrong dimension");
        std::copy(f.begin(), f.end(), set.features.begin() + static_cast<std::ptrdiff_t>(i * set.dim));
    });
    return set;
}

// ---------------------------------------------------------------------------
// Head

// softmax(W h + b). Parameters are stored flat: W row-major (C x D), then b.
class LinearHead {
public:
    LinearHead() = default;
    LinearHead(std::size_t classes, std::size_t dim) : classes_(classes), dim_(dim), params_(classes * dim + classes) {
        if (classes < 2 || dim < 1)
            throw Error(ErrorKind::DimensionMismatch, "head needs C >= 2 and D >= 1");
    }

    std::size_t classes() const { return classes_; }
    std::size_t dim() const { return dim_; }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::span<double> weights() { return {params_.data(), classes_ * dim_}; }
    std::span<const double> weights() const { return {params_.data(), classes_ * dim_}; }
    std::span<double> bias() { return {params_.data() + classes_ * dim_, classes_}; }
    std::span<const double> bias() const { return {params_.data() + classes_ * dim_, classes_}; }

    double& weight(std::size_t c, std::size_t d) { return params_[c * dim_ + d]; }
    double weight(std::size_t c, std::size_t d) const { return params_[c * dim_ + d]; }

    void logits(std::span<const double> h, std::span<double> out) const {
        if (h.size() != dim_ || out.size() != classes_)
            throw Error(ErrorKind::DimensionMismatch, "feature dimension does not match head");
        for (std::size_t c = 0; c < classes_; ++c) {
            const double* w = params_.data() + c * dim_;
            double acc = params_[classes_ * dim_ + c];
            for (std::size_t d = 0; d < dim_; ++d)
                acc += w[d] * h[d];
            out[c] = acc;
        }
    }

    bool operator==(const LinearHead&) const = default;

private:
    std::size_t classes_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> params_;
};

// Max-subtracted softmax, in place.
inline void softmax_inplace(std::span<double> v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) {
        if (!std::isfinite(x))
            throw Error(ErrorKind::NonFiniteLogit, "logit is not finite");
        mx = std::max(mx, x);
    }
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v)
        x /= sum;
}

inline std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.begin(), logits.end());
    softmax_inplace(out);
    return out;
}

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean of -log(max(p_true, 1e-12)) over the rows of a B x C probability matrix.
inline double cross_entropy(std::span<const double> probs, std::span<const int> labels, std::size_t classes) {
    if (classes == 0 || probs.size() != labels.size() * classes)
        throw Error(ErrorKind::LengthMismatch, "probability rows and labels differ in length");
    if (labels.empty())
        return 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
            throw Error(ErrorKind::IndexOutOfRange, "label out of range");
        loss -= std::log(std::max(probs[i * classes + labels[i]], kProbabilityFloor));
    }
    return loss / static_cast<double>(labels.size());
}

struct HeadGradient {
    std::vector<double> weights; // C x D
    std::vector<double> bias;    // C

    // Same flat layout as LinearHead::params().
    std::vector<double> flat() const {
        std::vector<double> out(weights);
        out.insert(out.end(), bias.begin(), bias.end());
        return out;
    }
};

namespace detail {

// Accumulates (p_i - onehot(y_i)) / B into grad and returns the summed loss.
inline double accumulate_batch(const LinearHead& head, std::span<const double> features,
                               std::span<const int> labels, std::span<const std::size_t> rows,
                               std::span<double> grad) {
    const std::size_t C = head.classes();
    const std::size_t D = head.dim();
    const double inv_b = 1.0 / static_cast<double>(rows.size());
    std::vector<double> p(C);
    double loss = 0.0;
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t r : rows) {
        const std::span<const double> h = features.subspan(r * D, D);
        head.logits(h, p);
        softmax_inplace(p);
        const int y = labels[r];
        loss -= std::log(std::max(p[y], kProbabilityFloor));
        for (std::size_t c = 0; c < C; ++c) {
            const double delta = (p[c] - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv_b;
            double* g = grad.data() + c * D;
            for (std::size_t d = 0; d < D; ++d)
                g[d] += delta * h[d];
            grad[C * D + c] += delta;
        }
    }
    return loss;
}

inline void check_labels(std::span<const int> labels, std::size_t classes) {
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw Error(ErrorKind::IndexOutOfRange, "label out of range");
}

} // namespace detail

/// Gradient of the mean cross-entropy of softmax(W h_i + b) over a batch.
inline HeadGradient head_gradient(const LinearHead& head, std::span<const double> features,
                                  std::span<const int> labels) {
    const std::size_t C = head.classes();
    const std::size_t D = head.dim();
    if (labels.empty() || features.size() != labels.size() * D)
        throw Error(ErrorKind::DimensionMismatch, "features are not B x D for the given labels");
    detail::check_labels(labels, C);
    std::vector<std::size_t> rows(labels.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<double> grad(C * D + C);
    detail::accumulate_batch(head, features, labels, rows, grad);
    return {std::vector<double>(grad.begin(), grad.begin() + static_cast<std::ptrdiff_t>(C * D)),
            std::vector<double>(grad.begin() + static_cast<std::ptrdiff_t>(C * D), grad.end())};
}

// N x C probabilities, row i = softmax(W h_i + b).
inline std::vector<double> predict_scores(const LinearHead& head, std::span<const double> features) {
    const std::size_t D = head.dim();
    const std::size_t C = head.classes();
    if (features.size() % D != 0)
        throw Error(ErrorKind::DimensionMismatch, "feature matrix width does not match head");
    const std::size_t n = features.size() / D;
    std::vector<double> out(n * C);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> row(out.data() + i * C, C);
        head.logits(features.subspan(i * D, D), row);
        softmax_inplace(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Optimizer

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 32;
    int max_epochs = 500;
    int patience = 50;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            throw Error(ErrorKind::InvalidConfig, "learning_rate must be > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw Error(ErrorKind::InvalidConfig, "Adam betas must be in [0, 1)");
        if (!(epsilon > 0.0))
            throw Error(ErrorKind::InvalidConfig, "epsilon must be > 0");
        if (patience < 1)
            throw Error(ErrorKind::InvalidConfig, "patience must be >= 1");
        if (batch_size < 1)
            throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
        if (max_epochs < 1)
            throw Error(ErrorKind::InvalidConfig, "max_epochs must be >= 1");
    }
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const TrainConfig& cfg) {
    if (grads.size() != params.size())
        throw Error(ErrorKind::ShapeMismatch, "gradient and parameter sizes differ");
    if (state.t == 0 && state.m.empty() && state.v.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw Error(ErrorKind::ShapeMismatch, "optimizer state does not match parameters");
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_macro_f1 = 0.0;
    bool is_best = false;
    bool operator==(const EpochLog&) const = default;
};

inline void to_json(nlohmann::json& j, const EpochLog& e) {
    j = {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_macro_f1", e.val_macro_f1}, {"is_best", e.is_best}};
}

struct FitResult {
    LinearHead best_head;
    int best_epoch = 0;
    std::vector<EpochLog> logs;
};

// Scores the head after each epoch; higher is better.
using ValidationMonitor = std::function<double(const LinearHead&, int epoch)>;

inline double validation_macro_f1(const LinearHead& head, const FeatureSet& validation) {
    const auto probs = predict_scores(head, validation.features);
    metrics::ScoreMatrix sm{head.classes(), probs, validation.labels};
    return metrics::macro_f1(metrics::confusion_matrix(metrics::argmax_predictions(sm), validation.labels,
                                                       head.classes()));
}

/// Mini-batch Adam over `train`, shuffled per epoch from (cfg.seed, epoch).
/// Stops after max_epochs or `patience` consecutive epochs without a strict
/// improvement of the monitor, and returns the parameters of the best epoch.
inline FitResult fit_with_monitor(const FeatureSet& train, LinearHead head, const TrainConfig& cfg,
                                  const ValidationMonitor& monitor) {
    cfg.validate();
    if (train.size() == 0)
        throw Error(ErrorKind::EmptyTrainSet, "training set is empty");
    if (train.dim != head.dim() || train.features.size() != train.size() * train.dim)
        throw Error(ErrorKind::DimensionMismatch, "training features do not match head dimension");
    detail::check_labels(train.labels, head.classes());

    AdamState state(head.params().size());
    std::vector<double> grad(head.params().size());
    std::vector<std::size_t> order(train.size());

    FitResult result;
    result.best_head = head;
    double best = -std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        CounterRng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);

        double loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, end - start);
            loss += detail::accumulate_batch(head, train.features, train.labels, rows, grad);
            adam_step(head.params(), grad, state, cfg);
        }

        EpochLog log{epoch, loss / static_cast<double>(train.size()), monitor(head, epoch), false};
        if (log.val_macro_f1 > best) {
            best = log.val_macro_f1;
            result.best_head = head;
            result.best_epoch = epoch;
            log.is_best = true;
            stale = 0;
        } else {
            ++stale;
        }
        result.logs.push_back(log);
        if (stale >= cfg.patience)
            break;
    }
    return result;
}

inline FitResult fit(const FeatureSet& train, const FeatureSet& validation, const LinearHead& head,
                     const TrainConfig& cfg) {
    if (train.size() == 0)
        throw Error(ErrorKind::EmptyTrainSet, "training set is empty");
    const std::set<int> val_classes(validation.labels.begin(), validation.labels.end());
    if (validation.size() == 0 || val_classes.size() < 2)
        throw Error(ErrorKind::DegenerateValidation, "validation set needs at least two classes");
    if (validation.dim != head.dim())
        throw Error(ErrorKind::DimensionMismatch, "validation features do not match head dimension");
    return fit_with_monitor(train, head, cfg,
                            [&](const LinearHead& h, int) { return validation_macro_f1(h, validation); });
}

// ---------------------------------------------------------------------------
// Checkpoint
//
// Little-endian layout:
//   0  "GBHD"            4 bytes
//   4  version           u16 (= 1)
//   6  D                 u32
//   10 C                 u32
//   14 seed              u64
//   22 config_hash       u64
//   30 model_hash        u64  (hash of the settings a checkpoint is only valid for)
//   38 W row-major, b    (C*D + C) f64
//   .. CRC32             u32 over every preceding byte

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::uint64_t model_hash = 0;
    bool operator==(const CheckpointMeta&) const = default;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;
inline constexpr std::size_t kCheckpointHeaderSize = 38;

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
}

inline std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
    return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

} // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const LinearHead& head, const CheckpointMeta& meta) {
    std::vector<std::uint8_t> out{'G', 'B', 'H', 'D'};
    detail::put_le<std::uint16_t>(out, kCheckpointVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(head.dim()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(head.classes()));
    detail::put_le<std::uint64_t>(out, meta.seed);
    detail::put_le<std::uint64_t>(out, meta.config_hash);
    detail::put_le<std::uint64_t>(out, meta.model_hash);
    for (double p : head.params())
        detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(p));
    detail::put_le<std::uint32_t>(out, detail::crc32_of(out.data(), out.size()));
    return out;
}

struct Checkpoint {
    LinearHead head;
    CheckpointMeta meta;
};

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    auto corrupt = [](const std::string& why) { return Error(ErrorKind::CorruptCheckpoint, why); };
    if (bytes.size() < kCheckpointHeaderSize + 4)
        throw corrupt("file too short");
    if (std::memcmp(bytes.data(), "GBHD", 4) != 0)
        throw corrupt("bad magic");
    if (detail::get_le<std::uint16_t>(bytes.data() + 4) != kCheckpointVersion)
        throw corrupt("unsupported version");
    const std::uint64_t dim = detail::get_le<std::uint32_t>(bytes.data() + 6);
    const std::uint64_t classes = detail::get_le<std::uint32_t>(bytes.data() + 10);
    if (dim < 1 || classes < 2)
        throw corrupt("bad dimensions");
    const std::uint64_t expected = kCheckpointHeaderSize + 8 * (classes * dim + classes) + 4;
    if (bytes.size() != expected)
        throw corrupt("length " + std::to_string(bytes.size()) + " != expected " + std::to_string(expected));
    const std::size_t body = bytes.size() - 4;
    if (detail::crc32_of(bytes.data(), body) != detail::get_le<std::uint32_t>(bytes.data() + body))
        throw corrupt("checksum mismatch");

    Checkpoint ck{LinearHead(classes, dim),
                  {detail::get_le<std::uint64_t>(bytes.data() + 14), detail::get_le<std::uint64_t>(bytes.data() + 22),
                   detail::get_le<std::uint64_t>(bytes.data() + 30)}};
    auto params = ck.head.params();
    for (std::size_t i = 0; i < params.size(); ++i)
        params[i] = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes.data() + kCheckpointHeaderSize + 8 * i));
    return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const LinearHead& head, const CheckpointMeta& meta) {
    const auto bytes = encode_checkpoint(head, meta);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open checkpoint " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

} // namespace gradebal::trainer
