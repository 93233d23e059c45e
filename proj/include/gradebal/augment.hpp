#pragma once

// Stochastic augmentation pipeline: per-image parameters are drawn from a
// counter-based generator seeded by derive_seed(), materialized into a
// SampledPipeline, and replayed by apply_pipeline() through nine stages:
//
//   HFlip -> VFlip -> Rotate -> ColorJitter -> ResizedCrop -> Affine
//         -> GaussianBlur -> Sharpness -> Perspective
//
// Draw order inside sample_pipeline() is fixed and every draw is always
// consumed, so the stream position never depends on a gate outcome:
//   1 hflip gate, 1 vflip gate, 1 rotation, 4 jitter-order keys,
//   4 jitter factors (brightness, contrast, saturation, hue),
//   20 crop attempt draws (10 x {area scale, log aspect}) + 2 crop position,
//   5 affine (tx, ty, scale, shear x, shear y), 1 blur sigma,
//   1 sharpen gate, 1 perspective gate + 8 corner displacements.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "image.hpp"
#include "imageops.hpp"
#include "parallel.hpp"
#include "png_io.hpp"
#include "rng.hpp"

namespace gradebal::augment {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Range&) const = default;
};

struct JitterConfig {
    double brightness = 0.2; // factor drawn from [max(0, 1 - d), 1 + d]
    double contrast = 0.2;
    double saturation = 0.2;
    double hue = 0.1; // factor drawn from [-d, d], in turns
};

struct AffineConfig {
    double translate_frac = 0.1; // per axis, fraction of the frame size
    Range scale{0.9, 1.1};
    double shear_deg = 10.0; // per axis, symmetric
};

struct BlurConfig {
    int kernel = 3;
    Range sigma{0.1, 2.0};
};

struct SharpnessConfig {
    double factor = 2.0;
    double p = 0.3;
};

struct PerspectiveConfig {
    double distortion = 0.2;
    double p = 0.3;
};

struct PipelineConfig {
    double p_hflip = 0.5;
    double p_vflip = 0.5;
    Range rotation_deg{-25.0, 25.0};
    JitterConfig jitter;
    Range crop_scale{0.7, 1.0};
    Range crop_ratio{3.0 / 4.0, 4.0 / 3.0};
    AffineConfig affine;
    BlurConfig blur;
    SharpnessConfig sharpness;
    PerspectiveConfig perspective;
    int out_size = 224;

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0))
                throw Error(ErrorKind::InvalidConfig, std::string(name) + " must be in [0, 1]");
        };
        auto range = [](Range r, const char* name) {
            if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi))
                throw Error(ErrorKind::InvalidConfig, std::string(name) + " must satisfy lo <= hi");
        };
        auto nonneg = [](double v, const char* name) {
            if (!(v >= 0.0 && std::isfinite(v)))
                throw Error(ErrorKind::InvalidConfig, std::string(name) + " must be >= 0");
        };
        prob(p_hflip, "p_hflip");
        prob(p_vflip, "p_vflip");
        prob(sharpness.p, "sharpness.p");
        prob(perspective.p, "perspective.p");
        range(rotation_deg, "rotation_deg");
        range(crop_scale, "crop_scale");
        range(crop_ratio, "crop_ratio");
        range(affine.scale, "affine.scale");
        range(blur.sigma, "blur.sigma");
        nonneg(jitter.brightness, "jitter.brightness");
        nonneg(jitter.contrast, "jitter.contrast");
        nonneg(jitter.saturation, "jitter.saturation");
        nonneg(affine.translate_frac, "affine.translate_frac");
        nonneg(affine.shear_deg, "affine.shear_deg");
        nonneg(sharpness.factor, "sharpness.factor");
        if (!(jitter.hue >= 0.0 && jitter.hue <= 0.5))
            throw Error(ErrorKind::InvalidConfig, "jitter.hue must be in [0, 0.5]");
        if (!(crop_scale.lo > 0.0 && crop_scale.hi <= 1.0))
            throw Error(ErrorKind::InvalidConfig, "crop_scale must lie in (0, 1]");
        if (!(crop_ratio.lo > 0.0))
            throw Error(ErrorKind::InvalidConfig, "crop_ratio must be positive");
        if (!(affine.scale.lo > 0.0))
            throw Error(ErrorKind::InvalidConfig, "affine.scale must be positive");
        if (!(affine.shear_deg < 90.0))
            throw Error(ErrorKind::InvalidConfig, "affine.shear_deg must be < 90");
        if (!(blur.sigma.lo > 0.0))
            throw Error(ErrorKind::InvalidConfig, "blur.sigma must be positive");
        if (blur.kernel < 1 || blur.kernel % 2 == 0)
            throw Error(ErrorKind::InvalidConfig, "blur.kernel must be odd and >= 1");
        if (!(perspective.distortion >= 0.0 && perspective.distortion <= 1.0))
            throw Error(ErrorKind::InvalidConfig, "perspective.distortion must be in [0, 1]");
        if (out_size < 1)
            throw Error(ErrorKind::InvalidConfig, "out_size must be >= 1");
    }
};

struct CropRect {
    int left = 0;
    int top = 0;
    int width = 0;
    int height = 0;
    bool operator==(const CropRect&) const = default;
};

// Jitter sub-operations are indexed in this order in jitter_factors.
inline constexpr std::array<imageops::ColorOp, 4> kJitterOps{
    imageops::ColorOp::Brightness, imageops::ColorOp::Contrast, imageops::ColorOp::Saturation,
    imageops::ColorOp::Hue};
inline constexpr std::array<std::string_view, 4> kJitterNames{"brightness", "contrast", "saturation", "hue"};

struct SampledPipeline {
    bool do_hflip = false;
    bool do_vflip = false;
    double rotation = 0.0; // degrees
    std::array<int, 4> jitter_order{0, 1, 2, 3};
    std::array<double, 4> jitter_factors{1.0, 1.0, 1.0, 0.0};
    CropRect crop;
    double translate_x = 0.0; // fractions of out_size
    double translate_y = 0.0;
    double scale = 1.0;
    double shear_x = 0.0; // degrees
    double shear_y = 0.0;
    double blur_sigma = 1.0;
    bool do_sharpen = false;
    bool do_perspective = false;
    // Inward displacements in output pixels: tl(x,y), tr(x,y), br(x,y), bl(x,y).
    std::array<double, 8> perspective_corners{};

    bool operator==(const SampledPipeline&) const = default;
};

struct AugmentRecord {
    std::string source_id;
    std::uint32_t replica_index = 0;
    std::uint64_t seed = 0;
    SampledPipeline sampled;
    std::string output_path;

    bool operator==(const AugmentRecord&) const = default;
};

/// FNV-1a 64 over global_seed (8 bytes LE), source_id bytes, replica_index (8 bytes LE).
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view source_id,
                                 std::uint64_t replica_index) {
    Fnv1a64 h;
    h.u64_le(global_seed);
    h.bytes(source_id);
    h.u64_le(replica_index);
    return h.value();
}

namespace detail {

inline Range jitter_range(double delta) { return {std::max(0.0, 1.0 - delta), 1.0 + delta}; }

inline CropRect sample_crop(CounterRng& rng, const PipelineConfig& cfg, int src_w, int src_h) {
    std::array<double, 10> scales;
    std::array<double, 10> log_ratios;
    const double log_lo = std::log(cfg.crop_ratio.lo);
    const double log_hi = std::log(cfg.crop_ratio.hi);
    for (int i = 0; i < 10; ++i) {
        scales[i] = rng.uniform(cfg.crop_scale.lo, cfg.crop_scale.hi);
        log_ratios[i] = rng.uniform(log_lo, log_hi);
    }
    const double pos_x = rng.uniform();
    const double pos_y = rng.uniform();

    const double area = static_cast<double>(src_w) * src_h;
    for (int i = 0; i < 10; ++i) {
        const double target = area * scales[i];
        const double aspect = std::exp(log_ratios[i]);
        const long w = std::lround(std::sqrt(target * aspect));
        const long h = std::lround(std::sqrt(target / aspect));
        if (w > 0 && w <= src_w && h > 0 && h <= src_h) {
            const int cw = static_cast<int>(w);
            const int ch = static_cast<int>(h);
            const int left = std::min(static_cast<int>(pos_x * (src_w - cw + 1)), src_w - cw);
            const int top = std::min(static_cast<int>(pos_y * (src_h - ch + 1)), src_h - ch);
            return {left, top, cw, ch};
        }
    }
    // Center-crop fallback clipped to the configured aspect-ratio range.
    const double in_ratio = static_cast<double>(src_w) / src_h;
    int cw = src_w;
    int ch = src_h;
    if (in_ratio < cfg.crop_ratio.lo)
        ch = std::clamp(static_cast<int>(std::lround(cw / cfg.crop_ratio.lo)), 1, src_h);
    else if (in_ratio > cfg.crop_ratio.hi)
        cw = std::clamp(static_cast<int>(std::lround(ch * cfg.crop_ratio.hi)), 1, src_w);
    return {(src_w - cw) / 2, (src_h - ch) / 2, cw, ch};
}

} // namespace detail

inline SampledPipeline sample_pipeline(const PipelineConfig& cfg, std::uint64_t seed, int src_w, int src_h) {
    if (src_w < 1 || src_h < 1)
        throw Error(ErrorKind::InvalidConfig, "source dimensions must be >= 1");
    CounterRng rng(seed);
    SampledPipeline s;
    s.do_hflip = rng.uniform() < cfg.p_hflip;
    s.do_vflip = rng.uniform() < cfg.p_vflip;
    s.rotation = rng.uniform(cfg.rotation_deg.lo, cfg.rotation_deg.hi);

    std::array<double, 4> keys;
    for (auto& k : keys)
        k = rng.uniform();
    std::stable_sort(s.jitter_order.begin(), s.jitter_order.end(),
                     [&](int a, int b) { return keys[a] < keys[b]; });

    const auto b = detail::jitter_range(cfg.jitter.brightness);
    const auto c = detail::jitter_range(cfg.jitter.contrast);
    const auto sat = detail::jitter_range(cfg.jitter.saturation);
    s.jitter_factors[0] = rng.uniform(b.lo, b.hi);
    s.jitter_factors[1] = rng.uniform(c.lo, c.hi);
    s.jitter_factors[2] = rng.uniform(sat.lo, sat.hi);
    s.jitter_factors[3] = rng.uniform(-cfg.jitter.hue, cfg.jitter.hue);

    s.crop = detail::sample_crop(rng, cfg, src_w, src_h);

    const double t = cfg.affine.translate_frac;
    const double sh = cfg.affine.shear_deg;
    s.translate_x = rng.uniform(-t, t);
    s.translate_y = rng.uniform(-t, t);
    s.scale = rng.uniform(cfg.affine.scale.lo, cfg.affine.scale.hi);
    s.shear_x = rng.uniform(-sh, sh);
    s.shear_y = rng.uniform(-sh, sh);

    s.blur_sigma = rng.uniform(cfg.blur.sigma.lo, cfg.blur.sigma.hi);
    s.do_sharpen = rng.uniform() < cfg.sharpness.p;

    s.do_perspective = rng.uniform() < cfg.perspective.p;
    const double half = cfg.out_size / 2.0;
    const double max_d = cfg.perspective.distortion * half;
    for (auto& d : s.perspective_corners)
        d = rng.uniform(0.0, max_d);
    return s;
}

/// True when every field of `s` lies inside the closed range `cfg` allows and
/// the crop rectangle fits a src_w x src_h source.
inline bool is_valid_for(const SampledPipeline& s, const PipelineConfig& cfg, int src_w, int src_h) {
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    const auto b = detail::jitter_range(cfg.jitter.brightness);
    const auto c = detail::jitter_range(cfg.jitter.contrast);
    const auto sat = detail::jitter_range(cfg.jitter.saturation);
    auto order = s.jitter_order;
    std::sort(order.begin(), order.end());
    const double max_d = cfg.perspective.distortion * (cfg.out_size / 2.0);
    bool ok = in(s.rotation, cfg.rotation_deg.lo, cfg.rotation_deg.hi) &&
              order == std::array<int, 4>{0, 1, 2, 3} && in(s.jitter_factors[0], b.lo, b.hi) &&
              in(s.jitter_factors[1], c.lo, c.hi) && in(s.jitter_factors[2], sat.lo, sat.hi) &&
              in(s.jitter_factors[3], -cfg.jitter.hue, cfg.jitter.hue) && s.crop.width >= 1 &&
              s.crop.height >= 1 && s.crop.left >= 0 && s.crop.top >= 0 &&
              s.crop.left + s.crop.width <= src_w && s.crop.top + s.crop.height <= src_h &&
              in(s.translate_x, -cfg.affine.translate_frac, cfg.affine.translate_frac) &&
              in(s.translate_y, -cfg.affine.translate_frac, cfg.affine.translate_frac) &&
              in(s.scale, cfg.affine.scale.lo, cfg.affine.scale.hi) &&
              in(s.shear_x, -cfg.affine.shear_deg, cfg.affine.shear_deg) &&
              in(s.shear_y, -cfg.affine.shear_deg, cfg.affine.shear_deg) &&
              in(s.blur_sigma, cfg.blur.sigma.lo, cfg.blur.sigma.hi);
    for (double d : s.perspective_corners)
        ok = ok && in(d, 0.0, max_d);
    return ok;
}

inline ImageRGB apply_pipeline(const ImageRGB& img, const SampledPipeline& s, const PipelineConfig& cfg) {
    using namespace imageops;
    ImageRGB x = img;
    if (s.do_hflip)
        x = flip(x, FlipAxis::Horizontal);
    if (s.do_vflip)
        x = flip(x, FlipAxis::Vertical);

    x = warp_affine(x, compose_affine(s.rotation, {0.0, 0.0}, 1.0, {0.0, 0.0}, {x.width / 2.0, x.height / 2.0}),
                    x.width, x.height);

    for (int op : s.jitter_order)
        x = adjust_color(x, kJitterOps[op], s.jitter_factors[op]);

    const int n = cfg.out_size;
    x = crop_resize(x, s.crop.left, s.crop.top, s.crop.width, s.crop.height, n, n);

    const double half = n / 2.0;
    x = warp_affine(x,
                    compose_affine(0.0, {s.translate_x * n, s.translate_y * n}, s.scale, {s.shear_x, s.shear_y},
                                   {half, half}),
                    n, n);

    x = gaussian_blur(x, s.blur_sigma, cfg.blur.kernel);

    if (s.do_sharpen)
        x = adjust_sharpness(x, cfg.sharpness.factor);

    if (s.do_perspective) {
        const auto& d = s.perspective_corners;
        const double w = n;
        const std::array<std::pair<double, double>, 4> start{{{0, 0}, {w, 0}, {w, w}, {0, w}}};
        const std::array<std::pair<double, double>, 4> end{
            {{d[0], d[1]}, {w - d[2], d[3]}, {w - d[4], w - d[5]}, {d[6], w - d[7]}}};
        // Content at `start` moves to `end`; the warp needs output -> source.
        x = warp_perspective(x, homography_from_points(end, start));
    }
    return x;
}

// ---------------------------------------------------------------------------
// Balanced generation

struct SourceImage {
    std::string id;
    ImageRGB image;
};

using ClassImages = std::map<int, std::vector<SourceImage>>;

/// Receives generated images. Must tolerate concurrent writes of distinct paths.
class ImageSink {
public:
    virtual ~ImageSink() = default;
    virtual void write(const std::string& relative_path, const ImageRGB& image) = 0;
};

// Writes PNGs under a root directory.
class DirectorySink final : public ImageSink {
public:
    explicit DirectorySink(std::filesystem::path root) : root_(std::move(root)) {}

    void write(const std::string& relative_path, const ImageRGB& image) override {
        const auto path = root_ / relative_path;
        {
            std::lock_guard lock(mutex_);
            std::filesystem::create_directories(path.parent_path());
        }
        write_png(path, image);
    }

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    std::mutex mutex_;
};

// Keeps images in memory, keyed by relative path.
class MemorySink final : public ImageSink {
public:
    void write(const std::string& relative_path, const ImageRGB& image) override {
        std::lock_guard lock(mutex_);
        images_[relative_path] = image;
    }
    const std::map<std::string, ImageRGB>& images() const { return images_; }

private:
    std::map<std::string, ImageRGB> images_;
    std::mutex mutex_;
};

struct GenerateOptions {
    unsigned workers = 1;
    // Produce records (seeds and sampled parameters) without rendering or writing images.
    bool dry_run = false;
};

inline std::string original_path(int label, std::string_view source_id) {
    return std::to_string(label) + "/" + std::string(source_id) + "__orig.png";
}

inline std::string replica_path(int label, std::string_view source_id, std::uint64_t replica) {
    return std::to_string(label) + "/" + std::string(source_id) + "__r" + std::to_string(replica) + ".png";
}

/// Tops every class up to `target` members: originals are written through
/// (resized to out_size) and target - |class| augmented replicas are generated
/// by cycling the class's sources round-robin, sorted by id. Returns one record
/// per generated image, ordered by (class, source_id, replica_index).
inline std::vector<AugmentRecord> generate_balanced(const ClassImages& classes, std::size_t target,
                                                    const PipelineConfig& cfg, std::uint64_t global_seed,
                                                    ImageSink* sink, const GenerateOptions& opts = {}) {
    cfg.validate();
    for (const auto& [label, images] : classes) {
        if (images.empty())
            throw Error(ErrorKind::EmptyClass, "class " + std::to_string(label) + " has no source images");
        if (target < images.size())
            throw Error(ErrorKind::TargetTooSmall, "target " + std::to_string(target) + " < size of class " +
                                                       std::to_string(label));
    }
    if (!opts.dry_run && sink == nullptr)
        throw Error(ErrorKind::InvalidConfig, "an image sink is required unless dry_run is set");

    struct Item {
        int label;
        const SourceImage* source;
        std::uint32_t replica;
    };
    std::vector<Item> items;
    std::vector<std::pair<int, const SourceImage*>> originals;
    for (const auto& [label, images] : classes) {
        std::vector<const SourceImage*> sorted;
        for (const auto& img : images)
            sorted.push_back(&img);
        std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
        for (const auto* s : sorted)
            originals.emplace_back(label, s);
        const std::size_t needed = target - images.size();
        for (std::size_t k = 0; k < needed; ++k)
            items.push_back({label, sorted[k % sorted.size()], static_cast<std::uint32_t>(k / sorted.size())});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        return std::tie(a.label, a.source->id, a.replica) < std::tie(b.label, b.source->id, b.replica);
    });

    const int n = cfg.out_size;
    if (!opts.dry_run) {
        parallel_for(originals.size(), opts.workers, [&](std::size_t i) {
            const auto& [label, src] = originals[i];
            const ImageRGB& img = src->image;
            sink->write(original_path(label, src->id),
                        img.width == n && img.height == n ? img : imageops::resize_bilinear(img, n, n));
        });
    }

    std::vector<AugmentRecord> records(items.size());
    parallel_for(items.size(), opts.workers, [&](std::size_t i) {
        const Item& it = items[i];
        AugmentRecord& rec = records[i];
        rec.source_id = it.source->id;
        rec.replica_index = it.replica;
        rec.seed = derive_seed(global_seed, it.source->id, it.replica);
        rec.sampled = sample_pipeline(cfg, rec.seed, it.source->image.width, it.source->image.height);
        rec.output_path = replica_path(it.label, it.source->id, it.replica);
        if (!opts.dry_run)
            sink->write(rec.output_path, apply_pipeline(it.source->image, rec.sampled, cfg));
    });
    return records;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const Range& r) { j = nlohmann::json::array({r.lo, r.hi}); }
inline void from_json(const nlohmann::json& j, Range& r) {
    if (!j.is_array() || j.size() != 2)
        throw Error(ErrorKind::InvalidConfig, "range must be a two-element array");
    r.lo = j.at(0).get<double>();
    r.hi = j.at(1).get<double>();
}

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = {{"p_hflip", c.p_hflip},
         {"p_vflip", c.p_vflip},
         {"rotation_deg", c.rotation_deg},
         {"jitter",
          {{"brightness", c.jitter.brightness},
           {"contrast", c.jitter.contrast},
           {"saturation", c.jitter.saturation},
           {"hue", c.jitter.hue}}},
         {"crop_scale", c.crop_scale},
         {"crop_ratio", c.crop_ratio},
         {"affine",
          {{"translate_frac", c.affine.translate_frac},
           {"scale_range", c.affine.scale},
           {"shear_deg", c.affine.shear_deg}}},
         {"blur", {{"kernel", c.blur.kernel}, {"sigma_range", c.blur.sigma}}},
         {"sharpness", {{"factor", c.sharpness.factor}, {"p", c.sharpness.p}}},
         {"perspective", {{"distortion", c.perspective.distortion}, {"p", c.perspective.p}}},
         {"out_size", c.out_size}};
}

// Missing keys keep their defaults.
inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
    auto opt = [](const nlohmann::json& o, const char* key, auto& field) {
        if (o.contains(key))
            o.at(key).get_to(field);
    };
    opt(j, "p_hflip", c.p_hflip);
    opt(j, "p_vflip", c.p_vflip);
    opt(j, "rotation_deg", c.rotation_deg);
    if (j.contains("jitter")) {
        const auto& o = j.at("jitter");
        opt(o, "brightness", c.jitter.brightness);
        opt(o, "contrast", c.jitter.contrast);
        opt(o, "saturation", c.jitter.saturation);
        opt(o, "hue", c.jitter.hue);
    }
    opt(j, "crop_scale", c.crop_scale);
    opt(j, "crop_ratio", c.crop_ratio);
    if (j.contains("affine")) {
        const auto& o = j.at("affine");
        opt(o, "translate_frac", c.affine.translate_frac);
        opt(o, "scale_range", c.affine.scale);
        opt(o, "shear_deg", c.affine.shear_deg);
    }
    if (j.contains("blur")) {
        opt(j.at("blur"), "kernel", c.blur.kernel);
        opt(j.at("blur"), "sigma_range", c.blur.sigma);
    }
    if (j.contains("sharpness")) {
        opt(j.at("sharpness"), "factor", c.sharpness.factor);
        opt(j.at("sharpness"), "p", c.sharpness.p);
    }
    if (j.contains("perspective")) {
        opt(j.at("perspective"), "distortion", c.perspective.distortion);
        opt(j.at("perspective"), "p", c.perspective.p);
    }
    opt(j, "out_size", c.out_size);
}

inline void to_json(nlohmann::json& j, const SampledPipeline& s) {
    nlohmann::json order = nlohmann::json::array();
    for (int op : s.jitter_order)
        order.push_back(kJitterNames[op]);
    j = {{"do_hflip", s.do_hflip},
         {"do_vflip", s.do_vflip},
         {"rotation", s.rotation},
         {"jitter_order", order},
         {"jitter_factors",
          {{"brightness", s.jitter_factors[0]},
           {"contrast", s.jitter_factors[1]},
           {"saturation", s.jitter_factors[2]},
           {"hue", s.jitter_factors[3]}}},
         {"crop_rect", {s.crop.left, s.crop.top, s.crop.width, s.crop.height}},
         {"affine_draw",
          {{"translate", {s.translate_x, s.translate_y}},
           {"scale", s.scale},
           {"shear", {s.shear_x, s.shear_y}}}},
         {"blur_sigma", s.blur_sigma},
         {"do_sharpen", s.do_sharpen},
         {"do_perspective", s.do_perspective},
         {"perspective_corners", s.perspective_corners}};
}

inline void from_json(const nlohmann::json& j, SampledPipeline& s) {
    s.do_hflip = j.at("do_hflip").get<bool>();
    s.do_vflip = j.at("do_vflip").get<bool>();
    s.rotation = j.at("rotation").get<double>();
    const auto& order = j.at("jitter_order");
    if (order.size() != 4)
        throw Error(ErrorKind::DataError, "jitter_order must have 4 entries");
    for (std::size_t i = 0; i < 4; ++i) {
        const auto name = order.at(i).get<std::string>();
        const auto it = std::find(kJitterNames.begin(), kJitterNames.end(), name);
        if (it == kJitterNames.end())
            throw Error(ErrorKind::DataError, "unknown jitter op " + name);
        s.jitter_order[i] = static_cast<int>(it - kJitterNames.begin());
    }
    for (std::size_t i = 0; i < 4; ++i)
        s.jitter_factors[i] = j.at("jitter_factors").at(std::string(kJitterNames[i])).get<double>();
    const auto& crop = j.at("crop_rect");
    s.crop = {crop.at(0).get<int>(), crop.at(1).get<int>(), crop.at(2).get<int>(), crop.at(3).get<int>()};
    const auto& aff = j.at("affine_draw");
    s.translate_x = aff.at("translate").at(0).get<double>();
    s.translate_y = aff.at("translate").at(1).get<double>();
    s.scale = aff.at("scale").get<double>();
    s.shear_x = aff.at("shear").at(0).get<double>();
    s.shear_y = aff.at("shear").at(1).get<double>();
    s.blur_sigma = j.at("blur_sigma").get<double>();
    s.do_sharpen = j.at("do_sharpen").get<bool>();
    s.do_perspective = j.at("do_perspective").get<bool>();
    s.perspective_corners = j.at("perspective_corners").get<std::array<double, 8>>();
}

inline void to_json(nlohmann::json& j, const AugmentRecord& r) {
    j = {{"source_id", r.source_id},
         {"replica_index", r.replica_index},
         {"seed", r.seed},
         {"sampled", r.sampled},
         {"output_path", r.output_path}};
}

inline void from_json(const nlohmann::json& j, AugmentRecord& r) {
    r.source_id = j.at("source_id").get<std::string>();
    r.replica_index = j.at("replica_index").get<std::uint32_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.sampled = j.at("sampled").get<SampledPipeline>();
    r.output_path = j.at("output_path").get<std::string>();
}

} // namespace gradebal::augment
