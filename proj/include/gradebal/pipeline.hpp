#pragma once

// Batch workflow behind the CLI: split -> balance -> augment -> train -> evaluate.
//
// Artifacts under paths.out_dir:
//   train.csv val.csv test.csv split.json      (split)
//   balance_plan.json                          (balance)
//   augmented/<class>/<id>__orig.png
//   augmented/<class>/<id>__r<k>.png
//   augmented/augment_log.jsonl
//   augment_summary.json                       (augment)
//   model.ckpt train_log.jsonl                 (train)
//   scores.csv metrics.json                    (evaluate)
//   report.json                                (all)
//
// Relative paths in the config resolve against the config file's directory.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "augment.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "imageops.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "png_io.hpp"
#include "rng.hpp"
#include "trainer.hpp"

namespace gradebal::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
    dataset::Task task = dataset::Task::Multiclass;
    std::string manifest_csv;
    std::string image_dir;
    std::string out_dir;
    std::string scores_csv; // optional: evaluate a score file instead of a checkpoint
    double train_frac = 0.85;
    double val_frac = 0.10;
    std::uint64_t split_seed = 0; // also seeds augmentation
    std::size_t target_per_class = 20000;
    augment::PipelineConfig pipeline;
    trainer::TrainConfig train;
    int extractor_side = 32;
    dataset::NormalizationStats normalization;

    std::size_t class_count() const { return static_cast<std::size_t>(dataset::class_count(task)); }
};

inline json to_json_value(const RunConfig& c) {
    json pipeline;
    augment::to_json(pipeline, c.pipeline);
    json paths = {{"manifest_csv", c.manifest_csv}, {"image_dir", c.image_dir}, {"out_dir", c.out_dir}};
    if (!c.scores_csv.empty())
        paths["scores_csv"] = c.scores_csv;
    return {{"task", c.task == dataset::Task::Binary ? "binary" : "multiclass"},
            {"paths", paths},
            {"split", {{"train_frac", c.train_frac}, {"val_frac", c.val_frac}, {"seed", c.split_seed}}},
            {"balance", {{"target_per_class", c.target_per_class}}},
            {"pipeline", pipeline},
            {"train",
             {{"learning_rate", c.train.learning_rate},
              {"batch_size", c.train.batch_size},
              {"max_epochs", c.train.max_epochs},
              {"patience", c.train.patience},
              {"beta1", c.train.beta1},
              {"beta2", c.train.beta2},
              {"epsilon", c.train.epsilon},
              {"seed", c.train.seed}}},
            {"extractor", {{"side", c.extractor_side}}},
            {"normalization", {{"mean", c.normalization.mean}, {"std", c.normalization.std}}}};
}

inline RunConfig parse_config(const json& j) {
    RunConfig c;
    try {
        if (!j.is_object())
            throw Error(ErrorKind::ConfigInvalid, "config must be a JSON object");
        const auto task = j.at("task").get<std::string>();
        if (task == "binary")
            c.task = dataset::Task::Binary;
        else if (task == "multiclass")
            c.task = dataset::Task::Multiclass;
        else
            throw Error(ErrorKind::ConfigInvalid, "task must be 'binary' or 'multiclass'");

        const auto& paths = j.at("paths");
        c.manifest_csv = paths.at("manifest_csv").get<std::string>();
        c.image_dir = paths.at("image_dir").get<std::string>();
        c.out_dir = paths.at("out_dir").get<std::string>();
        if (paths.contains("scores_csv"))
            c.scores_csv = paths.at("scores_csv").get<std::string>();

        auto opt = [](const json& o, const char* key, auto& field) {
            if (o.contains(key))
                o.at(key).get_to(field);
        };
        if (j.contains("split")) {
            opt(j.at("split"), "train_frac", c.train_frac);
            opt(j.at("split"), "val_frac", c.val_frac);
            opt(j.at("split"), "seed", c.split_seed);
        }
        if (j.contains("balance"))
            opt(j.at("balance"), "target_per_class", c.target_per_class);
        if (j.contains("pipeline"))
            augment::from_json(j.at("pipeline"), c.pipeline);
        if (j.contains("train")) {
            const auto& t = j.at("train");
            opt(t, "learning_rate", c.train.learning_rate);
            opt(t, "batch_size", c.train.batch_size);
            opt(t, "max_epochs", c.train.max_epochs);
            opt(t, "patience", c.train.patience);
            opt(t, "beta1", c.train.beta1);
            opt(t, "beta2", c.train.beta2);
            opt(t, "epsilon", c.train.epsilon);
            opt(t, "seed", c.train.seed);
        }
        if (j.contains("extractor"))
            opt(j.at("extractor"), "side", c.extractor_side);
        if (j.contains("normalization")) {
            opt(j.at("normalization"), "mean", c.normalization.mean);
            opt(j.at("normalization"), "std", c.normalization.std);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, e.what());
    }

    try {
        if (c.manifest_csv.empty() || c.image_dir.empty() || c.out_dir.empty())
            throw Error(ErrorKind::ConfigInvalid, "paths must be non-empty");
        if (!(c.train_frac > 0.0 && c.train_frac < 1.0) || !(c.val_frac > 0.0 && c.val_frac < 1.0))
            throw Error(ErrorKind::ConfigInvalid, "split fractions must be in (0, 1)");
        if (c.target_per_class < 1)
            throw Error(ErrorKind::ConfigInvalid, "target_per_class must be >= 1");
        if (c.extractor_side < 1)
            throw Error(ErrorKind::ConfigInvalid, "extractor.side must be >= 1");
        c.pipeline.validate();
        c.train.validate();
        c.normalization.validate();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigInvalid)
            throw;
        throw Error(ErrorKind::ConfigInvalid, e.what());
    }
    return c;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// FNV-1a over the canonical (sorted-key, defaults filled in) config JSON.
inline std::uint64_t config_hash(const RunConfig& c) { return fnv1a64(to_json_value(c).dump()); }

// Covers only what a trained head depends on at inference time.
inline std::uint64_t model_hash(const RunConfig& c) {
    const json j = {{"task", c.task == dataset::Task::Binary ? "binary" : "multiclass"},
                    {"extractor_side", c.extractor_side},
                    {"out_size", c.pipeline.out_size},
                    {"normalization", {{"mean", c.normalization.mean}, {"std", c.normalization.std}}}};
    return fnv1a64(j.dump());
}

// Records every input file a stage opens.
class AccessLog {
public:
    void record(const fs::path& p) {
        std::lock_guard lock(mutex_);
        paths_.push_back(p.lexically_normal().string());
    }
    std::vector<std::string> paths() const {
        std::lock_guard lock(mutex_);
        return paths_;
    }
    void clear() {
        std::lock_guard lock(mutex_);
        paths_.clear();
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::string> paths_;
};

struct Workspace {
    RunConfig config;
    fs::path base_dir; // directory relative config paths resolve against
    unsigned workers = 1;
    bool verbose = false;
    AccessLog* access_log = nullptr;

    fs::path resolve(const std::string& p) const {
        const fs::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }
    fs::path out_dir() const { return resolve(config.out_dir); }
    fs::path image_dir() const { return resolve(config.image_dir); }
    fs::path artifact(const std::string& name) const { return out_dir() / name; }

    void note(const fs::path& p) const {
        if (access_log)
            access_log->record(p);
    }
    void log(const std::string& msg) const {
        if (verbose)
            std::fprintf(stderr, "[gradebal] %s\n", msg.c_str());
    }
};

inline Workspace load_workspace(const fs::path& config_path, unsigned workers = 1, bool verbose = false) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::ConfigInvalid, "cannot open config " + config_path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, e.what());
    }
    Workspace ws{parse_config(j), fs::absolute(config_path).parent_path(), std::max(1u, workers), verbose, nullptr};
    return ws;
}

namespace detail {

inline std::string read_text(const Workspace& ws, const fs::path& p) {
    if (!fs::exists(p))
        throw Error(ErrorKind::MissingArtifact, "missing " + p.string());
    ws.note(p);
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write " + p.string());
}

inline void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline std::vector<dataset::ManifestEntry> read_subset(const Workspace& ws, const std::string& subset) {
    std::istringstream in(read_text(ws, ws.artifact(subset + ".csv")));
    try {
        return dataset::parse_subset_csv(in, subset);
    } catch (const Error& e) {
        throw Error(ErrorKind::DataError, e.what());
    }
}

// Source image, resized to the pipeline frame.
inline ImageRGB load_source_image(const Workspace& ws, const std::string& id) {
    const auto path = ws.image_dir() / (id + ".png");
    if (!fs::exists(path))
        throw Error(ErrorKind::DataError, "missing image " + path.string());
    ws.note(path);
    const ImageRGB img = read_png(path);
    const int n = ws.config.pipeline.out_size;
    return img.width == n && img.height == n ? img : imageops::resize_bilinear(img, n, n);
}

inline ImageRGB load_artifact_image(const Workspace& ws, const fs::path& path) {
    if (!fs::exists(path))
        throw Error(ErrorKind::MissingArtifact, "missing " + path.string());
    ws.note(path);
    return read_png(path);
}

inline json counts_json(const std::map<int, std::size_t>& counts) {
    json j = json::object();
    for (const auto& [label, n] : counts)
        j[std::to_string(label)] = n;
    return j;
}

inline std::map<int, std::size_t> all_class_counts(const std::vector<dataset::ManifestEntry>& entries,
                                                   std::size_t classes) {
    std::map<int, std::size_t> counts;
    for (std::size_t c = 0; c < classes; ++c)
        counts[static_cast<int>(c)] = 0;
    for (const auto& [label, n] : dataset::class_counts(entries))
        counts[label] = n;
    return counts;
}

inline trainer::FeatureSet extract(const Workspace& ws, const std::vector<ImageRGB>& images,
                                   const std::vector<int>& labels) {
    const trainer::ReferenceExtractor extractor(ws.config.extractor_side, ws.config.normalization);
    return trainer::extract_features(extractor, images, labels, ws.workers);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Stages

struct SplitResult {
    std::map<std::string, std::map<int, std::size_t>> counts; // subset -> class -> n
};

inline SplitResult run_split(const Workspace& ws) {
    const auto& cfg = ws.config;
    const auto manifest_path = ws.resolve(cfg.manifest_csv);
    if (!fs::exists(manifest_path))
        throw Error(ErrorKind::MissingArtifact, "missing manifest " + manifest_path.string());
    ws.note(manifest_path);
    std::vector<dataset::ManifestEntry> entries;
    try {
        entries = dataset::load_manifest(manifest_path);
        if (cfg.task == dataset::Task::Binary)
            entries = dataset::binarize_entries(std::move(entries));
    } catch (const Error& e) {
        throw Error(ErrorKind::DataError, e.what());
    }
    const auto split = dataset::carve_validation(dataset::stratified_split(entries, cfg.train_frac, cfg.split_seed),
                                                 cfg.val_frac, cfg.split_seed);

    SplitResult result;
    const std::pair<const char*, const std::vector<dataset::ManifestEntry>*> subsets[] = {
        {"train", &split.train}, {"val", &split.validation}, {"test", &split.test}};
    json counts = json::object();
    for (const auto& [name, list] : subsets) {
        std::ostringstream csv;
        dataset::write_subset_csv(csv, *list, name);
        detail::write_text(ws.artifact(std::string(name) + ".csv"), csv.str());
        result.counts[name] = detail::all_class_counts(*list, cfg.class_count());
        counts[name] = detail::counts_json(result.counts[name]);
    }
    detail::write_json(ws.artifact("split.json"),
                       {{"config_hash", hex64(config_hash(cfg))}, {"counts", counts}, {"total", entries.size()}});
    ws.log("split: " + std::to_string(split.train.size()) + " train / " + std::to_string(split.validation.size()) +
           " val / " + std::to_string(split.test.size()) + " test");
    return result;
}

struct BalanceResult {
    std::map<int, std::size_t> counts;
    std::map<int, std::size_t> plan;
};

inline BalanceResult run_balance(const Workspace& ws) {
    const auto train = detail::read_subset(ws, "train");
    BalanceResult r;
    r.counts = detail::all_class_counts(train, ws.config.class_count());
    try {
        r.plan = dataset::balance_plan(r.counts, ws.config.target_per_class);
    } catch (const Error& e) {
        throw Error(ErrorKind::DataError, e.what());
    }
    detail::write_json(ws.artifact("balance_plan.json"), {{"config_hash", hex64(config_hash(ws.config))},
                                                          {"target_per_class", ws.config.target_per_class},
                                                          {"counts", detail::counts_json(r.counts)},
                                                          {"plan", detail::counts_json(r.plan)}});
    return r;
}

inline std::vector<augment::AugmentRecord> run_augment(const Workspace& ws) {
    const auto train = detail::read_subset(ws, "train");
    augment::ClassImages classes;
    std::vector<std::pair<int, augment::SourceImage*>> slots;
    for (const auto& e : train)
        classes[e.label].push_back({e.image_id, ImageRGB{}});
    for (auto& [label, list] : classes)
        for (auto& s : list)
            slots.emplace_back(label, &s);
    parallel_for(slots.size(), ws.workers,
                 [&](std::size_t i) { slots[i].second->image = detail::load_source_image(ws, slots[i].second->id); });

    const auto dir = ws.artifact("augmented");
    fs::remove_all(dir);
    fs::create_directories(dir);
    augment::DirectorySink sink(dir);
    std::vector<augment::AugmentRecord> records;
    try {
        records = augment::generate_balanced(classes, ws.config.target_per_class, ws.config.pipeline,
                                             ws.config.split_seed, &sink, {ws.workers, false});
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::TargetTooSmall || e.kind() == ErrorKind::EmptyClass)
            throw Error(ErrorKind::DataError, e.what());
        throw;
    }

    std::string log;
    for (const auto& r : records)
        log += json(r).dump() + "\n";
    detail::write_text(dir / "augment_log.jsonl", log);

    std::map<int, std::size_t> totals;
    for (const auto& [label, list] : classes)
        totals[label] = list.size();
    for (const auto& r : records)
        ++totals[std::stoi(r.output_path.substr(0, r.output_path.find('/')))];
    detail::write_json(ws.artifact("augment_summary.json"), {{"config_hash", hex64(config_hash(ws.config))},
                                                             {"generated", records.size()},
                                                             {"class_totals", detail::counts_json(totals)}});
    ws.log("augment: generated " + std::to_string(records.size()) + " images");
    return records;
}

struct TrainResult {
    trainer::FitResult fit;
    fs::path checkpoint;
};

inline TrainResult run_train(const Workspace& ws) {
    const auto& cfg = ws.config;
    const auto train = detail::read_subset(ws, "train");
    const auto val = detail::read_subset(ws, "val");
    const auto aug_dir = ws.artifact("augmented");
    const auto log_text = detail::read_text(ws, aug_dir / "augment_log.jsonl");

    std::vector<fs::path> paths;
    std::vector<int> labels;
    for (const auto& e : train) {
        paths.push_back(aug_dir / augment::original_path(e.label, e.image_id));
        labels.push_back(e.label);
    }
    std::istringstream lines(log_text);
    for (std::string line; std::getline(lines, line);) {
        if (line.empty())
            continue;
        augment::AugmentRecord rec;
        try {
            rec = json::parse(line).get<augment::AugmentRecord>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::DataError, std::string("augment_log.jsonl: ") + e.what());
        }
        paths.push_back(aug_dir / rec.output_path);
        labels.push_back(std::stoi(rec.output_path.substr(0, rec.output_path.find('/'))));
    }

    std::vector<ImageRGB> train_images(paths.size());
    parallel_for(paths.size(), ws.workers,
                 [&](std::size_t i) { train_images[i] = detail::load_artifact_image(ws, paths[i]); });
    std::vector<ImageRGB> val_images(val.size());
    std::vector<int> val_labels(val.size());
    parallel_for(val.size(), ws.workers, [&](std::size_t i) {
        val_images[i] = detail::load_source_image(ws, val[i].image_id);
        val_labels[i] = val[i].label;
    });

    const auto train_set = detail::extract(ws, train_images, labels);
    const auto val_set = detail::extract(ws, val_images, val_labels);
    ws.log("train: " + std::to_string(train_set.size()) + " samples, D=" + std::to_string(train_set.dim));

    TrainResult r;
    r.fit = trainer::fit(train_set, val_set, trainer::LinearHead(cfg.class_count(), train_set.dim), cfg.train);
    r.checkpoint = ws.artifact("model.ckpt");
    trainer::save_checkpoint(r.checkpoint, r.fit.best_head, {cfg.train.seed, config_hash(cfg), model_hash(cfg)});
    std::string log;
    for (const auto& e : r.fit.logs)
        log += json(e).dump() + "\n";
    detail::write_text(ws.artifact("train_log.jsonl"), log);
    ws.log("train: best epoch " + std::to_string(r.fit.best_epoch) + " of " + std::to_string(r.fit.logs.size()));
    return r;
}

// `id,label,p0,...,p{C-1}`
inline std::string format_scores_csv(const std::vector<std::string>& ids, const metrics::ScoreMatrix& sm) {
    std::ostringstream out;
    out << "id,label";
    for (std::size_t c = 0; c < sm.class_count; ++c)
        out << ",p" << c;
    out << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < sm.rows(); ++i) {
        out << ids[i] << ',' << sm.labels[i];
        for (double p : sm.row(i))
            out << ',' << p;
        out << '\n';
    }
    return out.str();
}

inline metrics::ScoreMatrix parse_scores_csv(const std::string& text, std::vector<std::string>* ids = nullptr) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::DataError, "empty score file");
    const auto header = dataset::detail::split_csv_line(dataset::detail::strip_bom(line));
    if (header.size() < 4 || header[0] != "id" || header[1] != "label")
        throw Error(ErrorKind::DataError, "score file header must be id,label,p0,...");
    metrics::ScoreMatrix sm;
    sm.class_count = header.size() - 2;
    for (std::size_t c = 0; c < sm.class_count; ++c)
        if (header[c + 2] != "p" + std::to_string(c))
            throw Error(ErrorKind::DataError, "score file header must be id,label,p0,...");
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (dataset::detail::trim(line).empty())
            continue;
        const auto cells = dataset::detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw Error(ErrorKind::DataError, "score file row " + std::to_string(row) + " has wrong width");
        try {
            if (ids)
                ids->push_back(cells[0]);
            sm.labels.push_back(std::stoi(cells[1]));
            for (std::size_t c = 0; c < sm.class_count; ++c)
                sm.probs.push_back(std::stod(cells[c + 2]));
        } catch (const std::exception&) {
            throw Error(ErrorKind::DataError, "score file row " + std::to_string(row) + " is not numeric");
        }
    }
    return sm;
}

inline metrics::MetricsReport run_evaluate(const Workspace& ws) {
    const auto& cfg = ws.config;
    metrics::ScoreMatrix sm;
    if (!cfg.scores_csv.empty()) {
        sm = parse_scores_csv(detail::read_text(ws, ws.resolve(cfg.scores_csv)));
        if (sm.class_count != cfg.class_count())
            throw Error(ErrorKind::DataError, "score file class count does not match task");
    } else {
        const auto ckpt_path = ws.artifact("model.ckpt");
        if (!fs::exists(ckpt_path))
            throw Error(ErrorKind::MissingArtifact, "missing " + ckpt_path.string());
        ws.note(ckpt_path);
        const auto ckpt = trainer::load_checkpoint(ckpt_path);
        if (ckpt.meta.model_hash != model_hash(cfg))
            throw Error(ErrorKind::ConfigMismatch,
                        "checkpoint was trained with different task or extractor settings (model hash " +
                            hex64(ckpt.meta.model_hash) + " != " + hex64(model_hash(cfg)) + ")");
        const auto test = detail::read_subset(ws, "test");
        std::vector<ImageRGB> images(test.size());
        std::vector<int> labels(test.size());
        std::vector<std::string> ids(test.size());
        parallel_for(test.size(), ws.workers, [&](std::size_t i) {
            images[i] = detail::load_source_image(ws, test[i].image_id);
            labels[i] = test[i].label;
            ids[i] = test[i].image_id;
        });
        const auto features = detail::extract(ws, images, labels);
        if (features.dim != ckpt.head.dim() || ckpt.head.classes() != cfg.class_count())
            throw Error(ErrorKind::ConfigMismatch, "checkpoint shape does not match config");
        sm = {cfg.class_count(), trainer::predict_scores(ckpt.head, features.features), labels};
        detail::write_text(ws.artifact("scores.csv"), format_scores_csv(ids, sm));
    }
    metrics::MetricsReport report;
    try {
        report = metrics::evaluate(sm);
    } catch (const Error& e) {
        throw Error(ErrorKind::DataError, e.what());
    }
    auto j = metrics::to_json_value(report);
    j["config_hash"] = hex64(config_hash(cfg));
    detail::write_json(ws.artifact("metrics.json"), j);
    return report;
}

struct RunReport {
    std::string config_hash;
    SplitResult split;
    BalanceResult balance;
    metrics::MetricsReport metrics;
    std::string checkpoint_path;
    double wall_time_seconds = 0.0;
};

inline RunReport run_all(const Workspace& ws) {
    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.config_hash = hex64(config_hash(ws.config));
    report.split = run_split(ws);
    report.balance = run_balance(ws);
    run_augment(ws);
    report.checkpoint_path = run_train(ws).checkpoint.string();
    report.metrics = run_evaluate(ws);
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json split_counts = json::object();
    for (const auto& [subset, counts] : report.split.counts)
        split_counts[subset] = detail::counts_json(counts);
    std::map<int, std::size_t> balanced;
    for (const auto& [label, n] : report.balance.counts)
        balanced[label] = n + report.balance.plan.at(label);
    detail::write_json(ws.artifact("report.json"),
                       {{"config_hash", report.config_hash},
                        {"split_counts", split_counts},
                        {"balance_counts", detail::counts_json(balanced)},
                        {"metrics", metrics::to_json_value(report.metrics)},
                        {"checkpoint_path", fs::relative(report.checkpoint_path, ws.out_dir()).string()},
                        {"wall_time_seconds", report.wall_time_seconds}});
    return report;
}

// ---------------------------------------------------------------------------
// Command dispatch

enum class Command { Split, Balance, Augment, Train, Evaluate, All };

inline Command parse_command(const std::string& s) {
    static const std::map<std::string, Command> table{{"split", Command::Split},     {"balance", Command::Balance},
                                                      {"augment", Command::Augment}, {"train", Command::Train},
                                                      {"evaluate", Command::Evaluate}, {"all", Command::All}};
    const auto it = table.find(s);
    if (it == table.end())
        throw Error(ErrorKind::ConfigInvalid, "unknown command '" + s + "'");
    return it->second;
}

inline void run(Command cmd, const Workspace& ws) {
    fs::create_directories(ws.out_dir());
    switch (cmd) {
    case Command::Split: run_split(ws); break;
    case Command::Balance: run_balance(ws); break;
    case Command::Augment: run_augment(ws); break;
    case Command::Train: run_train(ws); break;
    case Command::Evaluate: run_evaluate(ws); break;
    case Command::All: run_all(ws); break;
    }
}

inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ConfigInvalid: return 2;
    case ErrorKind::MissingArtifact: return 3;
    case ErrorKind::DataError: return 4;
    default: return 5;
    }
}

inline std::string error_json(const Error& e) {
    return json{{"error", std::string(to_string(e.kind()))}, {"exit_code", exit_code(e.kind())}, {"message", e.what()}}
        .dump();
}

/// Loads the config and runs one command; returns the process exit status and
/// writes a one-line JSON error object to `err` on failure.
inline int run_command(const std::string& command, const fs::path& config_path, unsigned workers, bool verbose,
                       std::FILE* err = stderr, AccessLog* access_log = nullptr) {
    try {
        const Command cmd = parse_command(command);
        Workspace ws = load_workspace(config_path, workers, verbose);
        ws.access_log = access_log;
        run(cmd, ws);
        return 0;
    } catch (const Error& e) {
        std::fprintf(err, "%s\n", error_json(e).c_str());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        const Error wrapped(ErrorKind::IoError, e.what());
        std::fprintf(err, "%s\n", error_json(wrapped).c_str());
        return exit_code(wrapped.kind());
    }
}

} // namespace gradebal::pipeline
