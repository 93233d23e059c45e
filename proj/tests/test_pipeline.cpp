#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "gradebal/pipeline.hpp"
#include "gradebal/synthetic.hpp"
#include "oracles.hpp"

using namespace gradebal;
using namespace gradebal::pipeline;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

// A scratch directory holding a 5 x 10 fixture and a small config.
struct Fixture {
    fs::path dir;
    fs::path config;

    explicit Fixture(const std::string& name, int per_class = 10) {
        dir = fs::temp_directory_path() / ("gradebal_" + name);
        fs::remove_all(dir);
        synthetic::FixtureSpec spec;
        spec.per_class.fill(per_class);
        spec.side = 20;
        synthetic::write_fixture(dir, spec);
        config = dir / "config.json";
        write_config(base_config());
    }
    ~Fixture() { fs::remove_all(dir); }

    static nlohmann::json base_config() {
        return {{"task", "multiclass"},
                {"paths", {{"manifest_csv", "manifest.csv"}, {"image_dir", "images"}, {"out_dir", "run"}}},
                {"split", {{"seed", 1}}},
                {"balance", {{"target_per_class", 40}}},
                {"pipeline", {{"out_size", 24}}},
                {"train", {{"max_epochs", 30}, {"patience", 10}}},
                {"extractor", {{"side", 8}}}};
    }
    void write_config(const nlohmann::json& j) const { spit(config, j.dump(2)); }
    fs::path out() const { return dir / "run"; }

    int run(const std::string& cmd, unsigned workers = 1, AccessLog* log = nullptr, std::string* err = nullptr) const {
        std::FILE* f = std::tmpfile();
        const int code = run_command(cmd, config, workers, false, f, log);
        std::rewind(f);
        std::string text;
        for (int ch; (ch = std::fgetc(f)) != EOF;)
            text.push_back(static_cast<char>(ch));
        std::fclose(f);
        if (err)
            *err = text;
        return code;
    }
};

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

std::size_t count_png(const fs::path& root) {
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(root))
        n += e.is_regular_file() && e.path().extension() == ".png";
    return n;
}

} // namespace

TEST(Config, ParseDefaultsAndErrors) {
    const auto c = parse_config(Fixture::base_config());
    EXPECT_EQ(c.train_frac, 0.85);
    EXPECT_EQ(c.val_frac, 0.10);
    EXPECT_EQ(c.train.learning_rate, 1e-4);
    EXPECT_EQ(c.train.batch_size, 32u);
    EXPECT_EQ(c.pipeline.out_size, 24);
    EXPECT_EQ(c.target_per_class, 40u);
    EXPECT_EQ(parse_config(to_json_value(c)).split_seed, c.split_seed);
    EXPECT_EQ(config_hash(parse_config(to_json_value(c))), config_hash(c));

    auto bad = Fixture::base_config();
    bad["task"] = "regression";
    EXPECT_THROW(parse_config(bad), Error);
    bad = Fixture::base_config();
    bad["split"]["train_frac"] = 1.5;
    try {
        parse_config(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigInvalid);
    }
    bad = Fixture::base_config();
    bad["paths"].erase("out_dir");
    EXPECT_THROW(parse_config(bad), Error);
}

TEST(Cli, SplitReproducesAptosCounts) {
    const auto dir = fs::temp_directory_path() / "gradebal_aptos_split";
    fs::remove_all(dir);
    std::ostringstream manifest;
    manifest << "id_code,diagnosis\n";
    const int totals[] = {1805, 370, 999, 193, 295};
    for (int c = 0; c < 5; ++c)
        for (int i = 0; i < totals[c]; ++i)
            manifest << "a" << c << "x" << i << ',' << c << '\n';
    spit(dir / "train.csv", manifest.str());
    auto cfg = Fixture::base_config();
    cfg["paths"]["manifest_csv"] = "train.csv";
    cfg.erase("split");
    cfg.erase("balance");
    spit(dir / "config.json", cfg.dump());
    ASSERT_EQ(run_command("split", dir / "config.json", 1, false), 0);

    std::map<std::string, std::vector<int>> counts;
    for (const char* subset : {"train", "val", "test"}) {
        std::istringstream in(slurp(dir / "run" / (std::string(subset) + ".csv")));
        counts[subset].assign(5, 0);
        for (const auto& e : dataset::parse_subset_csv(in, subset))
            counts[subset][e.label] += 1;
    }
    EXPECT_EQ(counts["test"], (std::vector<int>{271, 56, 150, 29, 44}));
    std::vector<int> train_total(5);
    for (int c = 0; c < 5; ++c)
        train_total[c] = counts["train"][c] + counts["val"][c];
    EXPECT_EQ(train_total, (std::vector<int>{1534, 314, 849, 164, 251}));

    cfg["task"] = "binary";
    spit(dir / "config.json", cfg.dump());
    ASSERT_EQ(run_command("split", dir / "config.json", 1, false), 0);
    const auto split = nlohmann::json::parse(slurp(dir / "run" / "split.json"));
    EXPECT_EQ(split["counts"]["test"]["0"], 271);
    EXPECT_EQ(split["counts"]["test"]["1"], 279);
    EXPECT_EQ(split["total"], 3662);
    fs::remove_all(dir);
}

TEST(Cli, AllOnFixtureMatchesOracle) {
    const Fixture fx("fixture_all");
    ASSERT_EQ(fx.run("all"), 0);
    EXPECT_EQ(count_png(fx.out() / "augmented"), 200u);

    std::vector<std::string> ids;
    const auto sm = parse_scores_csv(slurp(fx.out() / "scores.csv"), &ids);
    ASSERT_EQ(sm.rows(), 10u); // two test images per class
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < sm.rows(); ++i)
        rows.emplace_back(sm.row(i).begin(), sm.row(i).end());
    const auto ref = oracle::brute_force(rows, sm.labels, 5);
    const auto metrics = nlohmann::json::parse(slurp(fx.out() / "metrics.json"));
    EXPECT_NEAR(metrics["accuracy"].get<double>(), ref.accuracy, 1e-6);
    EXPECT_NEAR(metrics["macro_f1"].get<double>(), ref.macro_f1, 1e-6);
    EXPECT_NEAR(metrics["weighted_f1"].get<double>(), ref.weighted_f1, 1e-6);
    ASSERT_TRUE(ref.macro_auc);
    EXPECT_NEAR(metrics["macro_auc"].get<double>(), *ref.macro_auc, 1e-6);

    const auto report = nlohmann::json::parse(slurp(fx.out() / "report.json"));
    const auto hash = hex64(config_hash(load_workspace(fx.config).config));
    EXPECT_EQ(report["config_hash"], hash);
    EXPECT_EQ(metrics["config_hash"], hash);
    EXPECT_EQ(nlohmann::json::parse(slurp(fx.out() / "split.json"))["config_hash"], hash);
    for (int c = 0; c < 5; ++c)
        EXPECT_EQ(report["balance_counts"][std::to_string(c)], 40);
    int total = 0;
    for (const auto& [subset, counts] : report["split_counts"].items())
        for (const auto& [label, n] : counts.items())
            total += n.get<int>();
    EXPECT_EQ(total, 50);
    EXPECT_EQ(report["checkpoint_path"], "model.ckpt");

    // Every replica replays from its provenance record.
    const auto cfg = load_workspace(fx.config).config;
    std::istringstream lines(slurp(fx.out() / "augmented" / "augment_log.jsonl"));
    int replayed = 0;
    for (std::string line; std::getline(lines, line) && replayed < 20; ++replayed) {
        const auto rec = nlohmann::json::parse(line).get<augment::AugmentRecord>();
        auto src = read_png(fx.dir / "images" / (rec.source_id + ".png"));
        src = imageops::resize_bilinear(src, cfg.pipeline.out_size, cfg.pipeline.out_size);
        EXPECT_EQ(augment::apply_pipeline(src, rec.sampled, cfg.pipeline),
                  read_png(fx.out() / "augmented" / rec.output_path));
    }
    EXPECT_EQ(replayed, 20);
}

TEST(Cli, IdempotentArtifacts) {
    const Fixture fx("fixture_idem");
    ASSERT_EQ(fx.run("all"), 0);
    auto first = tree_bytes(fx.out());
    ASSERT_EQ(fx.run("all", 3), 0);
    auto second = tree_bytes(fx.out());
    auto strip_time = [](std::string& text) {
        auto j = nlohmann::json::parse(text);
        j.erase("wall_time_seconds");
        text = j.dump();
    };
    strip_time(first.at("report.json"));
    strip_time(second.at("report.json"));
    EXPECT_EQ(first.size(), second.size());
    for (const auto& [name, bytes] : first)
        EXPECT_TRUE(second.count(name) && second.at(name) == bytes) << name;

    // Individual commands reproduce the same bytes too.
    for (const char* cmd : {"split", "balance", "augment", "train", "evaluate"})
        ASSERT_EQ(fx.run(cmd), 0) << cmd;
    auto third = tree_bytes(fx.out());
    strip_time(third.at("report.json"));
    EXPECT_EQ(third, first);
}

TEST(Cli, TestSubsetNeverReadBeforeEvaluate) {
    const Fixture fx("fixture_access");
    ASSERT_EQ(fx.run("split"), 0);
    std::istringstream in(slurp(fx.out() / "test.csv"));
    const auto test = dataset::parse_subset_csv(in, "test");
    ASSERT_FALSE(test.empty());
    std::set<std::string> forbidden{(fx.out() / "test.csv").lexically_normal().string()};
    for (const auto& e : test)
        forbidden.insert((fx.dir / "images" / (e.image_id + ".png")).lexically_normal().string());

    for (const char* cmd : {"balance", "augment", "train"}) {
        AccessLog log;
        ASSERT_EQ(fx.run(cmd, 2, &log), 0) << cmd;
        ASSERT_FALSE(log.paths().empty());
        for (const auto& p : log.paths())
            EXPECT_FALSE(forbidden.count(p)) << cmd << " read " << p;
    }
    AccessLog eval_log;
    ASSERT_EQ(fx.run("evaluate", 1, &eval_log), 0);
    const auto seen = eval_log.paths();
    EXPECT_TRUE(std::find(seen.begin(), seen.end(), *forbidden.begin()) != seen.end());
}

TEST(Cli, AugmentWorkersByteIdentical) {
    const Fixture fx("fixture_workers");
    ASSERT_EQ(fx.run("split"), 0);
    ASSERT_EQ(fx.run("augment", 1), 0);
    const auto one = tree_bytes(fx.out() / "augmented");
    ASSERT_EQ(fx.run("augment", 8), 0);
    EXPECT_EQ(tree_bytes(fx.out() / "augmented"), one);
}

TEST(Cli, ExitCodes) {
    const Fixture fx("fixture_exit");
    std::string err;
    EXPECT_EQ(fx.run("balance", 1, nullptr, &err), 3);
    const auto e = nlohmann::json::parse(err);
    EXPECT_EQ(e["error"], "MissingArtifact");
    EXPECT_EQ(e["exit_code"], 3);

    EXPECT_EQ(fx.run("launch", 1, nullptr, &err), 2);
    EXPECT_EQ(nlohmann::json::parse(err)["error"], "ConfigInvalid");

    auto cfg = Fixture::base_config();
    cfg["split"]["val_frac"] = 0;
    fx.write_config(cfg);
    EXPECT_EQ(fx.run("split", 1, nullptr, &err), 2);
    spit(fx.config, "{not json");
    EXPECT_EQ(fx.run("split"), 2);
    EXPECT_EQ(run_command("split", fx.dir / "absent.json", 1, false, std::tmpfile()), 2);

    fx.write_config(Fixture::base_config());
    ASSERT_EQ(fx.run("split"), 0);
    std::istringstream in(slurp(fx.out() / "train.csv"));
    fs::remove(fx.dir / "images" / (dataset::parse_subset_csv(in, "train").front().image_id + ".png"));
    EXPECT_EQ(fx.run("augment", 1, nullptr, &err), 4);
    EXPECT_EQ(nlohmann::json::parse(err)["error"], "DataError");

    spit(fx.dir / "manifest.csv", "id_code,diagnosis\nx,9\n");
    EXPECT_EQ(fx.run("split"), 4);

    std::vector<std::uint8_t> junk{'G', 'B', 'H', 'D', 1, 0};
    spit(fx.out() / "model.ckpt", std::string(junk.begin(), junk.end()));
    EXPECT_EQ(fx.run("evaluate", 1, nullptr, &err), 5);
    EXPECT_EQ(nlohmann::json::parse(err)["error"], "CorruptCheckpoint");
}

TEST(Cli, EvaluateRefusesMismatchedCheckpoint) {
    const Fixture fx("fixture_mismatch");
    ASSERT_EQ(fx.run("all"), 0);
    auto cfg = Fixture::base_config();
    cfg["extractor"]["side"] = 4;
    fx.write_config(cfg);
    std::string err;
    EXPECT_EQ(fx.run("evaluate", 1, nullptr, &err), 5);
    EXPECT_EQ(nlohmann::json::parse(err)["error"], "ConfigMismatch");

    // Settings that do not affect the head are accepted.
    cfg = Fixture::base_config();
    cfg["train"]["learning_rate"] = 0.5;
    fx.write_config(cfg);
    EXPECT_EQ(fx.run("evaluate"), 0);
}

TEST(Cli, EvaluateBinaryScoreFile) {
    const Fixture fx("fixture_scores");
    spit(fx.dir / "scores.csv", "id,label,p0,p1\na,0,0.9,0.1\nb,1,0.2,0.8\nc,1,0.4,0.6\nd,0,0.7,0.3\n");
    auto cfg = Fixture::base_config();
    cfg["task"] = "binary";
    cfg["paths"]["scores_csv"] = "scores.csv";
    fx.write_config(cfg);
    ASSERT_EQ(fx.run("evaluate"), 0);
    const auto m = nlohmann::json::parse(slurp(fx.out() / "metrics.json"));
    EXPECT_EQ(m["accuracy"], 1.0);
    EXPECT_EQ(m["macro_auc"], 1.0);
    EXPECT_EQ(m["macro_f1"], 1.0);

    spit(fx.dir / "scores.csv", "id,label,p0,p1,p2\na,0,0.9,0.1,0\n");
    EXPECT_EQ(fx.run("evaluate"), 4);
}

TEST(Cli, ScoresCsvRoundTrip) {
    metrics::ScoreMatrix sm{3, {0.1, 0.2, 0.7, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, {2, 0}};
    std::vector<std::string> ids;
    const auto back = parse_scores_csv(format_scores_csv({"x", "y"}, sm), &ids);
    EXPECT_EQ(back.probs, sm.probs);
    EXPECT_EQ(back.labels, sm.labels);
    EXPECT_EQ(ids, (std::vector<std::string>{"x", "y"}));
}
