// Writes a synthetic APTOS-shaped dataset (flat-coloured images drawn from
// per-class colour blobs) plus a ready-to-run config.
//
//   gradebal_fixture <out_dir> [per_class=10] [target_per_class=40]

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "gradebal/synthetic.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <out_dir> [per_class=10] [target_per_class=40]\n", argv[0]);
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    const int per_class = argc > 2 ? std::atoi(argv[2]) : 10;
    const int target = argc > 3 ? std::atoi(argv[3]) : 40;
    if (per_class < 1 || target < per_class) {
        std::fprintf(stderr, "need per_class >= 1 and target_per_class >= per_class\n");
        return 2;
    }
    gradebal::synthetic::FixtureSpec spec;
    spec.per_class.fill(per_class);
    gradebal::synthetic::write_fixture(dir, spec);

    const nlohmann::json config = {
        {"task", "multiclass"},
        {"paths", {{"manifest_csv", "manifest.csv"}, {"image_dir", "images"}, {"out_dir", "run"}}},
        {"split", {{"train_frac", 0.85}, {"val_frac", 0.10}, {"seed", 1}}},
        {"balance", {{"target_per_class", target}}},
        {"pipeline", {{"out_size", 64}}},
        {"train", {{"max_epochs", 200}, {"seed", 1}}},
        {"extractor", {{"side", 16}}}};
    std::ofstream(dir / "config.json") << config.dump(2) << "\n";
    std::printf("wrote %s (manifest.csv, images/, config.json)\n", dir.string().c_str());
    return 0;
}
