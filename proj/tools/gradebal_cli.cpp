// gradebal: batch driver for the split -> balance -> augment -> train -> evaluate workflow.
//
//   gradebal --config run.json --command all [--workers N] [--verbose]
//
// Exit status: 0 ok, 2 invalid config, 3 missing upstream artifact,
// 4 bad input data, 5 any other module error. Failures print one JSON
// object on stderr.

#include <cstdlib>
#include <string>

#include "CLI11.hpp"

#include "gradebal/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Class-balanced augmentation, training and evaluation pipeline"};
    std::string config;
    std::string command = "all";
    unsigned workers = 0;
    bool verbose = false;
    app.add_option("--config", config, "JSON run configuration")->required();
    app.add_option("--command", command, "split | balance | augment | train | evaluate | all")
        ->check(CLI::IsMember({"split", "balance", "augment", "train", "evaluate", "all"}));
    app.add_option("--workers", workers, "worker threads for augmentation and feature extraction");
    app.add_flag("--verbose", verbose, "progress messages on stderr");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (workers == 0) {
        if (const char* env = std::getenv("GRADEBAL_WORKERS"))
            workers = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    }
    return gradebal::pipeline::run_command(command, config, workers == 0 ? 1 : workers, verbose);
}
