#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gradsample/experiments.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string dataset;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Config file (key=value sections)")
        ->required();
    cmd->add_option("--out", args.out_dir, "Output directory (overrides experiment.out)");
    cmd->add_option("--seed", args.seed, "Seed override for train.seed and experiment.seeds")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--dataset", args.dataset, "Dataset name override (dataset.name)");
}

gradsample::KeyValueConfig load_with_overrides(const CommonArgs& args) {
    auto cfg = gradsample::KeyValueConfig::parse_file(args.config_path);
    if (args.seed_set) {
        cfg.set("train.seed", std::to_string(args.seed));
        cfg.set("experiment.seeds", std::to_string(args.seed));
    }
    if (!args.dataset.empty()) cfg.set("dataset.name", args.dataset);
    return cfg;
}

std::string resolve_out(const CommonArgs& args, const gradsample::KeyValueConfig& cfg) {
    if (!args.out_dir.empty()) return args.out_dir;
    return cfg.get_string("experiment.out", "runs");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mini-batch gradient descent benchmark with importance and adaptive "
                 "sampling"};
    app.require_subcommand(1);

    CommonArgs train_args, compare_args, correlate_args, overhead_args, snapshot_args;
    CLI::App* cmd_train = app.add_subcommand("train", "Single training run");
    add_common(cmd_train, train_args);
    CLI::App* cmd_compare = app.add_subcommand("compare", "Method-by-seed comparison");
    add_common(cmd_compare, compare_args);
    CLI::App* cmd_correlate =
        app.add_subcommand("correlate", "Importance proxies vs true gradient norm");
    add_common(cmd_correlate, correlate_args);
    CLI::App* cmd_overhead =
        app.add_subcommand("overhead", "Per-step sampling overhead measurement");
    add_common(cmd_overhead, overhead_args);
    CLI::App* cmd_snapshots =
        app.add_subcommand("snapshots", "Importance memory snapshots for 2D data");
    add_common(cmd_snapshots, snapshot_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_train->parsed()) {
            const auto cfg = load_with_overrides(train_args);
            const auto history = gradsample::run_train(cfg, resolve_out(train_args, cfg));
            return history.aborted ? 2 : 0;
        }
        if (cmd_compare->parsed()) {
            const auto cfg = load_with_overrides(compare_args);
            const auto outcomes =
                gradsample::run_compare(cfg, resolve_out(compare_args, cfg));
            for (const auto& oc : outcomes)
                if (oc.history.aborted) return 2;
            return 0;
        }
        if (cmd_correlate->parsed()) {
            const auto cfg = load_with_overrides(correlate_args);
            gradsample::run_correlate(cfg, resolve_out(correlate_args, cfg));
            return 0;
        }
        if (cmd_overhead->parsed()) {
            const auto cfg = load_with_overrides(overhead_args);
            gradsample::run_overhead(cfg, resolve_out(overhead_args, cfg));
            return 0;
        }
        if (cmd_snapshots->parsed()) {
            const auto cfg = load_with_overrides(snapshot_args);
            gradsample::run_snapshots(cfg, resolve_out(snapshot_args, cfg));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
