// peerfx command line: synth | score | estimate | validate | accept.
// One JSON config drives everything; flags override config keys
// (precedence: flags > config > defaults). Exit codes: 0 success, 1 usage,
// 2 data error, 3 numerical failure, 4 acceptance failure.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "peerfx/acceptance.hpp"
#include "peerfx/pipeline.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out_dir;
    std::optional<std::string> data_dir;
};

peerfx::RunConfig effective_config(const GlobalFlags& flags) {
    peerfx::RunConfig cfg;
    if (!flags.config_path.empty()) cfg = peerfx::load_run_config(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.jobs) cfg.jobs = *flags.jobs;
    if (flags.out_dir) cfg.out_dir = *flags.out_dir;
    if (flags.data_dir) cfg.data_dir = *flags.data_dir;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"peerfx: peer-effects estimation pipeline on grouped training data"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "JSON config file");
    app.add_option("--seed", flags.seed, "master seed (overrides config)");
    app.add_option("--jobs", flags.jobs, "worker pool size (overrides config)");
    app.add_option("--out", flags.out_dir, "output directory (overrides config)");
    app.add_option("--data", flags.data_dir, "input data directory (overrides config)");

    auto* synth = app.add_subcommand(
        "synth", "generate persons.csv, courses.csv, ground_truth.json");
    auto* score = app.add_subcommand(
        "score", "propensity matching, balance, employability scores, peer stats");
    auto* estimate = app.add_subcommand(
        "estimate", "run the configured estimation specs per program type");
    auto* validate = app.add_subcommand(
        "validate", "resampling, exogeneity, sorting and variance diagnostics");
    auto* accept = app.add_subcommand(
        "accept", "run the acceptance suite; nonzero exit on any failure");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const peerfx::RunConfig cfg = effective_config(flags);
        if (synth->parsed()) {
            peerfx::run_synth(cfg);
        } else if (score->parsed()) {
            peerfx::run_score(cfg);
        } else if (estimate->parsed()) {
            const peerfx::ScoreStage st = peerfx::load_scored_stage(cfg);
            peerfx::run_estimate(cfg, st);
        } else if (validate->parsed()) {
            const peerfx::ScoreStage st = peerfx::load_scored_stage(cfg);
            peerfx::run_validate(cfg, st);
        } else if (accept->parsed()) {
            peerfx::AcceptanceOptions opt;
            opt.seed = cfg.seed;
            opt.jobs = cfg.jobs;
            opt.data_dir = cfg.data_dir;
            const auto results = peerfx::run_acceptance(opt);
            const int rc = peerfx::print_acceptance(results, std::cout);
            return rc == 0 ? 0 : 4;
        }
        return 0;
    } catch (const peerfx::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const peerfx::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const peerfx::Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
