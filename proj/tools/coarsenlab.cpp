// coarsenlab <experiment> --config <path> --out <dir> [--seed N] [--refine]

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "coarsen/harness.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Coarsening experiments: Becker-Doring, classical and diffusive LSW"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool refine = false;

    for (const char* name : {"bd", "classical", "diffusive", "sweep", "mc-check", "duality"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_flag("--refine", refine, "rerun at refined resolution");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const auto* sub = app.get_subcommands().front();
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot read " << config_path << "\n";
        return 2;
    }
    std::ostringstream text;
    text << in.rdbuf();

    coarsen::RunOptions options;
    options.out_dir = out_dir;
    options.refine = refine;
    if (sub->count("--seed") > 0) options.seed = seed;

    const auto kind = coarsen::parse_experiment_kind(sub->get_name());
    const auto outcome = coarsen::run_experiment(kind, text.str(), options);
    for (const auto& c : outcome.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  value=" << c.value << " limit=" << c.limit << "\n";
    }
    if (outcome.exit_code == 2) {
        std::cerr << "config error: " << outcome.message << "\n";
    } else if (outcome.exit_code == 3) {
        std::cerr << "solver failure: " << outcome.message << "\n";
    } else if (outcome.exit_code == 1) {
        std::cerr << outcome.message << "\n";
    }
    return outcome.exit_code;
}
