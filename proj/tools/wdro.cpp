// Command-line front end: `wdro run <config>` and `wdro verify <suite>`.

#include <iostream>

#include "CLI11.hpp"
#include "wdro/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Pareto-optimal standard / adversarial risk tradeoffs under Wasserstein shifts"};
    app.set_version_flag("--version", wdro::cli::kVersion);
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the verb

    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out_path;
    CLI::Option* seed_opt = app.add_option("--seed", seed, "Override the configuration seed")->check(CLI::NonNegativeNumber);
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    CLI::Option* out_opt = app.add_option("--out", out_path, "Override the CSV output path");

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "Run the sweep described by a JSON configuration");
    run->add_option("config", config_path, "Configuration file")->required();

    std::string suite;
    CLI::App* verify = app.add_subcommand("verify", "Run oracle checks: duality, lemma1, gradients or all");
    verify->add_option("suite", suite, "Suite name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wdro::cli::kExitInvalidConfig;
    }

    try {
        if (*run) {
            wdro::cli::RunOverrides o;
            if (*seed_opt) o.seed = seed;
            if (*out_opt) o.out = out_path;
            o.jobs = jobs;
            return wdro::cli::run_command(config_path, o, std::cout, std::cerr);
        }
        return wdro::cli::verify_command(suite, *seed_opt ? seed : 20240601, jobs, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return wdro::cli::kExitSolverFailure;
    }
}
