#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "run.hpp"
#include "run_config.hpp"

using namespace snep::cli;

int main(int argc, char** argv) {
    CLI::App app{"Stochastic Nash equilibria by discretized variational inequalities"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode;
    std::string out;
    unsigned threads = 0;
    bool dump = false;

    CLI::App* solve = app.add_subcommand("solve", "Run a configured experiment");
    solve->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    solve->add_option("--mode", mode, "deterministic, discretize, oracle or ladder (overrides run.mode)");
    solve->add_option("--out", out, "Output directory (overrides run.out)");
    solve->add_option("--threads", threads, "Worker threads (overrides run.threads)")->check(CLI::PositiveNumber);
    solve->add_flag("--dump-config", dump, "Print the normalized configuration and exit");

    CLI11_PARSE(app, argc, argv);

    RunConfig config;
    try {
        config = load_run_config(config_path);
        if (!mode.empty()) config.run.mode = parse_mode(mode);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfigError;
    }
    if (!out.empty()) config.run.out = out;
    if (threads) config.run.threads = threads;

    if (dump) {
        std::cout << to_json(config).dump(2) << '\n';
        return kExitOk;
    }

    std::cerr << "mode " << to_string(config.run.mode) << ", " << config.run.threads << " thread(s)\n";
    const RunOutcome outcome = run(config, std::cout);
    for (const auto& f : outcome.files) std::cerr << "wrote " << f.string() << '\n';
    return outcome.exit_code;
}
