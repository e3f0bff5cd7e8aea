// exsur: command-line front end for the excursion-volume experiments.
//
//   exsur run      --config FILE [--out DIR] [--seed N] [--threads N]
//   exsur compare  --config FILE [--out DIR] [--seed N] [--threads N]
//   exsur simulate --config FILE [--out DIR] [--seed N]
//   exsur estimate --config FILE --design CSV [--out DIR] [--seed N]
//
// Errors are reported on stderr as one JSON line; the exit code is 2 for
// configuration and I/O problems and 3 for numerical failures.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "exsur/harness/commands.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Overrides& o, bool threads) {
    cmd->add_option("-c,--config", o.config, "experiment configuration (INI)")->required();
    cmd->add_option("-o,--out", o.out, "output directory (overrides [output] dir)");
    cmd->add_option("-s,--seed", o.seed, "run a single seed instead of [experiment] seeds");
    if (threads) cmd->add_option("-t,--threads", o.threads, "worker threads for the criterion")->check(CLI::Range(1U, 1024U));
}

exsur::harness::ExperimentConfig resolve(const Overrides& o) {
    auto cfg = exsur::harness::load_config(o.config);
    if (o.out) cfg.output_dir = *o.out;
    if (o.seed) cfg.seeds = {*o.seed};
    if (o.threads) cfg.threads = *o.threads;
    return cfg;
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const exsur::ConfigError*>(&e) || dynamic_cast<const exsur::IoError*>(&e)) return 2;
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Excursion volume estimation with intrinsic Kriging and SUR designs", "exsur"};
    app.set_version_flag("--version", std::string(exsur::harness::kVersion));
    app.require_subcommand(1);

    Overrides run_o, cmp_o, sim_o, est_o;
    std::string design_path;
    auto* run = app.add_subcommand("run", "run the scenario named in the configuration");
    add_common(run, run_o, true);
    auto* cmp = app.add_subcommand("compare", "compare design strategies on paired seeds");
    add_common(cmp, cmp_o, true);
    auto* sim = app.add_subcommand("simulate", "write the seeded true functions on the truth grid");
    add_common(sim, sim_o, false);
    auto* est = app.add_subcommand("estimate", "plug-in volume from an existing design");
    add_common(est, est_o, false);
    est->add_option("-d,--design", design_path, "design CSV (x_1..x_d,f[,noise])")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        nlohmann::json j{{"error", "UsageError"}, {"message", e.what()}};
        std::cerr << j.dump() << '\n';
        return 2;
    }

    try {
        nlohmann::ordered_json summary;
        if (*run) summary = exsur::harness::cmd_run(resolve(run_o));
        else if (*cmp) summary = exsur::harness::cmd_compare(resolve(cmp_o));
        else if (*sim) summary = exsur::harness::cmd_simulate(resolve(sim_o));
        else summary = exsur::harness::cmd_estimate(resolve(est_o), design_path);
        std::cout << summary.dump() << '\n';
    } catch (const std::exception& e) {
        std::cerr << exsur::harness::error_line(e) << '\n';
        return exit_code(e);
    }
    return 0;
}
