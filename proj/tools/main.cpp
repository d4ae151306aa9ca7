// Command-line front end. Talks to the simulator exclusively through the
// public C API so it exercises the same surface as any other embedder.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "packsim.h"

namespace {

int exit_code_for(packsim_status status) {
    switch (status) {
        case PACKSIM_OK:
            return 0;
        case PACKSIM_ERROR_CONFIG:
        case PACKSIM_ERROR_INVALID:
            return 2;
        case PACKSIM_ERROR_STABILITY:
            return 3;
        case PACKSIM_ERROR_INFEASIBLE:
            return 4;
        default:
            return 1;
    }
}

int report(packsim_status status) {
    if (status != PACKSIM_OK) {
        std::fprintf(stderr, "error: %s\n", packsim_last_error());
    }
    return exit_code_for(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"packsim: deterministic dual-chemistry battery pack simulator"};
    app.set_version_flag("--version", std::string(packsim_version()));
    app.require_subcommand(1);

    bool seedless = false;
    app.add_flag("--seedless", seedless,
                 "Reserved; every run is already deterministic (no RNG anywhere)");

    std::string config_path;
    std::string out_dir;
    int workers = 1;

    auto* simulate = app.add_subcommand("simulate", "Run one simulation from a config file");
    simulate->add_option("--config", config_path, "JSON config file")->required();
    simulate->add_option("--out", out_dir, "Output directory")->required();

    auto* figures = app.add_subcommand("figures", "Write the reference figure CSVs");
    figures->add_option("--out", out_dir, "Output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "Run the parameter sweep from the config");
    sweep->add_option("--config", config_path, "JSON config file with a sweep block")->required();
    sweep->add_option("--out", out_dir, "Output directory")->required();
    sweep->add_option("--workers", workers, "Parallel simulation workers")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    if (simulate->parsed()) {
        return report(packsim_run_simulate(config_path.c_str(), out_dir.c_str()));
    }
    if (figures->parsed()) {
        return report(packsim_run_figures(out_dir.c_str()));
    }
    return report(packsim_run_sweep(config_path.c_str(), out_dir.c_str(), workers));
}
