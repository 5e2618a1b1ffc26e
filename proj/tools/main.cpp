#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tomflow/scenario.hpp"
#include "tomflow/threading.hpp"

namespace {

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("TOMFLOW_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tomflow: exact, microscopic and finite-volume solvers for a "
                 "third-order traffic model with dynamic hesitation"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config;
    std::string out = ".";
    int threads = 0;
    app.add_option("--config", config, "scenario configuration file")->required();
    app.add_option("--out", out, "output directory (default: current directory)");
    app.add_option("--threads", threads,
                   "worker threads; falls back to TOMFLOW_THREADS, then 1");

    app.add_subcommand("riemann", "sample the exact Riemann solution");
    app.add_subcommand("fvm", "finite-volume run with optional relaxation source");
    app.add_subcommand("micro", "car-following simulation with density reconstruction");
    app.add_subcommand("analyze", "stability report over a density grid");
    app.add_subcommand("sweep", "relaxation-rate sweep against the equilibrium model");

    CLI11_PARSE(app, argc, argv);

    tomflow::set_threads(resolve_threads(threads));
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        const tomflow::Scenario scenario = tomflow::parse_scenario(config);
        if (scenario.kind != sub) {
            std::cerr << "error: scenario kind '" << scenario.kind
                      << "' does not match subcommand '" << sub << "'\n";
            return 2;
        }
        tomflow::run_scenario(scenario, out);
    } catch (const tomflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tomflow::exit_code_for(e);
    }
    return 0;
}
