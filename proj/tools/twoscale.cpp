#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "twoscale/harness.hpp"

using namespace twoscale;

int main(int argc, char** argv) {
    CLI::App app{"two-scale coarse-graining experiments"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out, "output directory");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    const std::pair<const char*, const char*> subs[] = {
        {"audit", "constants ledger: kappa, tau, lambda, Lambda, alpha, beta, gamma, C1, C2"},
        {"tabulate", "phi and psi_K tables"},
        {"micro", "hydrodynamic limit: microscopic ensembles against the hydrodynamic solution"},
        {"macro", "coarse-grained ODE trajectories and dissipation"},
        {"hydro", "nonlinear diffusion solver and regularity diagnostics"},
        {"gibbs", "local Gibbs moment and time-integrated channels"},
        {"entropy", "microscopic entropy against the hydrodynamic entropy"},
        {"all", "every experiment"},
    };
    for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (out) cfg.out = *out;
        if (threads) cfg.threads = *threads;
        cfg.validate();

        const std::string which = app.get_subcommands().front()->get_name();
        Harness h(cfg);
        const auto results = h.run(which);
        emit_report(results, h.ledger(), cfg, cfg.out);

        bool ok = true;
        for (const auto& r : results) {
            for (const auto& c : r.checks) {
                std::cout << (c.pass ? "PASS " : "FAIL ") << r.experiment << ' ' << c.name << "  " << c.detail << '\n';
                ok = ok && c.pass;
            }
        }
        std::cout << "ledger " << h.ledger().id_hex() << ", reports in " << cfg.out << '\n';
        return ok ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
