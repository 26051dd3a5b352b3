// bhkin: scenario runner for the matrix-valued Boltzmann kinetics of the spin-n Bose-Hubbard chain.
#include <iostream>

#include "CLI11.hpp"

#include "bhk/config.hpp"
#include "bhk/parallel.hpp"
#include "bhk/scenario.hpp"

namespace {

struct Common {
    std::string config;
    std::string out;
    int threads = 1;
    long long seed = -1;
};

void add_common(CLI::App* cmd, Common& c, bool need_config) {
    auto* opt = cmd->add_option("--config", c.config, "INI configuration file");
    if (need_config) opt->required();
    opt->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "output directory (overrides [output] dir)");
    cmd->add_option("--threads", c.threads, "worker threads for collision evaluation")->check(CLI::Range(1, 1024));
    cmd->add_option("--seed", c.seed, "RNG seed (overrides [scenario] seed)")->check(CLI::NonNegativeNumber);
}

bhk::ScenarioConfig resolve(const Common& c) {
    bhk::ScenarioConfig cfg = c.config.empty() ? bhk::ScenarioConfig{} : bhk::load_config(c.config);
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
    bhk::set_num_threads(c.threads);
    return cfg;
}

int report_run(const bhk::ScenarioConfig& cfg) {
    nlohmann::json meta;
    const int status = bhk::run_scenario(cfg, &meta);
    if (status != 0) {
        std::cerr << "bhkin: " << meta.value("error", std::string("run failed")) << '\n';
        std::cerr << "bhkin: partial outputs in " << cfg.output_dir << '\n';
    } else {
        std::cout << "scenario " << bhk::to_string(cfg.scenario) << " finished in " << meta["wall_seconds"]
                  << " s; outputs in " << cfg.output_dir << '\n';
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matrix-valued Boltzmann kinetics for the Bose-Hubbard chain"};
    app.require_subcommand(1);
    app.set_version_flag("--version", bhk::kVersion);

    Common run_opts, val_opts, st_opts, or_opts;
    auto* run = app.add_subcommand("run", "run the configured scenario");
    add_common(run, run_opts, true);
    auto* validate = app.add_subcommand("validate", "dry-run checks without time stepping");
    add_common(validate, val_opts, true);
    auto* stationary = app.add_subcommand("stationary", "solve for the predicted stationary state only");
    add_common(stationary, st_opts, false);
    auto* oracle = app.add_subcommand("oracle", "run the quasi-free Wick/permanent oracle suite");
    add_common(oracle, or_opts, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return report_run(resolve(run_opts));
        if (*stationary) {
            auto cfg = resolve(st_opts);
            cfg.scenario = bhk::Scenario::StationaryOnly;
            return report_run(cfg);
        }
        if (*oracle) {
            auto cfg = resolve(or_opts);
            cfg.scenario = bhk::Scenario::OracleSuite;
            return report_run(cfg);
        }
        if (*validate) {
            auto cfg = resolve(val_opts);
            auto checks = bhk::validate_scenario(cfg);
            bool ok = true;
            for (const auto& c : checks) {
                std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.message << '\n';
                ok = ok && c.passed;
            }
            return ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "bhkin: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
