#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "bhk/collision.hpp"
#include "bhk/grid.hpp"
#include "bhk/stationary.hpp"

namespace bhk {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Scenario { Relax, ComparePotentials, NegativeTemperature, Prethermalization, StationaryOnly, OracleSuite };

Scenario scenario_from_name(const std::string& name);
std::string to_string(Scenario s);

struct ScenarioConfig {
    Scenario scenario = Scenario::Relax;
    std::uint64_t seed = 12345;

    int n = 1;
    int grid_points = 64;
    double eta = 0.0;
    std::string potential = "onsite";
    std::vector<double> potential_table;

    InitialStateParams initial = InitialStateParams::defaults(1);
    double tol_psd = 1e-12;

    CollisionConfig collision;
    std::string cache_dir;

    double t_end = 1.0;
    double dt = 5e-4;
    int sample_every = 20;
    std::vector<double> snapshot_times;
    double psd_reject = 1e-6;
    double stationarity_tol = 0.0;

    ThermalBranch thermal_branch = ThermalBranch::Auto;
    // Decay-fit window; t1 <= t0 selects the second half of the pre-convergence interval.
    double fit_t0 = 0.0;
    double fit_t1 = 0.0;
    // Relative off-diagonal level that marks convergence for the automatic fit window.
    double fit_floor = 1e-10;
    // "initial" takes charges from the initial state; "explicit" uses eps/h below.
    std::string charges_source = "initial";
    std::vector<double> explicit_eps;
    std::vector<double> explicit_h;

    std::string output_dir = "out";

    int dim() const { return 2 * n + 1; }
    PairPotential make_potential() const;
    // Throws ConfigError naming the first violated constraint.
    void validate() const;
    nlohmann::json to_json() const;
};

// Reads an INI file; unknown sections or keys are rejected. No validation is done here.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& text);

// Comma or whitespace separated list of reals.
std::vector<double> parse_real_list(const std::string& s);

}  // namespace bhk
