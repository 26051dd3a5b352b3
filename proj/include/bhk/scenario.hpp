#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bhk/config.hpp"
#include "bhk/integrator.hpp"
#include "bhk/stationary.hpp"

namespace bhk {

constexpr const char* kVersion = "0.1.0";

// Everything needed to evaluate C[W] for one (grid, dispersion, potential).
struct Model {
    BrillouinGrid grid;
    Dispersion disp;
    PairPotential pot;
    std::optional<CollisionQuadrature> quad;
    std::optional<CollisionOperator> op;
};

Model make_model(const ScenarioConfig& cfg, double eta, const PairPotential& pot);

struct Prediction {
    WignerField state;
    std::optional<NonthermalProfile> profile;
    std::optional<ThermalParams> thermal;
    SolveReport report;
};

// eta == 0: nonthermal profile; otherwise the thermal state on the configured branch.
Prediction predict_stationary(const ConservedCharges& c, const Dispersion& disp, ThermalBranch branch);

// Fit window: [t0, t1] when given, else the second half of [0, t_c] with t_c the first sample where
// offdiag <= floor * offdiag(0) (the last sample if never).
DecayFit fit_offdiag_decay(const TrajectoryRecord& rec, double t0, double t1, double floor, double* win_lo = nullptr,
                           double* win_hi = nullptr);

// First sample time with |S_target - S(t)| <= frac * |S_target - S(0)|; negative if never reached.
double time_to_entropy(const TrajectoryRecord& rec, double s_target, double frac = 0.01);

// Runs the configured scenario, writes all outputs and run_meta.json. Returns the process exit status.
int run_scenario(const ScenarioConfig& cfg, nlohmann::json* meta_out = nullptr);

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string message;
};

// Dry-run checks; no time stepping.
std::vector<ValidationCheck> validate_scenario(const ScenarioConfig& cfg);

}  // namespace bhk
