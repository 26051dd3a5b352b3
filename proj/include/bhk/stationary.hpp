#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhk/grid.hpp"
#include "bhk/observables.hpp"

namespace bhk {

// f on the full grid with f(1/2 - k) = -f(k); a_sigma in the order of the conserved basis.
struct NonthermalProfile {
    BrillouinGrid grid;
    std::vector<double> f;
    std::vector<double> a;

    // f(k) is sampled on the grid; the caller supplies an odd-under-reflection function.
    static NonthermalProfile from_function(const BrillouinGrid& grid, const std::function<double(double)>& fn,
                                           const std::vector<double>& a);
    bool feasible() const;
};

struct ThermalParams {
    double beta = 0.0;
    std::vector<double> mu;
    // b_sigma = beta * mu_sigma; stays finite as beta -> 0.
    std::vector<double> b;
};

// Reflection orbit representatives |k| < 1/4 carry f; the fixed points +-1/4 have f = 0 and half weight.
struct ReflectionOrbits {
    std::vector<int> reps;   // |k| < 1/4
    std::vector<int> fixed;  // k = +-1/4 when on the grid
    explicit ReflectionOrbits(const BrillouinGrid& g);
};

struct FreeEnergyValue {
    double value = 0.0;
    Eigen::VectorXd gradient;  // [a_0..a_{d-1}, f(reps)]
    Eigen::MatrixXd hessian;
};

// H(f, a) = dk sum_{k in I} sum_sigma -log(cosh a_sigma - cosh f(k)).
FreeEnergyValue free_energy(const NonthermalProfile& p, bool with_hessian = true);

// Stationary-state charges (h, eps) for a nonthermal profile.
struct StationaryCharges {
    std::vector<double> h;
    std::vector<double> eps;
};
StationaryCharges nonthermal_forward(const NonthermalProfile& p);
StationaryCharges thermal_forward(const ThermalParams& t, const BrillouinGrid& grid, const Dispersion& disp,
                                  double* energy = nullptr);

struct SolverOptions {
    double grad_tol = 1e-10;
    int max_iter = 200;
};

struct SolveReport {
    int iterations = 0;
    double gradient_norm = 0.0;
    double residual = 0.0;
};

NonthermalProfile solve_nonthermal(const ConservedCharges& c, const SolverOptions& opt = {},
                                   SolveReport* report = nullptr);

enum class ThermalBranch { Auto, Positive, Negative };
ThermalBranch thermal_branch_from_name(const std::string& s);

ThermalParams solve_thermal(const ConservedCharges& c, const Dispersion& disp,
                            ThermalBranch branch = ThermalBranch::Auto, const SolverOptions& opt = {},
                            SolveReport* report = nullptr);

WignerField build_be_state(const NonthermalProfile& p, const CMatrix& basis);
WignerField build_be_state(const ThermalParams& t, const BrillouinGrid& grid, const Dispersion& disp,
                           const CMatrix& basis);

}  // namespace bhk
