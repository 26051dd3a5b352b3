#pragma once

#include <utility>
#include <vector>

#include "bhk/collision.hpp"
#include "bhk/grid.hpp"

namespace bhk {

struct ConservedCharges {
    HermitianMatrix spin_matrix;
    double energy = 0.0;
    std::vector<double> h_profile;  // tr W(k) - tr W(1/2 - k) on the full grid
    RVector eps;                    // eigenvalues of spin_matrix, descending
    CMatrix basis;                  // conserved basis, columns match eps
    BrillouinGrid grid;
};

ConservedCharges charges(const WignerField& w, const Dispersion& disp);

// Charges assembled directly from (h, eps) with a given basis; used by the stationary solvers.
ConservedCharges charges_from_profile(const BrillouinGrid& grid, const std::vector<double>& h,
                                      const std::vector<double>& eps, double energy = 0.0);

constexpr double kLambdaFloor = 1e-12;

double entropy(const WignerField& w, double tol_psd = 1e-10);
double entropy_production(const WignerField& w, const MatrixField& c, double lambda_floor = kLambdaFloor);
double entropy_production(const WignerField& w, const Dispersion& disp, const PairPotential& pot,
                          const CollisionQuadrature& quad, const CollisionConfig& cfg);

// HS norm of the off-diagonal part of W in the given basis.
double offdiag_norm(const WignerField& w, const CMatrix& basis);

struct DecayFit {
    double rate = 0.0;
    double r_squared = 0.0;
    int samples = 0;
};

// Least squares of log(value) against t.
DecayFit fit_decay_rate(const std::vector<std::pair<double, double>>& series, int min_samples = 10);

}  // namespace bhk
