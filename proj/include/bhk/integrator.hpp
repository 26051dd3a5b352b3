#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bhk/collision.hpp"
#include "bhk/grid.hpp"
#include "bhk/observables.hpp"

namespace bhk {

struct StepOptions {
    double psd_reject = 1e-6;
    // Maximum number of recursive halvings of a rejected step.
    int max_halvings = 12;
};

struct StepInfo {
    int evaluations = 0;
    int rejections = 0;
    double min_eigenvalue = 0.0;
};

// Classical RK4; the result is Hermitized at every k. A step whose result has an eigenvalue
// below -psd_reject is split into two half steps (recursively).
WignerField rk4_step(const WignerField& w, double dt, const CollisionOperator& op, const StepOptions& opt = {},
                     StepInfo* info = nullptr);

// Single RK4 step with no PSD check; k1 may be supplied when already known.
WignerField rk4_step_raw(const WignerField& w, double dt, const CollisionOperator& op,
                         const MatrixField* k1 = nullptr);

struct TrajectorySample {
    double t = 0.0;
    double entropy = 0.0;
    double entropy_production = 0.0;
    double energy = 0.0;
    std::vector<double> eps;
    double h_max_drift = 0.0;
    double hs_dist_to_stationary = 0.0;
    double offdiag_norm = 0.0;
    double min_eig = 0.0;
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    std::vector<WignerField> snapshots;
    int steps = 0;
    int rejections = 0;
    bool stopped_early = false;
};

struct EvolveOptions {
    double t_end = 1.0;
    double dt = 5e-4;
    int sample_every = 20;
    std::vector<double> snapshot_times;
    StepOptions step;
    // Reference for hs_dist_to_stationary; zero distance is recorded when absent.
    const WignerField* stationary = nullptr;
    // Basis for offdiag_norm; the conserved basis of W0 when empty.
    CMatrix basis;
    bool record_production = true;
    // Stop once successive samples differ by less than this in HS norm (0 disables).
    double stationarity_tol = 0.0;
    std::function<void(const WignerField&, const TrajectorySample&)> observer;
};

struct EvolveResult {
    WignerField final_state;
    TrajectoryRecord record;
};

EvolveResult evolve(const WignerField& w0, const CollisionOperator& op, const EvolveOptions& opt);

}  // namespace bhk
