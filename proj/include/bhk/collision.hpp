#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bhk/grid.hpp"

namespace bhk {

enum class CollisionMode { RootResolved, Mollified };

CollisionMode collision_mode_from_name(const std::string& name);
std::string to_string(CollisionMode m);

struct CollisionConfig {
    CollisionMode mode = CollisionMode::RootResolved;
    double tol_root = 1e-12;
    // Roots with |g'| below this are dropped (tangential crossings).
    double g_min = 1e-3;
    // Mollifier width eps = c_moll * dk * max|omega'|.
    double c_moll = 2.0;
    // Principal-value width eps_pv = c_pv * dk * max|omega'|.
    double c_pv = 4.0;
    bool include_vlasov = true;
    int scan_factor = 8;

    void validate() const;
    double mollifier_width(const BrillouinGrid& g, const Dispersion& d) const;
    double pv_width(const BrillouinGrid& g, const Dispersion& d) const;
};

struct EnergyRoot {
    double k3 = 0.0;
    double gprime = 0.0;
    double weight() const;
};

struct RootSet {
    std::vector<EnergyRoot> roots;
    bool degenerate = false;
    int dropped = 0;  // |g'| < g_min
};

// g(k3) = omega(k1) - omega(k2) + omega(k3) - omega(k1 - k2 + k3).
double energy_mismatch(const Dispersion& disp, double k1, double k2, double k3);

RootSet resolve_energy_delta(const Dispersion& disp, const BrillouinGrid& grid, double k1, double k2,
                             const CollisionConfig& cfg);

// All roots for the canonical grid pairs i1 < i2 (the diagonal i1 == i2 is the degenerate line).
// Weights are stored unfiltered; g_min is applied by the consumer.
class CollisionQuadrature {
public:
    static CollisionQuadrature build(const BrillouinGrid& grid, const Dispersion& disp, double tol_root,
                                     int scan_factor = 8);

    const BrillouinGrid& grid() const { return grid_; }
    double eta() const { return eta_; }
    double tol_root() const { return tol_root_; }

    std::size_t pair_count() const { return offset_.empty() ? 0 : offset_.size() - 1; }
    std::size_t root_count() const { return k3_.size(); }
    // Range of roots of canonical pair p.
    std::size_t begin(std::size_t p) const { return offset_[p]; }
    std::size_t end(std::size_t p) const { return offset_[p + 1]; }
    double root(std::size_t r) const { return k3_[r]; }
    double weight(std::size_t r) const { return weight_[r]; }
    // Canonical pair index for i1 < i2.
    std::size_t pair_index(int i1, int i2) const;

    static std::uint64_t cache_key(int n, double eta, double tol_root);
    void save(const std::string& path) const;
    static CollisionQuadrature load(const std::string& path);
    // Reads dir/quad_<key>.bin when present, otherwise builds and writes it.
    static CollisionQuadrature load_or_build(const std::string& dir, const BrillouinGrid& grid,
                                             const Dispersion& disp, double tol_root, int scan_factor = 8);

private:
    BrillouinGrid grid_;
    double eta_ = 0.0;
    double tol_root_ = 0.0;
    std::vector<std::uint64_t> offset_;
    std::vector<double> k3_;
    std::vector<double> weight_;
};

// Kernel pieces; u = V(k3 - k4) = V(k1 - k2), v = V(k2 - k3).
CMatrix eval_A_quad(const CMatrix& w1, const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double v23,
                    double v34);
CMatrix eval_A_tr(const CMatrix& w1, const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double v34);
// A[W]_{1234} before adding its adjoint.
CMatrix eval_A(const CMatrix& w1, const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double v23,
               double v34);
// Gain part of A + A^dagger.
CMatrix eval_gain_term(const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double v23, double v34);
// Gain term averaged over the k2 <-> k4 exchange (PSD for PSD inputs).
CMatrix eval_gain_symmetrized(const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double v23, double v34);

struct CollisionDiagnostics {
    std::size_t quadruples = 0;
    std::size_t dropped_roots = 0;
    std::size_t degenerate_pairs = 0;
};

class CollisionOperator {
public:
    CollisionOperator(const BrillouinGrid& grid, const Dispersion& disp, const PairPotential& pot,
                      const CollisionQuadrature* quad, const CollisionConfig& cfg);

    MatrixField eval_Cd(const WignerField& w) const;
    MatrixField eval_Cc(const WignerField& w) const;
    MatrixField eval_C(const WignerField& w) const;
    // Effective Hamiltonian of the Vlasov term.
    MatrixField eval_Heff(const WignerField& w) const;
    // Reference Vlasov term from -i sum p (A - A^dagger), O(N^3) per call.
    MatrixField eval_Cc_direct(const WignerField& w) const;
    // Gain part of C_d gathered at grid momenta only (positive weights).
    MatrixField eval_gain(const WignerField& w) const;

    const CollisionDiagnostics& diagnostics() const { return diag_; }
    const CollisionConfig& config() const { return cfg_; }
    const BrillouinGrid& grid() const { return grid_; }
    const Dispersion& dispersion() const { return disp_; }
    const PairPotential& potential() const { return pot_; }

private:
    struct Quadruple {
        int i1, i2;
        Stencil s3, s4;
        double u, v, coef;
    };

    MatrixField eval_Cd_roots(const WignerField& w) const;
    template <int D>
    MatrixField eval_Cd_roots_fixed(const WignerField& w) const;
    MatrixField eval_Cd_mollified(const WignerField& w) const;
    void build_vlasov_tables();
    double pv_weight(int i1, int i2, int i3) const;

    BrillouinGrid grid_;
    Dispersion disp_;
    PairPotential pot_;
    CollisionConfig cfg_;
    std::vector<Quadruple> quads_;
    CollisionDiagnostics diag_;
    double eps_moll_ = 0.0;
    double eps_pv_ = 0.0;
    std::vector<double> omega_;

    // Vlasov coefficient tables.
    Eigen::MatrixXd prod_coef_;   // N x N^2, coefficient of W_a W_b
    Eigen::MatrixXd lin_coef_;    // N x N, coefficient of W_{k3}
    Eigen::MatrixXd trace_coef_;  // N^2 x N, row k1*N+k4, column a: coefficient of tr W_a times W_{k4}
};

// Free-function forms for one-off evaluation.
MatrixField eval_Cd(const WignerField& w, const Dispersion& disp, const PairPotential& pot,
                    const CollisionQuadrature& quad, const CollisionConfig& cfg);
MatrixField eval_Cc(const WignerField& w, const Dispersion& disp, const PairPotential& pot,
                    const CollisionConfig& cfg);
MatrixField eval_C(const WignerField& w, const Dispersion& disp, const PairPotential& pot,
                   const CollisionQuadrature& quad, const CollisionConfig& cfg);

// Field arithmetic helpers.
double field_hs_norm(const MatrixField& f, double dk);
CMatrix field_integral(const MatrixField& f, double dk);

}  // namespace bhk
