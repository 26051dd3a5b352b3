#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bhk {

using cd = std::complex<double>;

// d = 2n+1 is capped so small matrices stay on the stack.
constexpr int kMaxDim = 7;

using CMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using RVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using MatrixField = std::vector<CMatrix>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Map any real momentum onto [-1/2, 1/2).
double wrap_momentum(double k);

// Interpolation stencil: up to four grid indices with Lagrange weights.
struct Stencil {
    int idx[4] = {0, 0, 0, 0};
    double w[4] = {0, 0, 0, 0};
    int count = 0;
};

class BrillouinGrid {
public:
    BrillouinGrid() = default;
    explicit BrillouinGrid(int n_points);

    int size() const { return n_; }
    double dk() const { return 1.0 / n_; }
    double k(int j) const { return -0.5 + static_cast<double>(j) / n_; }
    int wrap(int j) const { return ((j % n_) + n_) % n_; }

    // Index of 1/2 - k_j (mod 1).
    int reflect(int j) const { return wrap(3 * n_ / 2 - j); }
    // Index of k_j + 1/2 (mod 1).
    int shift_half(int j) const { return wrap(j + n_ / 2); }
    // Index of -k_j (mod 1).
    int negate(int j) const { return wrap(n_ - j); }
    // Index of k_a + k_b - k_c (mod 1), exact on the grid.
    int combine(int a, int b, int c) const { return wrap(a + b - c); }

    // Nearest grid index if k lies on the grid within tol, else -1.
    int on_grid(double k, double tol = 1e-12) const;

    // Four-point periodic Lagrange stencil; collapses to one point on the grid.
    Stencil stencil(double k) const;

    bool operator==(const BrillouinGrid& o) const { return n_ == o.n_; }

private:
    int n_ = 0;
};

struct Dispersion {
    double eta = 0.0;

    double omega(double k) const;
    double domega(double k) const;
    double max_abs_domega() const;
    double min_omega() const;
    double max_omega() const;
};

class PairPotential {
public:
    enum class Kind { Onsite, InverseCosine, Tabulated };

    static PairPotential onsite();
    static PairPotential inverse_cosine();
    // values[j] = V(k_j) on a uniform grid with k_0 = -1/2; made even by averaging with V(-k).
    static PairPotential tabulated(const std::vector<double>& values);
    static PairPotential from_name(const std::string& name);

    double operator()(double k) const;
    Kind kind() const { return kind_; }
    std::string name() const;
    const std::vector<double>& table() const { return table_; }

private:
    Kind kind_ = Kind::Onsite;
    std::vector<double> table_;
};

class HermitianMatrix {
public:
    HermitianMatrix() = default;
    explicit HermitianMatrix(const CMatrix& m);

    int dim() const { return static_cast<int>(m_.rows()); }
    const CMatrix& matrix() const { return m_; }
    double min_eigenvalue() const;
    bool is_psd(double tol) const { return min_eigenvalue() >= -tol; }

private:
    CMatrix m_;
};

struct SpectralDecomposition {
    RVector values;   // descending
    CMatrix vectors;  // columns are eigenvectors
};

SpectralDecomposition eigendecompose(const HermitianMatrix& m);
SpectralDecomposition eigendecompose(const CMatrix& m);

// Hermitian part (M + M^dagger)/2.
inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

class WignerField {
public:
    WignerField() = default;
    WignerField(const BrillouinGrid& grid, int dim, double t = 0.0);
    WignerField(const BrillouinGrid& grid, MatrixField values, double t = 0.0);

    const BrillouinGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    int size() const { return grid_.size(); }
    double time() const { return t_; }
    void set_time(double t) { t_ = t; }

    const CMatrix& operator[](int j) const { return values_[j]; }
    const MatrixField& values() const { return values_; }
    void set(int j, const CMatrix& m) { values_[j] = hermitian_part(m); }

    // Off-grid value from the cubic stencil.
    CMatrix at(double k) const;

    double min_eigenvalue() const;
    // Throws DomainError naming the first k with eigenvalue below -tol.
    void require_psd(double tol) const;
    double max_adjacent_jump() const;

    WignerField shifted_half() const;
    // U^dagger W U at every k.
    WignerField conjugated(const CMatrix& u) const;

private:
    BrillouinGrid grid_;
    int dim_ = 0;
    double t_ = 0.0;
    MatrixField values_;
};

double hs_inner(const WignerField& a, const WignerField& b);
double hs_norm(const WignerField& a);
double hs_distance(const WignerField& a, const WignerField& b);

struct InitialStateParams {
    std::vector<double> offset;     // c_sigma
    std::vector<double> amplitude;  // b_sigma
    std::vector<double> phase;      // phi_sigma
    double rho = 0.2;
    bool shift_half = false;

    static InitialStateParams defaults(int n);
};

// Diagonal d_s(k) = c_s + b_s cos(2 pi k + phi_s); entry (0,-1) is rho cos(2 pi k) e^{2 pi i k}.
WignerField build_initial_state(const BrillouinGrid& grid, int n, const InitialStateParams& p,
                                double tol_psd = 1e-12);

// Component index of spin label sigma in {n, ..., -n}.
inline int component_index(int n, int sigma) { return n - sigma; }

}  // namespace bhk
