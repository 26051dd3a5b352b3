#include "bhk/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace bhk {

double wrap_momentum(double k) {
    double r = k - std::floor(k + 0.5);
    if (r >= 0.5) r -= 1.0;
    return r;
}

BrillouinGrid::BrillouinGrid(int n_points) : n_(n_points) {
    if (n_points < 8 || n_points % 2 != 0) {
        throw DomainError("grid size must be even and >= 8 so that k -> 1/2 - k maps the grid onto itself (got N=" +
                          std::to_string(n_points) + ")");
    }
}

int BrillouinGrid::on_grid(double k, double tol) const {
    double x = (wrap_momentum(k) + 0.5) * n_;
    double r = std::round(x);
    if (std::abs(x - r) <= tol * n_) return wrap(static_cast<int>(r));
    return -1;
}

Stencil BrillouinGrid::stencil(double k) const {
    Stencil s;
    double x = (wrap_momentum(k) + 0.5) * n_;
    double base = std::floor(x);
    double f = x - base;
    int j0 = static_cast<int>(base);
    if (f < 1e-12 || f > 1.0 - 1e-12) {
        s.count = 1;
        s.idx[0] = wrap(f < 0.5 ? j0 : j0 + 1);
        s.w[0] = 1.0;
        return s;
    }
    s.count = 4;
    for (int m = 0; m < 4; ++m) s.idx[m] = wrap(j0 - 1 + m);
    s.w[0] = -f * (f - 1.0) * (f - 2.0) / 6.0;
    s.w[1] = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
    s.w[2] = -(f + 1.0) * f * (f - 2.0) / 2.0;
    s.w[3] = (f + 1.0) * f * (f - 1.0) / 6.0;
    return s;
}

double Dispersion::omega(double k) const {
    return 1.0 - std::cos(kTwoPi * k) - eta * std::cos(2.0 * kTwoPi * k);
}

double Dispersion::domega(double k) const {
    return kTwoPi * std::sin(kTwoPi * k) + 2.0 * kTwoPi * eta * std::sin(2.0 * kTwoPi * k);
}

namespace {
template <class F>
double scan_extreme(F f, bool want_max) {
    const int m = 20000;
    double best = want_max ? -1e300 : 1e300;
    double kbest = 0.0;
    for (int i = 0; i < m; ++i) {
        double k = -0.5 + static_cast<double>(i) / m;
        double v = f(k);
        if (want_max ? v > best : v < best) {
            best = v;
            kbest = k;
        }
    }
    // golden-section polish around the best sample
    double a = kbest - 1.0 / m, b = kbest + 1.0 / m;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
        double c = b - g * (b - a), d = a + g * (b - a);
        bool left = want_max ? f(c) > f(d) : f(c) < f(d);
        if (left)
            b = d;
        else
            a = c;
    }
    double v = f(0.5 * (a + b));
    return want_max ? std::max(best, v) : std::min(best, v);
}
}  // namespace

double Dispersion::max_abs_domega() const {
    return scan_extreme([this](double k) { return std::abs(domega(k)); }, true);
}

double Dispersion::min_omega() const {
    return scan_extreme([this](double k) { return omega(k); }, false);
}

double Dispersion::max_omega() const {
    return scan_extreme([this](double k) { return omega(k); }, true);
}

PairPotential PairPotential::onsite() { return PairPotential(); }

PairPotential PairPotential::inverse_cosine() {
    PairPotential p;
    p.kind_ = Kind::InverseCosine;
    return p;
}

PairPotential PairPotential::tabulated(const std::vector<double>& values) {
    if (values.size() < 2) throw DomainError("tabulated potential needs at least two values");
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (!(values[j] > 0.0)) {
            std::ostringstream os;
            os << "tabulated potential must be positive; entry " << j << " is " << values[j];
            throw DomainError(os.str());
        }
    }
    PairPotential p;
    p.kind_ = Kind::Tabulated;
    p.table_ = values;
    return p;
}

PairPotential PairPotential::from_name(const std::string& name) {
    if (name == "onsite") return onsite();
    if (name == "inverse-cosine" || name == "inverse_cosine") return inverse_cosine();
    throw DomainError("unknown potential kind '" + name + "'");
}

std::string PairPotential::name() const {
    switch (kind_) {
        case Kind::Onsite:
            return "onsite";
        case Kind::InverseCosine:
            return "inverse-cosine";
        case Kind::Tabulated:
            return "tabulated";
    }
    return "?";
}

double PairPotential::operator()(double k) const {
    switch (kind_) {
        case Kind::Onsite:
            return 1.0;
        case Kind::InverseCosine:
            return 1.0 / (2.0 - std::cos(kTwoPi * k));
        case Kind::Tabulated: {
            const int m = static_cast<int>(table_.size());
            auto lin = [&](double q) {
                double x = (wrap_momentum(q) + 0.5) * m;
                double base = std::floor(x);
                double f = x - base;
                int j = static_cast<int>(base) % m;
                return (1.0 - f) * table_[j] + f * table_[(j + 1) % m];
            };
            return 0.5 * (lin(k) + lin(-k));
        }
    }
    return 1.0;
}

HermitianMatrix::HermitianMatrix(const CMatrix& m) {
    if (m.rows() != m.cols()) throw DomainError("Hermitian matrix must be square");
    m_ = hermitian_part(m);
}

double HermitianMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

SpectralDecomposition eigendecompose(const CMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
    const int d = static_cast<int>(m.rows());
    SpectralDecomposition out;
    out.values.resize(d);
    out.vectors.resize(d, d);
    for (int i = 0; i < d; ++i) {
        out.values(i) = es.eigenvalues()(d - 1 - i);
        Eigen::Matrix<cd, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1> v = es.eigenvectors().col(d - 1 - i);
        for (int r = 0; r < d; ++r) {
            double a = std::abs(v(r));
            if (a > 1e-12) {
                v *= std::conj(v(r)) / a;
                break;
            }
        }
        out.vectors.col(i) = v;
    }
    return out;
}

SpectralDecomposition eigendecompose(const HermitianMatrix& m) { return eigendecompose(m.matrix()); }

WignerField::WignerField(const BrillouinGrid& grid, int dim, double t)
    : grid_(grid), dim_(dim), t_(t), values_(grid.size(), CMatrix::Zero(dim, dim)) {
    if (dim < 1 || dim > kMaxDim) throw DomainError("matrix dimension out of range");
}

WignerField::WignerField(const BrillouinGrid& grid, MatrixField values, double t)
    : grid_(grid), t_(t), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid.size()) throw DomainError("field size does not match grid");
    dim_ = static_cast<int>(values_.front().rows());
    if (dim_ < 1 || dim_ > kMaxDim) throw DomainError("matrix dimension out of range");
    for (auto& m : values_) {
        if (m.rows() != dim_ || m.cols() != dim_) throw DomainError("inconsistent matrix dimensions in field");
        m = hermitian_part(m);
    }
}

CMatrix WignerField::at(double k) const {
    Stencil s = grid_.stencil(k);
    CMatrix out = s.w[0] * values_[s.idx[0]];
    for (int m = 1; m < s.count; ++m) out += s.w[m] * values_[s.idx[m]];
    return out;
}

double WignerField::min_eigenvalue() const {
    double lo = 1e300;
    for (const auto& m : values_) lo = std::min(lo, HermitianMatrix(m).min_eigenvalue());
    return lo;
}

void WignerField::require_psd(double tol) const {
    for (int j = 0; j < size(); ++j) {
        double lo = HermitianMatrix(values_[j]).min_eigenvalue();
        if (lo < -tol) {
            std::ostringstream os;
            os.precision(10);
            os << "field is not positive semidefinite at k=" << grid_.k(j) << " (min eigenvalue " << lo << ")";
            throw DomainError(os.str());
        }
    }
}

double WignerField::max_adjacent_jump() const {
    double jump = 0.0;
    for (int j = 0; j < size(); ++j) {
        jump = std::max(jump, (values_[grid_.wrap(j + 1)] - values_[j]).cwiseAbs().maxCoeff());
    }
    return jump;
}

WignerField WignerField::shifted_half() const {
    MatrixField v(size());
    for (int j = 0; j < size(); ++j) v[j] = values_[grid_.shift_half(j)];
    return WignerField(grid_, std::move(v), t_);
}

WignerField WignerField::conjugated(const CMatrix& u) const {
    MatrixField v(size());
    for (int j = 0; j < size(); ++j) v[j] = u.adjoint() * values_[j] * u;
    return WignerField(grid_, std::move(v), t_);
}

double hs_inner(const WignerField& a, const WignerField& b) {
    if (!(a.grid() == b.grid()) || a.dim() != b.dim()) throw DomainError("hs_inner: shape mismatch");
    double s = 0.0;
    for (int j = 0; j < a.size(); ++j) s += (a[j].adjoint() * b[j]).trace().real();
    return s * a.grid().dk();
}

double hs_norm(const WignerField& a) { return std::sqrt(std::max(0.0, hs_inner(a, a))); }

double hs_distance(const WignerField& a, const WignerField& b) {
    if (!(a.grid() == b.grid()) || a.dim() != b.dim()) throw DomainError("hs_distance: shape mismatch");
    double s = 0.0;
    for (int j = 0; j < a.size(); ++j) s += (a[j] - b[j]).squaredNorm();
    return std::sqrt(s * a.grid().dk());
}

InitialStateParams InitialStateParams::defaults(int n) {
    static const double c[] = {1.2, 1.4, 1.4};
    static const double b[] = {0.4, 0.5, 0.3};
    static const double phi[] = {0.4, -0.3, -0.1};
    InitialStateParams p;
    const int d = 2 * n + 1;
    for (int i = 0; i < d; ++i) {
        p.offset.push_back(c[i % 3]);
        p.amplitude.push_back(b[i % 3]);
        p.phase.push_back(phi[i % 3]);
    }
    p.rho = n > 0 ? 0.2 : 0.0;
    return p;
}

WignerField build_initial_state(const BrillouinGrid& grid, int n, const InitialStateParams& p, double tol_psd) {
    if (n < 0) throw DomainError("spin quantum number must be nonnegative");
    const int d = 2 * n + 1;
    if (d > kMaxDim) throw DomainError("spin quantum number too large");
    if (static_cast<int>(p.offset.size()) != d || static_cast<int>(p.amplitude.size()) != d ||
        static_cast<int>(p.phase.size()) != d) {
        throw DomainError("initial state parameters must have 2n+1 entries each");
    }
    for (int s = 0; s < d; ++s) {
        if (!(p.offset[s] > std::abs(p.amplitude[s])))
            throw DomainError("initial state needs offset > |amplitude| on every diagonal entry");
    }
    if (n == 0 && p.rho != 0.0) throw DomainError("off-diagonal amplitude needs n >= 1");

    MatrixField v(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
        double k = grid.k(j) + (p.shift_half ? 0.5 : 0.0);
        CMatrix m = CMatrix::Zero(d, d);
        for (int s = 0; s < d; ++s) m(s, s) = p.offset[s] + p.amplitude[s] * std::cos(kTwoPi * k + p.phase[s]);
        if (n > 0) {
            cd z = p.rho * std::cos(kTwoPi * k) * std::polar(1.0, kTwoPi * k);
            m(n, n + 1) = z;
            m(n + 1, n) = std::conj(z);
        }
        v[j] = m;
    }
    WignerField w(grid, std::move(v));
    w.require_psd(tol_psd);
    return w;
}

}  // namespace bhk
