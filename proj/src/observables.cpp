#include "bhk/observables.hpp"

#include <cmath>
#include <sstream>

#include "bhk/parallel.hpp"

namespace bhk {

ConservedCharges charges(const WignerField& w, const Dispersion& disp) {
    const auto& g = w.grid();
    const double dk = g.dk();
    ConservedCharges c;
    c.grid = g;
    CMatrix s = CMatrix::Zero(w.dim(), w.dim());
    double e = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        s += w[j];
        e += disp.omega(g.k(j)) * w[j].trace().real();
    }
    c.spin_matrix = HermitianMatrix(s * dk);
    c.energy = e * dk;
    c.h_profile.resize(g.size());
    for (int j = 0; j < g.size(); ++j) c.h_profile[j] = w[j].trace().real() - w[g.reflect(j)].trace().real();
    auto sd = eigendecompose(c.spin_matrix);
    c.eps = sd.values;
    c.basis = sd.vectors;
    return c;
}

ConservedCharges charges_from_profile(const BrillouinGrid& grid, const std::vector<double>& h,
                                      const std::vector<double>& eps, double energy) {
    if (static_cast<int>(h.size()) != grid.size()) throw DomainError("h profile size does not match grid");
    ConservedCharges c;
    c.grid = grid;
    const int d = static_cast<int>(eps.size());
    c.eps.resize(d);
    CMatrix s = CMatrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        c.eps(i) = eps[i];
        s(i, i) = eps[i];
    }
    c.spin_matrix = HermitianMatrix(s);
    c.basis = CMatrix::Identity(d, d);
    c.h_profile = h;
    c.energy = energy;
    return c;
}

namespace {
double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }
}  // namespace

double entropy(const WignerField& w, double tol_psd) {
    const auto& g = w.grid();
    double s = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        auto sd = eigendecompose(w[j]);
        for (int i = 0; i < w.dim(); ++i) {
            double l = sd.values(i);
            if (l < -tol_psd) {
                std::ostringstream os;
                os << "entropy: eigenvalue " << l << " at k=" << g.k(j) << " is outside the physical cone";
                throw DomainError(os.str());
            }
            l = std::max(l, 0.0);
            s += xlogx(1.0 + l) - xlogx(l);
        }
    }
    return s * g.dk();
}

double entropy_production(const WignerField& w, const MatrixField& c, double lambda_floor) {
    const auto& g = w.grid();
    if (static_cast<int>(c.size()) != g.size()) throw DomainError("entropy_production: size mismatch");
    double s = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        auto sd = eigendecompose(w[j]);
        const int d = w.dim();
        RVector lg(d);
        for (int i = 0; i < d; ++i) {
            double l = sd.values(i);
            if (l < lambda_floor) {
                std::ostringstream os;
                os << "entropy_production: eigenvalue " << l << " at k=" << g.k(j)
                   << " is below the floor; use a mollified entropy (lambda -> lambda + floor)";
                throw DomainError(os.str());
            }
            lg(i) = std::log1p(l) - std::log(l);
        }
        CMatrix m = sd.vectors * lg.asDiagonal() * sd.vectors.adjoint();
        s += (m * c[j]).trace().real();
    }
    return s * g.dk();
}

double entropy_production(const WignerField& w, const Dispersion& disp, const PairPotential& pot,
                          const CollisionQuadrature& quad, const CollisionConfig& cfg) {
    return entropy_production(w, eval_C(w, disp, pot, quad, cfg));
}

double offdiag_norm(const WignerField& w, const CMatrix& basis) {
    double s = 0.0;
    for (int j = 0; j < w.size(); ++j) {
        CMatrix m = basis.adjoint() * w[j] * basis;
        for (int a = 0; a < w.dim(); ++a)
            for (int b = 0; b < w.dim(); ++b)
                if (a != b) s += std::norm(m(a, b));
    }
    return std::sqrt(s * w.grid().dk());
}

DecayFit fit_decay_rate(const std::vector<std::pair<double, double>>& series, int min_samples) {
    DecayFit out;
    out.samples = static_cast<int>(series.size());
    if (out.samples < min_samples) {
        throw DomainError("fit_decay_rate: need at least " + std::to_string(min_samples) + " samples, got " +
                          std::to_string(out.samples));
    }
    double st = 0, sy = 0;
    for (const auto& [t, v] : series) {
        if (!(v > 0.0)) throw DomainError("fit_decay_rate: nonpositive value in fit window");
        st += t;
        sy += std::log(v);
    }
    const double n = out.samples;
    const double tm = st / n, ym = sy / n;
    double stt = 0, sty = 0, syy = 0;
    for (const auto& [t, v] : series) {
        double dt = t - tm, dy = std::log(v) - ym;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if (stt <= 0.0) throw DomainError("fit_decay_rate: all samples at the same time");
    const double slope = sty / stt;
    out.rate = -slope;
    if (syy <= 0.0) {
        out.rate = 0.0;
        out.r_squared = 0.0;
        return out;
    }
    double ssr = 0;
    for (const auto& [t, v] : series) {
        double r = std::log(v) - (ym + slope * (t - tm));
        ssr += r * r;
    }
    out.r_squared = 1.0 - ssr / syy;
    return out;
}

}  // namespace bhk
