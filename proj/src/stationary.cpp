#include "bhk/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bhk {

NonthermalProfile NonthermalProfile::from_function(const BrillouinGrid& grid,
                                                   const std::function<double(double)>& fn,
                                                   const std::vector<double>& a) {
    NonthermalProfile p;
    p.grid = grid;
    p.a = a;
    p.f.resize(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
        double k = grid.k(j);
        p.f[j] = 0.5 * (fn(k) - fn(0.5 - k));
    }
    return p;
}

bool NonthermalProfile::feasible() const {
    double fmax = 0.0;
    for (double v : f) fmax = std::max(fmax, std::abs(v));
    for (double s : a)
        if (!(s < -fmax)) return false;
    return true;
}

ReflectionOrbits::ReflectionOrbits(const BrillouinGrid& g) {
    for (int j = 0; j < g.size(); ++j) {
        double k = std::abs(g.k(j));
        if (k < 0.25 - 1e-12)
            reps.push_back(j);
        else if (std::abs(k - 0.25) <= 1e-12)
            fixed.push_back(j);
    }
}

namespace {

struct Layout {
    ReflectionOrbits orbits;
    int d;
    int m;
    Layout(const BrillouinGrid& g, int dim) : orbits(g), d(dim), m(static_cast<int>(orbits.reps.size())) {}
    int size() const { return d + m; }
};

void check_feasible_point(double a, double f) {
    if (!(std::cosh(a) > std::cosh(f))) {
        std::ostringstream os;
        os << "free energy: infeasible point (a=" << a << ", f=" << f << ")";
        throw DomainError(os.str());
    }
}

// Per-site contribution -log(cosh a - cosh f) and its derivatives, all times weight.
void accumulate_site(double a, double f, double wgt, int ia, int jf, FreeEnergyValue& out, bool hess) {
    check_feasible_point(a, f);
    const double ca = std::cosh(a), cf = std::cosh(f), sa = std::sinh(a), sf = std::sinh(f);
    const double dd = ca - cf;
    out.value += -wgt * std::log(dd);
    out.gradient(ia) += -wgt * sa / dd;
    if (jf >= 0) out.gradient(jf) += wgt * sf / dd;
    if (hess) {
        const double diag = wgt * (ca * cf - 1.0) / (dd * dd);
        out.hessian(ia, ia) += diag;
        if (jf >= 0) {
            const double off = -wgt * sa * sf / (dd * dd);
            out.hessian(jf, jf) += diag;
            out.hessian(ia, jf) += off;
            out.hessian(jf, ia) += off;
        }
    }
}

FreeEnergyValue free_energy_raw(const Layout& lay, const BrillouinGrid& g, const std::vector<double>& a,
                                const std::vector<double>& frep, bool hess) {
    FreeEnergyValue out;
    out.gradient = Eigen::VectorXd::Zero(lay.size());
    if (hess) out.hessian = Eigen::MatrixXd::Zero(lay.size(), lay.size());
    const double dk = g.dk();
    for (int s = 0; s < lay.d; ++s) {
        for (int r = 0; r < lay.m; ++r) accumulate_site(a[s], frep[r], dk, s, lay.d + r, out, hess);
        for (std::size_t r = 0; r < lay.orbits.fixed.size(); ++r) accumulate_site(a[s], 0.0, 0.5 * dk, s, -1, out, hess);
    }
    return out;
}

}  // namespace

FreeEnergyValue free_energy(const NonthermalProfile& p, bool with_hessian) {
    Layout lay(p.grid, static_cast<int>(p.a.size()));
    std::vector<double> frep(lay.m);
    for (int r = 0; r < lay.m; ++r) frep[r] = p.f[lay.orbits.reps[r]];
    return free_energy_raw(lay, p.grid, p.a, frep, with_hessian);
}

StationaryCharges nonthermal_forward(const NonthermalProfile& p) {
    const auto& g = p.grid;
    StationaryCharges out;
    out.h.assign(g.size(), 0.0);
    out.eps.assign(p.a.size(), 0.0);
    for (std::size_t s = 0; s < p.a.size(); ++s) {
        for (int j = 0; j < g.size(); ++j) {
            const double lam = 1.0 / std::expm1(p.f[j] - p.a[s]);
            out.eps[s] += lam * g.dk();
            out.h[j] += lam;
            out.h[g.reflect(j)] -= lam;
        }
    }
    return out;
}

StationaryCharges thermal_forward(const ThermalParams& t, const BrillouinGrid& grid, const Dispersion& disp,
                                  double* energy) {
    StationaryCharges out;
    out.h.assign(grid.size(), 0.0);
    out.eps.assign(t.b.size(), 0.0);
    double e = 0.0;
    for (std::size_t s = 0; s < t.b.size(); ++s) {
        for (int j = 0; j < grid.size(); ++j) {
            const double w = disp.omega(grid.k(j));
            const double lam = 1.0 / std::expm1(t.beta * w - t.b[s]);
            out.eps[s] += lam * grid.dk();
            out.h[j] += lam;
            out.h[grid.reflect(j)] -= lam;
            e += w * lam * grid.dk();
        }
    }
    if (energy) *energy = e;
    return out;
}

NonthermalProfile solve_nonthermal(const ConservedCharges& c, const SolverOptions& opt, SolveReport* report) {
    const auto& g = c.grid;
    const int d = static_cast<int>(c.eps.size());
    for (int s = 0; s < d; ++s) {
        if (!(c.eps(s) > 0.0))
            throw DomainError("solve_nonthermal: spin eigenvalue " + std::to_string(s) +
                              " is not positive (chemical potential at -infinity)");
    }
    Layout lay(g, d);
    const double dk = g.dk();

    std::vector<double> a(d), frep(lay.m, 0.0);
    for (int s = 0; s < d; ++s) a[s] = -std::log1p(1.0 / c.eps(s));

    auto objective = [&](const std::vector<double>& aa, const std::vector<double>& ff, bool hess) {
        FreeEnergyValue v = free_energy_raw(lay, g, aa, ff, hess);
        for (int s = 0; s < d; ++s) {
            v.value -= (c.eps(s) + 0.5) * aa[s];
            v.gradient(s) -= c.eps(s) + 0.5;
        }
        for (int r = 0; r < lay.m; ++r) {
            const double hk = c.h_profile[lay.orbits.reps[r]];
            v.value += dk * hk * ff[r];
            v.gradient(d + r) += dk * hk;
        }
        return v;
    };
    auto feasible = [&](const std::vector<double>& aa, const std::vector<double>& ff) {
        double fmax = 0.0;
        for (double v : ff) fmax = std::max(fmax, std::abs(v));
        for (double s : aa)
            if (!(s < -fmax)) return false;
        return true;
    };
    auto scaled_norm = [&](const Eigen::VectorXd& gr) {
        double n = 0.0;
        for (int i = 0; i < gr.size(); ++i) n = std::max(n, std::abs(gr(i)) / (i < d ? 1.0 : dk));
        return n;
    };

    int it = 0;
    double gnorm = 0.0;
    for (; it < opt.max_iter; ++it) {
        FreeEnergyValue v = objective(a, frep, true);
        gnorm = scaled_norm(v.gradient);
        if (gnorm <= opt.grad_tol) break;
        Eigen::VectorXd step = v.hessian.ldlt().solve(-v.gradient);
        const double slope = v.gradient.dot(step);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 80; ++h, t *= 0.5) {
            std::vector<double> a2(a), f2(frep);
            for (int s = 0; s < d; ++s) a2[s] += t * step(s);
            for (int r = 0; r < lay.m; ++r) f2[r] += t * step(d + r);
            if (!feasible(a2, f2)) continue;
            double val = objective(a2, f2, false).value;
            if (val <= v.value + 1e-4 * t * slope + 1e-13 * std::abs(v.value)) {
                a = a2;
                frep = f2;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (!(gnorm <= opt.grad_tol)) {
        std::ostringstream os;
        os << "solve_nonthermal: no convergence after " << it << " iterations (scaled gradient " << gnorm << ")";
        throw DomainError(os.str());
    }

    NonthermalProfile p;
    p.grid = g;
    p.a = a;
    p.f.assign(g.size(), 0.0);
    for (int r = 0; r < lay.m; ++r) {
        const int j = lay.orbits.reps[r];
        p.f[j] = frep[r];
        p.f[g.reflect(j)] = 0.0 - frep[r];
    }
    if (report) {
        report->iterations = it;
        report->gradient_norm = gnorm;
        StationaryCharges fw = nonthermal_forward(p);
        double res = 0.0;
        for (int j = 0; j < g.size(); ++j) res = std::max(res, std::abs(fw.h[j] - c.h_profile[j]));
        for (int s = 0; s < d; ++s) res = std::max(res, std::abs(fw.eps[s] - c.eps(s)));
        report->residual = res;
    }
    return p;
}

ThermalBranch thermal_branch_from_name(const std::string& s) {
    if (s == "auto") return ThermalBranch::Auto;
    if (s == "positive") return ThermalBranch::Positive;
    if (s == "negative") return ThermalBranch::Negative;
    throw DomainError("unknown thermal branch '" + s + "'");
}

ThermalParams solve_thermal(const ConservedCharges& c, const Dispersion& disp, ThermalBranch branch,
                            const SolverOptions& opt, SolveReport* report) {
    const auto& g = c.grid;
    const int n = g.size();
    const int d = static_cast<int>(c.eps.size());
    for (int s = 0; s < d; ++s)
        if (!(c.eps(s) > 0.0)) throw DomainError("solve_thermal: spin eigenvalue must be positive");
    const double dk = g.dk();
    std::vector<double> om(n);
    for (int j = 0; j < n; ++j) om[j] = disp.omega(g.k(j));

    // Dual in (beta, b); convex on the set beta*omega_j > b_sigma.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d + 1);
    for (int s = 0; s < d; ++s) x(1 + s) = -std::log1p(1.0 / c.eps(s));

    auto feasible = [&](const Eigen::VectorXd& y) {
        for (int s = 0; s < d; ++s)
            for (int j = 0; j < n; ++j)
                if (!(y(0) * om[j] - y(1 + s) > 0.0)) return false;
        return true;
    };
    auto eval = [&](const Eigen::VectorXd& y, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
        double val = y(0) * c.energy;
        for (int s = 0; s < d; ++s) val -= y(1 + s) * c.eps(s);
        if (grad) {
            *grad = Eigen::VectorXd::Zero(d + 1);
            (*grad)(0) = c.energy;
            for (int s = 0; s < d; ++s) (*grad)(1 + s) = -c.eps(s);
        }
        if (hess) *hess = Eigen::MatrixXd::Zero(d + 1, d + 1);
        for (int s = 0; s < d; ++s) {
            for (int j = 0; j < n; ++j) {
                const double xx = y(0) * om[j] - y(1 + s);
                val += -dk * std::log(-std::expm1(-xx));
                const double lam = 1.0 / std::expm1(xx);
                if (grad) {
                    (*grad)(0) -= dk * om[j] * lam;
                    (*grad)(1 + s) += dk * lam;
                }
                if (hess) {
                    const double kap = dk * lam * (1.0 + lam);
                    (*hess)(0, 0) += kap * om[j] * om[j];
                    (*hess)(0, 1 + s) -= kap * om[j];
                    (*hess)(1 + s, 0) -= kap * om[j];
                    (*hess)(1 + s, 1 + s) += kap;
                }
            }
        }
        return val;
    };

    std::vector<double> history;
    int it = 0;
    double gnorm = 0.0;
    for (; it < opt.max_iter; ++it) {
        Eigen::VectorXd gr;
        Eigen::MatrixXd he;
        double val = eval(x, &gr, &he);
        gnorm = gr.cwiseAbs().maxCoeff();
        history.push_back(gnorm);
        if (gnorm <= opt.grad_tol) break;
        Eigen::VectorXd step = he.ldlt().solve(-gr);
        const double slope = gr.dot(step);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 80; ++h, t *= 0.5) {
            Eigen::VectorXd y = x + t * step;
            if (!feasible(y)) continue;
            if (eval(y, nullptr, nullptr) <= val + 1e-4 * t * slope + 1e-13 * std::abs(val)) {
                x = y;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (!(gnorm <= opt.grad_tol) || !std::isfinite(x(0))) {
        std::ostringstream os;
        os << "solve_thermal: no (beta, mu) matches the charges on either branch; gradient history:";
        for (double h : history) os << ' ' << h;
        throw DomainError(os.str());
    }
    ThermalParams t;
    t.beta = x(0);
    if (branch == ThermalBranch::Positive && !(t.beta > 0.0))
        throw DomainError("solve_thermal: positive-temperature branch cannot match the energy");
    if (branch == ThermalBranch::Negative && !(t.beta < 0.0))
        throw DomainError("solve_thermal: negative-temperature branch cannot match the energy");
    for (int s = 0; s < d; ++s) {
        t.b.push_back(x(1 + s));
        t.mu.push_back(t.beta != 0.0 ? x(1 + s) / t.beta : std::numeric_limits<double>::quiet_NaN());
    }
    if (report) {
        report->iterations = it;
        report->gradient_norm = gnorm;
        double e = 0.0;
        StationaryCharges fw = thermal_forward(t, g, disp, &e);
        double res = std::abs(e - c.energy);
        for (int s = 0; s < d; ++s) res = std::max(res, std::abs(fw.eps[s] - c.eps(s)));
        report->residual = res;
    }
    return t;
}

WignerField build_be_state(const NonthermalProfile& p, const CMatrix& basis) {
    if (!p.feasible()) throw DomainError("build_be_state: infeasible nonthermal profile");
    const int d = static_cast<int>(p.a.size());
    if (basis.rows() != d) throw DomainError("build_be_state: basis dimension mismatch");
    MatrixField v(p.grid.size());
    for (int j = 0; j < p.grid.size(); ++j) {
        RVector lam(d);
        for (int s = 0; s < d; ++s) lam(s) = 1.0 / std::expm1(p.f[j] - p.a[s]);
        v[j] = basis * lam.asDiagonal() * basis.adjoint();
    }
    return WignerField(p.grid, std::move(v));
}

WignerField build_be_state(const ThermalParams& t, const BrillouinGrid& grid, const Dispersion& disp,
                           const CMatrix& basis) {
    const int d = static_cast<int>(t.b.size());
    if (basis.rows() != d) throw DomainError("build_be_state: basis dimension mismatch");
    MatrixField v(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
        const double w = disp.omega(grid.k(j));
        RVector lam(d);
        for (int s = 0; s < d; ++s) {
            const double x = t.beta * w - t.b[s];
            if (!(x > 0.0)) throw DomainError("build_be_state: infeasible thermal parameters");
            lam(s) = 1.0 / std::expm1(x);
        }
        v[j] = basis * lam.asDiagonal() * basis.adjoint();
    }
    return WignerField(grid, std::move(v));
}

}  // namespace bhk
