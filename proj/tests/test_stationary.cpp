#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bhk/collision.hpp"
#include "bhk/stationary.hpp"
#include "support.hpp"

using namespace bhk;

namespace {

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

NonthermalProfile random_profile(std::mt19937_64& rng, const BrillouinGrid& g, int d) {
    std::uniform_real_distribution<double> u(-1, 1);
    const double c1 = 0.6 * u(rng), c2 = 0.3 * u(rng), c3 = 0.2 * u(rng);
    auto fn = [=](double k) {
        return c1 * std::cos(kTwoPi * k) + c2 * std::sin(2 * kTwoPi * k) + c3 * std::cos(3 * kTwoPi * k);
    };
    const double fmax = std::abs(c1) + std::abs(c2) + std::abs(c3);
    std::vector<double> a(d);
    std::uniform_real_distribution<double> ua(0.1, 2.0);
    for (auto& x : a) x = -(fmax + ua(rng));
    return NonthermalProfile::from_function(g, fn, a);
}

ConservedCharges forward_charges(const NonthermalProfile& p) {
    auto sc = nonthermal_forward(p);
    return charges_from_profile(p.grid, sc.h, sc.eps);
}

ConservedCharges thermal_charges(const ThermalParams& t, const BrillouinGrid& g, const Dispersion& d) {
    double e = 0;
    auto sc = thermal_forward(t, g, d, &e);
    return charges_from_profile(g, sc.h, sc.eps, e);
}

ThermalParams params(double beta, std::vector<double> mu) {
    ThermalParams t;
    t.beta = beta;
    t.mu = mu;
    for (double m : mu) t.b.push_back(beta * m);
    return t;
}

}  // namespace

TEST_CASE("reflection orbits") {
    BrillouinGrid g(64);
    ReflectionOrbits o(g);
    CHECK(o.fixed.size() == 2);
    CHECK(o.reps.size() == 31);
    for (int j : o.reps) CHECK(std::abs(g.k(j)) < 0.25);
    auto p = NonthermalProfile::from_function(g, [](double k) { return 0.5 * std::cos(kTwoPi * k); }, {-0.1});
    CHECK_FALSE(p.feasible());
    CHECK(p.f[g.on_grid(0.25)] == 0.0);
    CHECK(p.f[g.reflect(3)] == -p.f[3]);
}

TEST_CASE("free energy value and derivatives") {
    BrillouinGrid g(64);
    auto p = NonthermalProfile::from_function(g, [](double) { return 0.0; }, {-std::log(2.0)});
    auto fe = free_energy(p);
    CHECK(fe.value == doctest::Approx(-0.5 * std::log(0.25)).epsilon(1e-13));

    std::mt19937_64 rng(5);
    ReflectionOrbits orb(g);
    for (int t = 0; t < 10; ++t) {
        auto q = random_profile(rng, g, 3);
        REQUIRE(q.feasible());
        auto v = free_energy(q);
        const double h = 1e-6;
        for (int s = 0; s < 3; ++s) {
            auto plus = q, minus = q;
            plus.a[s] += h;
            minus.a[s] -= h;
            double fd = (free_energy(plus, false).value - free_energy(minus, false).value) / (2 * h);
            CHECK(std::abs(fd - v.gradient(s)) < 1e-6 * (1 + std::abs(fd)));
        }
        for (std::size_t r = 0; r < orb.reps.size(); r += 4) {
            const int j = orb.reps[r];
            auto plus = q, minus = q;
            plus.f[j] += h;
            plus.f[g.reflect(j)] -= h;
            minus.f[j] -= h;
            minus.f[g.reflect(j)] += h;
            double fd = (free_energy(plus, false).value - free_energy(minus, false).value) / (2 * h);
            CHECK(std::abs(fd - v.gradient(3 + r)) < 1e-6 * (1 + std::abs(fd)));
        }
    }
    for (int t = 0; t < 100; ++t) {
        auto q = random_profile(rng, g, 3);
        auto v = free_energy(q);
        Eigen::VectorXd dir = Eigen::VectorXd::Random(v.gradient.size());
        CHECK(dir.dot(v.hessian * dir) > 0.0);
    }
    auto infeasible = NonthermalProfile::from_function(g, [](double k) { return std::cos(kTwoPi * k); }, {-0.5});
    CHECK_FALSE(infeasible.feasible());
    CHECK_THROWS_AS(free_energy(infeasible), DomainError);
}

TEST_CASE("nonthermal closed form") {
    BrillouinGrid g(64);
    auto c = charges_from_profile(g, std::vector<double>(64, 0.0), {1.0, 1.0, 1.0});
    SolveReport rep;
    auto p = solve_nonthermal(c, {}, &rep);
    for (double a : p.a) CHECK(a == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    for (double f : p.f) CHECK(std::abs(f) < 1e-12);
    CHECK(rep.gradient_norm <= 1e-10);
    auto w = build_be_state(p, c.basis);
    for (int j = 0; j < 64; ++j) CHECK((w[j] - CMatrix::Identity(3, 3)).norm() < 1e-11);

    auto zero = charges_from_profile(g, std::vector<double>(64, 0.0), {1.0, 0.0, 1.0});
    CHECK_THROWS_AS(solve_nonthermal(zero), DomainError);
}

TEST_CASE("nonthermal round trips") {
    BrillouinGrid g(64);
    auto p = NonthermalProfile::from_function(g, [](double k) { return 0.3 * std::cos(kTwoPi * k); },
                                              {-1.0, -1.0, -1.0});
    auto back = solve_nonthermal(forward_charges(p));
    CHECK(sup_diff(back.f, p.f) < 1e-8);
    CHECK(sup_diff(back.a, p.a) < 1e-8);

    std::mt19937_64 rng(6);
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
        auto q = random_profile(rng, g, 3);
        auto c = forward_charges(q);
        auto r = solve_nonthermal(c);
        // Equal a values come back in the order of the conserved basis, which is sorted by eps.
        std::vector<double> want = q.a, got = r.a;
        std::sort(want.begin(), want.end());
        std::sort(got.begin(), got.end());
        worst = std::max({worst, sup_diff(r.f, q.f), sup_diff(got, want)});
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("thermal round trips") {
    BrillouinGrid g(64);
    {
        Dispersion d{0.5};
        auto c = thermal_charges(params(1.0, {-1.0}), g, d);
        auto t = solve_thermal(c, d);
        CHECK(std::abs(t.beta - 1.0) < 1e-8);
        CHECK(std::abs(t.mu[0] + 1.0) < 1e-8);
    }
    {
        Dispersion d{0.0};
        auto c = thermal_charges(params(-0.5, {3.0}), g, d);
        auto t = solve_thermal(c, d);
        CHECK(std::abs(t.beta + 0.5) < 1e-8);
        CHECK(std::abs(t.mu[0] - 3.0) < 1e-8);
        CHECK_THROWS_AS(solve_thermal(c, d, ThermalBranch::Positive), DomainError);
    }
    {
        Dispersion d{0.5};
        auto c = thermal_charges(params(0.7, {-0.7, -0.9, -1.5}), g, d);
        auto t = solve_thermal(c, d);
        CHECK(std::abs(t.beta - 0.7) < 1e-8);
        // Basis order follows descending eps, i.e. descending mu.
        CHECK(std::abs(t.mu[0] + 0.7) < 1e-8);
        CHECK(std::abs(t.mu[2] + 1.5) < 1e-8);
    }
    CHECK(thermal_branch_from_name("negative") == ThermalBranch::Negative);
    CHECK_THROWS(thermal_branch_from_name("cold"));
}

TEST_CASE("Bose-Einstein state values") {
    BrillouinGrid g(64);
    Dispersion d{0.0};
    auto w = build_be_state(params(1.0, {-1.0}), g, d, CMatrix::Identity(1, 1));
    CHECK(w[g.on_grid(0.0)](0, 0).real() == doctest::Approx(1.0 / (std::exp(1.0) - 1.0)).epsilon(1e-14));
    CHECK(w[g.on_grid(0.0)](0, 0).real() == doctest::Approx(0.581977).epsilon(1e-6));
    CHECK_THROWS_AS(build_be_state(params(1.0, {0.5}), g, d, CMatrix::Identity(1, 1)), DomainError);
}

TEST_CASE("shift covariance of stationary states") {
    BrillouinGrid g(64);
    auto w = build_initial_state(g, 1, InitialStateParams::defaults(1));
    auto ws = w.shifted_half();
    {
        Dispersion d{0.0};
        auto c = charges(w, d), cs = charges(ws, d);
        auto st = build_be_state(solve_nonthermal(c), c.basis);
        auto sts = build_be_state(solve_nonthermal(cs), cs.basis);
        CHECK(hs_distance(sts, st.shifted_half()) < 1e-6);
    }
    {
        Dispersion d{0.5};
        auto c = charges(w, d), cs = charges(ws, d);
        auto t = solve_thermal(c, d), ts = solve_thermal(cs, d);
        CHECK(t.beta > 0.0);
        CHECK(ts.beta < 0.0);
        auto st = build_be_state(t, g, d, c.basis);
        auto sts = build_be_state(ts, g, d, cs.basis);
        CHECK(hs_distance(sts, st.shifted_half()) > 1e-2);
    }
}

TEST_CASE("predicted states are collision fixed points") {
    BrillouinGrid g(64);
    auto w = build_initial_state(g, 1, InitialStateParams::defaults(1));
    auto pot = PairPotential::inverse_cosine();
    CollisionConfig cfg;
    {
        Dispersion d{0.0};
        auto quad = CollisionQuadrature::build(g, d, cfg.tol_root);
        CollisionOperator op(g, d, pot, &quad, cfg);
        auto c = charges(w, d);
        auto st = build_be_state(solve_nonthermal(c), c.basis);
        const double ref = field_hs_norm(op.eval_Cd(w), g.dk());
        CHECK(field_hs_norm(op.eval_Cd(st), g.dk()) < 1e-3 * ref);
        CHECK(field_hs_norm(op.eval_C(st), g.dk()) < 1e-3 * ref);
    }
    {
        Dispersion d{0.5};
        auto quad = CollisionQuadrature::build(g, d, cfg.tol_root);
        CollisionOperator op(g, d, pot, &quad, cfg);
        auto c = charges(w, d);
        auto st = build_be_state(solve_thermal(c, d), g, d, c.basis);
        const double ref = field_hs_norm(op.eval_Cd(w), g.dk());
        CHECK(field_hs_norm(op.eval_C(st), g.dk()) < 1e-3 * ref);
    }
}
