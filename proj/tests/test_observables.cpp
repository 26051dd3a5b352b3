#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "bhk/collision.hpp"
#include "bhk/observables.hpp"
#include "support.hpp"

using namespace bhk;

TEST_CASE("charges of simple fields") {
    BrillouinGrid g(64);
    Dispersion d0{0.0};
    WignerField c(g, MatrixField(64, 0.6 * CMatrix::Identity(3, 3)));
    auto q = charges(c, d0);
    CHECK((q.spin_matrix.matrix() - 0.6 * CMatrix::Identity(3, 3)).norm() < 1e-14);
    CHECK(q.energy == doctest::Approx(3 * 0.6).epsilon(1e-14));
    for (double h : q.h_profile) CHECK(std::abs(h) < 1e-14);

    MatrixField v(64, CMatrix::Zero(3, 3));
    for (int j = 0; j < 64; ++j) v[j](0, 0) = 1.0 + std::cos(kTwoPi * g.k(j));
    q = charges(WignerField(g, v), d0);
    for (int j = 0; j < 64; ++j) {
        CHECK(q.h_profile[j] == doctest::Approx(2 * std::cos(kTwoPi * g.k(j))).epsilon(1e-12));
        CHECK(q.h_profile[g.reflect(j)] == -q.h_profile[j]);
    }
    CHECK(q.eps(0) == doctest::Approx(1.0));
}

TEST_CASE("charges do not depend on the summation start") {
    std::mt19937_64 rng(1);
    BrillouinGrid g(32);
    Dispersion d{0.5};
    auto w = testing::random_field(rng, g, 3);
    auto q = charges(w, d);
    for (int start : {5, 17, 31}) {
        CMatrix s = CMatrix::Zero(3, 3);
        double e = 0;
        for (int m = 0; m < 32; ++m) {
            int j = (start + m) % 32;
            s += w[j];
            e += d.omega(g.k(j)) * w[j].trace().real();
        }
        CHECK((s * g.dk() - q.spin_matrix.matrix()).norm() < 1e-13);
        CHECK(std::abs(e * g.dk() - q.energy) < 1e-13);
    }
    // Columns of the basis diagonalize the spin matrix.
    CMatrix diag = q.basis.adjoint() * q.spin_matrix.matrix() * q.basis;
    for (int i = 0; i < 3; ++i) CHECK(diag(i, i).real() == doctest::Approx(q.eps(i)));
    CHECK(q.eps(2) >= 0.0);
}

TEST_CASE("entropy values") {
    BrillouinGrid g(16);
    CHECK(entropy(WignerField(g, 3)) == 0.0);
    WignerField one(g, MatrixField(16, CMatrix::Identity(1, 1)));
    CHECK(entropy(one) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-14));
    MatrixField bad(16, CMatrix::Identity(1, 1));
    bad[3](0, 0) = -1e-3;
    CHECK_THROWS_AS(entropy(WignerField(g, bad)), DomainError);
    bad[3](0, 0) = -1e-12;
    CHECK(std::isfinite(entropy(WignerField(g, bad))));
}

TEST_CASE("entropy agrees with the matrix-function form") {
    std::mt19937_64 rng(2);
    BrillouinGrid g(32);
    for (int t = 0; t < 5; ++t) {
        auto w = testing::random_field(rng, g, 3, 0.05);
        double s = 0;
        for (int j = 0; j < 32; ++j) {
            CMatrix id = CMatrix::Identity(3, 3);
            CMatrix a = id + w[j];
            CMatrix la = a.log(), lw = w[j].log();
            s += ((a * la).trace() - (w[j] * lw).trace()).real();
        }
        CHECK(std::abs(s * g.dk() - entropy(w)) < 1e-10);
    }
}

TEST_CASE("entropy production is nonnegative") {
    std::mt19937_64 rng(3);
    for (double eta : {0.0, 0.5}) {
        BrillouinGrid g(32);
        Dispersion d{eta};
        auto pot = PairPotential::inverse_cosine();
        auto quad = CollisionQuadrature::build(g, d, 1e-12);
        CollisionConfig cfg;
        CollisionOperator op(g, d, pot, &quad, cfg);
        for (int t = 0; t < 5; ++t) {
            auto w = testing::random_field(rng, g, 3, 0.1);
            const double sigma = entropy_production(w, op.eval_C(w));
            CHECK(sigma >= -1e-8);
            // The Vlasov part is entropy neutral.
            CHECK(std::abs(entropy_production(w, op.eval_Cc(w))) < 1e-10);
        }
        // Thermal scalar field: production vanishes up to quadrature error.
        MatrixField v(32);
        for (int j = 0; j < 32; ++j) v[j] = CMatrix::Identity(3, 3) / (std::exp(d.omega(g.k(j)) + 1.0) - 1.0);
        WignerField be(g, v);
        auto c = op.eval_C(be);
        CHECK(std::abs(entropy_production(be, c)) < 1e-3 * field_hs_norm(c, g.dk()) + 1e-6);
        MatrixField zero(32, CMatrix::Zero(3, 3));
        CHECK_THROWS_AS(entropy_production(WignerField(g, zero), zero), DomainError);
    }
}

TEST_CASE("off-diagonal norm") {
    std::mt19937_64 rng(4);
    BrillouinGrid g(32);
    MatrixField v(32);
    for (int j = 0; j < 32; ++j) {
        v[j] = CMatrix::Zero(3, 3);
        for (int s = 0; s < 3; ++s) v[j](s, s) = 1.0 + 0.3 * std::sin(kTwoPi * g.k(j) * (s + 1));
    }
    WignerField w(g, v);
    CMatrix id = CMatrix::Identity(3, 3);
    CHECK(offdiag_norm(w, id) == 0.0);

    CMatrix u = testing::random_unitary(rng, 3);
    auto rotated = w.conjugated(u);
    // Independent evaluation: full norm minus the diagonal part.
    double full = 0, diag = 0;
    for (int j = 0; j < 32; ++j) {
        full += rotated[j].squaredNorm();
        diag += rotated[j].diagonal().squaredNorm();
    }
    CHECK(offdiag_norm(rotated, id) == doctest::Approx(std::sqrt((full - diag) * g.dk())).epsilon(1e-12));
    // Back in the rotation basis it is diagonal again.
    CHECK(offdiag_norm(rotated, u.adjoint()) < 1e-13);

    auto init = build_initial_state(BrillouinGrid(64), 1, InitialStateParams::defaults(1));
    auto q = charges(init, Dispersion{0.0});
    CHECK(offdiag_norm(init, q.basis) > 0.01);
}

TEST_CASE("decay rate fits") {
    std::vector<std::pair<double, double>> s;
    for (int i = 0; i < 50; ++i) {
        double t = 0.1 * i;
        s.emplace_back(t, std::exp(-2 * t));
    }
    auto f = fit_decay_rate(s);
    CHECK(std::abs(f.rate - 2.0) < 1e-10);
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    s.clear();
    for (int i = 0; i < 50; ++i) {
        double t = 0.2 * i;
        s.emplace_back(t, std::exp(-t) * (1 + 0.01 * std::sin(t)));
    }
    CHECK(std::abs(fit_decay_rate(s).rate - 1.0) < 0.02);

    s.clear();
    for (int i = 0; i < 20; ++i) s.emplace_back(i, 3.0);
    f = fit_decay_rate(s);
    CHECK(f.rate == 0.0);
    CHECK(f.r_squared == 0.0);

    s[4].second = 0.0;
    CHECK_THROWS_AS(fit_decay_rate(s), DomainError);
    s.resize(5);
    CHECK_THROWS_AS(fit_decay_rate(s), DomainError);
}
