// Acceptance suite. Prints one PASS/FAIL line per criterion; arguments select criteria (default: all).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "bhk/integrator.hpp"
#include "bhk/quasifree.hpp"
#include "bhk/scenario.hpp"
#include "bhk/stationary.hpp"
#include "support.hpp"

using namespace bhk;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::string sci(double x) { return fmt("%.3g", x); }

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("bhk_acceptance_" + name);
    fs::remove_all(p);
    return p;
}

// ---------------------------------------------------------------------------
// Default relax runs shared by criteria 1 and 2.

struct RelaxRun {
    TrajectoryRecord rec;
    ConservedCharges c0;
    double seconds = 0.0;
};

std::map<std::pair<int, double>, RelaxRun> g_runs;

const RelaxRun& relax_run(int n, double eta) {
    auto key = std::make_pair(n, eta);
    auto it = g_runs.find(key);
    if (it != g_runs.end()) return it->second;
    auto t0 = Clock::now();
    BrillouinGrid g(n);
    Dispersion d{eta};
    CollisionConfig cfg;
    auto quad = CollisionQuadrature::build(g, d, cfg.tol_root, cfg.scan_factor);
    CollisionOperator op(g, d, PairPotential::onsite(), &quad, cfg);
    auto w0 = build_initial_state(g, 1, InitialStateParams::defaults(1));
    EvolveOptions opt;
    opt.t_end = 1.0;
    opt.dt = 5e-4;
    opt.sample_every = 20;
    RelaxRun r;
    r.c0 = charges(w0, d);
    r.rec = evolve(w0, op, opt).record;
    r.seconds = seconds_since(t0);
    std::fprintf(stderr, "  relax N=%d eta=%g: %.1f s\n", n, eta, r.seconds);
    return g_runs.emplace(key, std::move(r)).first->second;
}

struct Drifts {
    double eps = 0.0, energy = 0.0, h = 0.0;
};

Drifts drifts(const RelaxRun& r) {
    Drifts out;
    double hmax = 0.0;
    for (double h : r.c0.h_profile) hmax = std::max(hmax, std::abs(h));
    const auto& s0 = r.rec.samples.front();
    for (const auto& s : r.rec.samples) {
        for (std::size_t i = 0; i < s.eps.size(); ++i)
            out.eps = std::max(out.eps, std::abs(s.eps[i] - s0.eps[i]) / s0.eps[i]);
        out.energy = std::max(out.energy, std::abs(s.energy - s0.energy) / std::abs(s0.energy));
        out.h = std::max(out.h, s.h_max_drift / hmax);
    }
    return out;
}

// Exact invariants sit at the roundoff floor on both grids; there is nothing left to shrink.
constexpr double kRoundoffFloor = 1e-12;

bool shrinks(double coarse, double fine) {
    return fine <= coarse / 4.0 || (coarse <= kRoundoffFloor && fine <= kRoundoffFloor);
}

Verdict criterion_conservation() {
    Verdict v{true, ""};
    std::ostringstream os;
    for (double eta : {0.0, 0.02, 0.5}) {
        const Drifts a = drifts(relax_run(64, eta)), b = drifts(relax_run(128, eta));
        const double slowest = std::max(relax_run(64, eta).seconds, relax_run(128, eta).seconds);
        bool ok = a.eps <= 1e-3 && a.energy <= 1e-3 && b.eps <= 1e-3 && b.energy <= 1e-3;
        ok = ok && shrinks(a.eps, b.eps) && shrinks(a.energy, b.energy) && slowest <= 600.0;
        os << " eta=" << eta << ": eps " << sci(a.eps) << "->" << sci(b.eps) << ", energy " << sci(a.energy) << "->"
           << sci(b.energy);
        if (eta == 0.0) {
            ok = ok && a.h <= 1e-3 && b.h <= 1e-3 && shrinks(a.h, b.h);
            os << ", h " << sci(a.h) << "->" << sci(b.h);
        }
        os << " (" << fmt("%.0f", slowest) << " s);";
        v.pass = v.pass && ok;
    }
    v.detail = "relative drift N=64->128:" + os.str();
    return v;
}

Verdict criterion_h_theorem() {
    double min_sigma = 1e300, min_increment = 1e300;
    for (int n : {64, 128})
        for (double eta : {0.0, 0.02, 0.5}) {
            const auto& s = relax_run(n, eta).rec.samples;
            for (std::size_t i = 0; i < s.size(); ++i) {
                min_sigma = std::min(min_sigma, s[i].entropy_production);
                if (i > 0) min_increment = std::min(min_increment, s[i].entropy - s[i - 1].entropy);
            }
        }
    return {min_sigma >= -1e-8 && min_increment >= -1e-6,
            "min entropy production " + sci(min_sigma) + ", min entropy increment " + sci(min_increment) +
                " over 6 default runs"};
}

// ---------------------------------------------------------------------------

Verdict criterion_positivity_lemma() {
    std::mt19937_64 rng(20240501);
    std::uniform_int_distribution<int> dim(1, 5);
    std::normal_distribution<double> nd;
    double worst = 1e300;
    for (int t = 0; t < 1000; ++t) {
        const int d = dim(rng);
        CMatrix a = testing::random_psd(rng, d, 1.0), b = testing::random_psd(rng, d, 1.0);
        CMatrix c = testing::random_psd(rng, d, 1.0);
        const double x = nd(rng), y = nd(rng);
        CMatrix m = x * x * a * (b * c).trace() + y * y * c * (b * a).trace() - x * y * (a * b * c + c * b * a);
        worst = std::min(worst, HermitianMatrix(m).min_eigenvalue());
    }
    return {worst >= -1e-12, "min eigenvalue over 1000 instances (d <= 5): " + sci(worst)};
}

Verdict criterion_stationarity() {
    Verdict v{true, ""};
    for (double eta : {0.0, 0.5}) {
        BrillouinGrid g(64);
        Dispersion d{eta};
        CollisionConfig cfg;
        auto quad = CollisionQuadrature::build(g, d, cfg.tol_root, cfg.scan_factor);
        CollisionOperator op(g, d, PairPotential::onsite(), &quad, cfg);
        auto w0 = build_initial_state(g, 1, InitialStateParams::defaults(1));
        auto c0 = charges(w0, d);
        auto pred = predict_stationary(c0, d, ThermalBranch::Auto);
        EvolveOptions opt;
        opt.t_end = 12.0;
        opt.dt = 1e-3;
        opt.sample_every = 50;
        opt.stationary = &pred.state;
        opt.stationarity_tol = 1e-5;
        opt.record_production = false;
        auto r = evolve(w0, op, opt);
        const double dist = hs_distance(r.final_state, pred.state);
        const bool ok = r.record.stopped_early && dist <= 2e-3;
        v.pass = v.pass && ok;
        v.detail += " eta=" + fmt("%g", eta) + (pred.thermal ? " (thermal)" : " (nonthermal)") + ": settled at t=" +
                    fmt("%.2f", r.record.samples.back().t) + (r.record.stopped_early ? "" : " (not settled)") +
                    ", HS distance " + sci(dist) + ";";
    }
    return v;
}

Verdict criterion_round_trips() {
    BrillouinGrid g(64);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1, 1), ua(0.1, 2.0);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const double c1 = 0.6 * u(rng), c2 = 0.3 * u(rng), c3 = 0.2 * u(rng);
        const double fmax = std::abs(c1) + std::abs(c2) + std::abs(c3);
        std::vector<double> a(3);
        for (auto& x : a) x = -(fmax + ua(rng));
        auto p = NonthermalProfile::from_function(
            g,
            [=](double k) {
                return c1 * std::cos(kTwoPi * k) + c2 * std::sin(2 * kTwoPi * k) + c3 * std::cos(3 * kTwoPi * k);
            },
            a);
        auto sc = nonthermal_forward(p);
        auto back = solve_nonthermal(charges_from_profile(g, sc.h, sc.eps));
        for (std::size_t j = 0; j < p.f.size(); ++j) worst = std::max(worst, std::abs(back.f[j] - p.f[j]));
        for (std::size_t s = 0; s < 3; ++s) worst = std::max(worst, std::abs(back.a[s] - p.a[s]));
    }
    double worst_th = 0.0;
    for (auto [beta, mu, eta] : {std::tuple{1.0, -1.0, 0.5}, std::tuple{-0.5, 3.0, 0.0}}) {
        Dispersion d{eta};
        ThermalParams t;
        t.beta = beta;
        t.mu = {mu};
        t.b = {beta * mu};
        double e = 0.0;
        auto sc = thermal_forward(t, g, d, &e);
        auto back = solve_thermal(charges_from_profile(g, sc.h, sc.eps, e), d);
        worst_th = std::max({worst_th, std::abs(back.beta - beta), std::abs(back.mu[0] - mu)});
    }
    return {worst <= 1e-7 && worst_th <= 1e-8,
            "nonthermal sup error over 50 profiles " + sci(worst) + ", thermal (beta=1, mu=-1) and (beta=-0.5, mu=3) " +
                sci(worst_th)};
}

nlohmann::json run_cfg(ScenarioConfig cfg, const std::string& tag) {
    cfg.output_dir = scratch(tag).string();
    nlohmann::json meta;
    const int status = run_scenario(cfg, &meta);
    if (status != 0) throw std::runtime_error(tag + ": " + meta.value("error", std::string("run failed")));
    return meta["results"];
}

Verdict criterion_negative_temperature() {
    Verdict v{true, ""};
    for (double eta : {0.0, 0.02, 0.5}) {
        ScenarioConfig cfg;
        cfg.scenario = Scenario::NegativeTemperature;
        cfg.eta = eta;
        cfg.t_end = 0.0;
        auto res = run_cfg(cfg, "negtemp");
        const double beta = res["beta_shifted"], hs = res["shifted_vs_shifted_copy_hs"];
        bool ok = true;
        if (eta != 0.0) ok = beta < 0.0;
        if (eta == 0.0) ok = hs <= 1e-6;
        if (eta == 0.5) ok = ok && hs > 1e-2;
        v.pass = v.pass && ok;
        v.detail += " eta=" + fmt("%g", eta) + ": beta(shifted) " + fmt("%.5g", beta) + ", HS to shifted copy " +
                    sci(hs) + ";";
    }
    return v;
}

Verdict criterion_potential_effect() {
    ScenarioConfig cfg;
    cfg.scenario = Scenario::ComparePotentials;
    cfg.eta = 0.5;
    cfg.t_end = 6.0;
    cfg.dt = 1e-3;
    cfg.sample_every = 20;
    auto res = run_cfg(cfg, "potentials");
    const auto& on = res["potentials"]["onsite"]["decay_fit"];
    const auto& ic = res["potentials"]["inverse-cosine"]["decay_fit"];
    const double r_on = on.value("rate", NAN), r_ic = ic.value("rate", NAN);
    const double q_on = on.value("r_squared", NAN), q_ic = ic.value("r_squared", NAN);
    return {r_ic < r_on && q_on >= 0.99 && q_ic >= 0.99,
            "off-diagonal decay rate onsite " + fmt("%.4g", r_on) + " (R^2 " + fmt("%.5f", q_on) +
                "), inverse-cosine " + fmt("%.4g", r_ic) + " (R^2 " + fmt("%.5f", q_ic) + ")"};
}

Verdict criterion_prethermalization() {
    ScenarioConfig cfg;
    cfg.scenario = Scenario::Prethermalization;
    cfg.eta = 0.02;
    cfg.t_end = 3.0;
    cfg.dt = 1e-3;
    cfg.sample_every = 5;
    auto res = run_cfg(cfg, "prethermal");
    const double t_nt = res["t_nonthermal_1pct"], t_th = res["t_thermal_1pct"];
    const bool reached = t_nt > 0.0 && t_th > 0.0;
    return {reached && t_th >= 5.0 * t_nt,
            "time to 1% of nonthermal entropy " + fmt("%.4g", t_nt) + ", of thermal entropy " + fmt("%.4g", t_th) +
                " (ratio " + (reached ? fmt("%.3g", t_th / t_nt) : std::string("n/a")) + ", required >= 5)"};
}

Verdict criterion_wick_oracle() {
    auto t0 = Clock::now();
    ComplexMatrix h1(1, 1);
    h1(0, 0) = 0.9;
    OneParticleHamiltonian single(h1);
    const double w = 1.0 / std::expm1(0.9);
    const double single_err = std::abs(wick_moment(single, parse_moment_request("c0 a0 c0 a0")).value - (2 * w * w + w));

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> e(0.8, 2.0), pick(0, 1);
    double moment_err = 0.0, two_point_err = 0.0;
    int checked = 0;
    for (int t = 0; t < 4; ++t) {
        Eigen::VectorXd d(3);
        for (int i = 0; i < 3; ++i) d(i) = e(rng);
        CMatrix u = testing::random_unitary(rng, 3);
        OneParticleHamiltonian h(hermitian_part(u * d.asDiagonal() * u.adjoint()));
        auto g = two_point(h);
        two_point_err = std::max(two_point_err, (g - brute_force_two_point(h, 60)).norm() / g.norm());
        std::uniform_int_distribution<int> mode(0, 2);
        for (int pairs = 1; pairs <= 3; ++pairs)
            for (int r = 0; r < 3; ++r) {
                MomentRequest req;
                for (int p = 0; p < pairs; ++p) {
                    req.push_back({mode(rng), Ladder::Create});
                    req.push_back({mode(rng), Ladder::Annihilate});
                }
                std::shuffle(req.begin(), req.end(), rng);
                cd a = wick_moment(h, req).value, b = brute_force_moment(h, req, 40);
                moment_err = std::max(moment_err, std::abs(a - b) / std::abs(b));
                ++checked;
            }
    }
    const double secs = seconds_since(t0);
    return {single_err <= 1e-14 && moment_err <= 1e-6 && two_point_err <= 1e-8 && secs <= 60.0,
            "<n^2> - (2W^2+W) = " + sci(single_err) + "; " + std::to_string(checked) +
                " random 3-mode moments max rel err " + sci(moment_err) + "; two-point rel err " +
                sci(two_point_err) + "; " + fmt("%.2f", secs) + " s"};
}

Verdict criterion_dual_mode() {
    double worst = 0.0, best = 1e300;
    for (double eta : {0.0, 0.5}) {
        BrillouinGrid g(32);
        Dispersion d{eta};
        CollisionConfig root_cfg, moll_cfg;
        moll_cfg.mode = CollisionMode::Mollified;
        moll_cfg.include_vlasov = false;
        root_cfg.include_vlasov = false;
        auto quad = CollisionQuadrature::build(g, d, root_cfg.tol_root, root_cfg.scan_factor);
        CollisionOperator root(g, d, PairPotential::onsite(), &quad, root_cfg);
        CollisionOperator moll(g, d, PairPotential::onsite(), nullptr, moll_cfg);
        std::mt19937_64 rng(1000 + static_cast<int>(10 * eta));
        for (int t = 0; t < 10; ++t) {
            auto w = testing::random_field(rng, g, 3);
            auto a = root.eval_Cd(w), b = moll.eval_Cd(w);
            MatrixField diff(a.size());
            for (std::size_t j = 0; j < a.size(); ++j) diff[j] = a[j] - b[j];
            const double rel = field_hs_norm(diff, g.dk()) / field_hs_norm(a, g.dk());
            worst = std::max(worst, rel);
            best = std::min(best, rel);
        }
    }
    return {worst <= 0.05, "HS-relative difference root-resolved vs mollified on 20 random states (eta 0 and 1/2): " +
                               fmt("%.1f", 100 * best) + "% to " + fmt("%.1f", 100 * worst) + "% (limit 5%)"};
}

Verdict criterion_unitary_covariance() {
    double worst = 0.0;
    std::mt19937_64 rng(555);
    for (double eta : {0.0, 0.5}) {
        BrillouinGrid g(32);
        Dispersion d{eta};
        CollisionConfig cfg;
        auto quad = CollisionQuadrature::build(g, d, cfg.tol_root, cfg.scan_factor);
        CollisionOperator op(g, d, PairPotential::inverse_cosine(), &quad, cfg);
        for (int t = 0; t < 5; ++t) {
            auto w = testing::random_field(rng, g, 3);
            CMatrix u = testing::random_unitary(rng, 3);
            auto c = op.eval_C(w), cu = op.eval_C(w.conjugated(u));
            for (int j = 0; j < g.size(); ++j) worst = std::max(worst, (cu[j] - u.adjoint() * c[j] * u).norm());
        }
    }
    return {worst <= 1e-10, "max |C(U*WU) - U*C(W)U| over 10 random states and SU(3) rotations: " + sci(worst)};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "conservation", criterion_conservation},
        {2, "H-theorem", criterion_h_theorem},
        {3, "positivity lemma", criterion_positivity_lemma},
        {4, "stationarity", criterion_stationarity},
        {5, "Legendre round trips", criterion_round_trips},
        {6, "negative temperature", criterion_negative_temperature},
        {7, "potential effect", criterion_potential_effect},
        {8, "prethermalization ordering", criterion_prethermalization},
        {9, "Wick/permanent oracle", criterion_wick_oracle},
        {10, "dual-mode collision agreement", criterion_dual_mode},
        {11, "unitary covariance", criterion_unitary_covariance},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

    int failures = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        auto t0 = Clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
