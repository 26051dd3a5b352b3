#include "bhk/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bhk/output.hpp"
#include "bhk/parallel.hpp"
#include "bhk/quasifree.hpp"

namespace bhk {

namespace fs = std::filesystem;

Model make_model(const ScenarioConfig& cfg, double eta, const PairPotential& pot) {
    Model m{BrillouinGrid(cfg.grid_points), Dispersion{eta}, pot, std::nullopt, std::nullopt};
    if (cfg.collision.mode == CollisionMode::RootResolved)
        m.quad = CollisionQuadrature::load_or_build(cfg.cache_dir, m.grid, m.disp, cfg.collision.tol_root,
                                                    cfg.collision.scan_factor);
    m.op.emplace(m.grid, m.disp, m.pot, m.quad ? &*m.quad : nullptr, cfg.collision);
    return m;
}

Prediction predict_stationary(const ConservedCharges& c, const Dispersion& disp, ThermalBranch branch) {
    Prediction p;
    if (disp.eta == 0.0) {
        p.profile = solve_nonthermal(c, {}, &p.report);
        p.state = build_be_state(*p.profile, c.basis);
    } else {
        p.thermal = solve_thermal(c, disp, branch, {}, &p.report);
        p.state = build_be_state(*p.thermal, c.grid, disp, c.basis);
    }
    return p;
}

DecayFit fit_offdiag_decay(const TrajectoryRecord& rec, double t0, double t1, double floor, double* win_lo,
                           double* win_hi) {
    if (rec.samples.empty()) throw DomainError("decay fit: empty trajectory");
    if (!(t1 > t0)) {
        const double ref = rec.samples.front().offdiag_norm;
        double tc = rec.samples.back().t;
        for (const auto& s : rec.samples) {
            if (s.offdiag_norm <= floor * ref) {
                tc = s.t;
                break;
            }
        }
        t0 = 0.5 * tc;
        t1 = tc;
    }
    if (win_lo) *win_lo = t0;
    if (win_hi) *win_hi = t1;
    std::vector<std::pair<double, double>> series;
    for (const auto& s : rec.samples)
        if (s.t >= t0 - 1e-12 && s.t <= t1 + 1e-12) series.emplace_back(s.t, s.offdiag_norm);
    return fit_decay_rate(series);
}

double time_to_entropy(const TrajectoryRecord& rec, double s_target, double frac) {
    if (rec.samples.empty()) return -1.0;
    const double gap = std::abs(s_target - rec.samples.front().entropy);
    for (const auto& s : rec.samples)
        if (std::abs(s_target - s.entropy) <= frac * gap) return s.t;
    return -1.0;
}

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outputs {
    fs::path dir;
    json files = json::array();
    fs::path path(const std::string& name) {
        files.push_back(name);
        return dir / name;
    }
};

json charges_json(const ConservedCharges& c) {
    json j;
    j["energy"] = c.energy;
    j["eps"] = std::vector<double>(c.eps.data(), c.eps.data() + c.eps.size());
    double hmax = 0.0;
    for (double v : c.h_profile) hmax = std::max(hmax, std::abs(v));
    j["h_max"] = hmax;
    return j;
}

json prediction_json(const Prediction& p) {
    json j;
    if (p.profile) {
        j["kind"] = "nonthermal";
        j["a"] = p.profile->a;
    }
    if (p.thermal) {
        j["kind"] = "thermal";
        j["beta"] = p.thermal->beta;
        j["mu"] = p.thermal->mu;
    }
    j["solver_iterations"] = p.report.iterations;
    j["solver_residual"] = p.report.residual;
    j["entropy"] = entropy(p.state);
    return j;
}

json trajectory_summary(const TrajectoryRecord& rec, const ConservedCharges& c0) {
    json j;
    const auto& first = rec.samples.front();
    const auto& last = rec.samples.back();
    double e_drift = 0.0, h_drift = 0.0, min_prod = INFINITY, min_eig = INFINITY, min_ds = INFINITY;
    std::vector<double> eps_drift(first.eps.size(), 0.0);
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        const auto& s = rec.samples[i];
        e_drift = std::max(e_drift, std::abs(s.energy - first.energy) / std::abs(first.energy));
        for (std::size_t k = 0; k < s.eps.size(); ++k)
            eps_drift[k] = std::max(eps_drift[k], std::abs(s.eps[k] - first.eps[k]) / std::abs(first.eps[k]));
        h_drift = std::max(h_drift, s.h_max_drift);
        min_prod = std::min(min_prod, s.entropy_production);
        min_eig = std::min(min_eig, s.min_eig);
        if (i > 0) min_ds = std::min(min_ds, s.entropy - rec.samples[i - 1].entropy);
    }
    double hscale = 0.0;
    for (double v : c0.h_profile) hscale = std::max(hscale, std::abs(v));
    j["t_final"] = last.t;
    j["steps"] = rec.steps;
    j["rejections"] = rec.rejections;
    j["stopped_early"] = rec.stopped_early;
    j["energy_rel_drift"] = e_drift;
    j["eps_rel_drift"] = eps_drift;
    j["h_rel_drift"] = hscale > 0.0 ? h_drift / hscale : h_drift;
    j["min_entropy_production"] = min_prod;
    j["min_entropy_increment"] = rec.samples.size() > 1 ? min_ds : 0.0;
    j["min_eigenvalue"] = min_eig;
    j["entropy_initial"] = first.entropy;
    j["entropy_final"] = last.entropy;
    j["hs_dist_final"] = last.hs_dist_to_stationary;
    j["offdiag_initial"] = first.offdiag_norm;
    j["offdiag_final"] = last.offdiag_norm;
    return j;
}

EvolveOptions evolve_options(const ScenarioConfig& cfg, const WignerField* stationary, const CMatrix& basis) {
    EvolveOptions o;
    o.t_end = cfg.t_end;
    o.dt = cfg.dt;
    o.sample_every = cfg.sample_every;
    o.snapshot_times = cfg.snapshot_times;
    o.step.psd_reject = cfg.psd_reject;
    o.stationary = stationary;
    o.basis = basis;
    o.stationarity_tol = cfg.stationarity_tol;
    return o;
}

void write_snapshots(Outputs& out, const TrajectoryRecord& rec, const std::string& suffix = "") {
    for (const auto& w : rec.snapshots) {
        const std::string tag = time_tag(w.time()) + suffix;
        write_wigner_csv(out.path("wigner_t" + tag + ".csv").string(), w);
        write_spectral_csv(out.path("spectral_t" + tag + ".csv").string(), w);
    }
}

void write_prediction(Outputs& out, const std::string& name, const Prediction& p) {
    write_stationary_csv(out.path(name).string(), p.state, p.profile ? &*p.profile : nullptr,
                         p.thermal ? &*p.thermal : nullptr);
}

json fit_json(const TrajectoryRecord& rec, const ScenarioConfig& cfg) {
    json j;
    try {
        double lo = 0, hi = 0;
        DecayFit f = fit_offdiag_decay(rec, cfg.fit_t0, cfg.fit_t1, cfg.fit_floor, &lo, &hi);
        j = {{"rate", f.rate}, {"r_squared", f.r_squared}, {"samples", f.samples}, {"window", {lo, hi}}};
    } catch (const DomainError& e) {
        j["error"] = e.what();
    }
    return j;
}

WignerField initial_state(const ScenarioConfig& cfg, const BrillouinGrid& g, bool shift) {
    InitialStateParams p = cfg.initial;
    p.shift_half = shift;
    return build_initial_state(g, cfg.n, p, cfg.tol_psd);
}

void run_relax(const ScenarioConfig& cfg, Outputs& out, json& res, bool shift) {
    const PairPotential pot = cfg.make_potential();
    auto t0 = Clock::now();
    Model m = make_model(cfg, cfg.eta, pot);
    res["setup_seconds"] = seconds_since(t0);
    if (m.quad) res["quadrature"] = {{"roots", m.quad->root_count()}, {"pairs", m.quad->pair_count()}};
    res["collision_diagnostics"] = {{"quadruples", m.op->diagnostics().quadruples},
                                    {"dropped_roots", m.op->diagnostics().dropped_roots},
                                    {"degenerate_pairs", m.op->diagnostics().degenerate_pairs}};
    const WignerField w0 = initial_state(cfg, m.grid, shift);
    const ConservedCharges c0 = charges(w0, m.disp);
    res["charges"] = charges_json(c0);
    Prediction pred = predict_stationary(c0, m.disp, cfg.thermal_branch);
    res["stationary"] = prediction_json(pred);
    if (pred.thermal) res["beta"] = pred.thermal->beta;
    write_prediction(out, "stationary.csv", pred);

    t0 = Clock::now();
    EvolveOptions o = evolve_options(cfg, &pred.state, c0.basis);
    EvolveResult r = evolve(w0, *m.op, o);
    res["evolve_seconds"] = seconds_since(t0);
    write_timeline_csv(out.path("timeline.csv").string(), r.record, w0.dim());
    write_snapshots(out, r.record);
    res["trajectory"] = trajectory_summary(r.record, c0);
    res["decay_fit"] = fit_json(r.record, cfg);
}

void run_compare_potentials(const ScenarioConfig& cfg, Outputs& out, json& res) {
    std::vector<std::pair<std::string, PairPotential>> pots = {{"onsite", PairPotential::onsite()},
                                                               {"inverse-cosine", PairPotential::inverse_cosine()}};
    std::vector<WignerField> finals;
    std::vector<double> rates;
    for (const auto& [name, pot] : pots) {
        auto t0 = Clock::now();
        Model m = make_model(cfg, cfg.eta, pot);
        const WignerField w0 = initial_state(cfg, m.grid, cfg.initial.shift_half);
        const ConservedCharges c0 = charges(w0, m.disp);
        Prediction pred = predict_stationary(c0, m.disp, cfg.thermal_branch);
        if (name == pots.front().first) {
            res["stationary"] = prediction_json(pred);
            write_prediction(out, "stationary.csv", pred);
        }
        EvolveResult r = evolve(w0, *m.op, evolve_options(cfg, &pred.state, c0.basis));
        write_timeline_csv(out.path("timeline_" + name + ".csv").string(), r.record, w0.dim());
        write_snapshots(out, r.record, "_" + name);
        json pj;
        pj["trajectory"] = trajectory_summary(r.record, c0);
        pj["decay_fit"] = fit_json(r.record, cfg);
        pj["seconds"] = seconds_since(t0);
        rates.push_back(pj["decay_fit"].value("rate", NAN));
        res["potentials"][name] = pj;
        finals.push_back(r.final_state);
    }
    res["slower_for_inverse_cosine"] = rates[1] < rates[0];
    res["final_hs_distance"] = hs_distance(finals[0], finals[1]);
}

void run_negative_temperature(const ScenarioConfig& cfg, Outputs& out, json& res) {
    const BrillouinGrid g(cfg.grid_points);
    const Dispersion disp{cfg.eta};
    const WignerField w = initial_state(cfg, g, false);
    const WignerField ws = initial_state(cfg, g, true);
    const ConservedCharges c = charges(w, disp), cs = charges(ws, disp);
    const ThermalParams t = solve_thermal(c, disp, ThermalBranch::Auto);
    const ThermalParams ts = solve_thermal(cs, disp, ThermalBranch::Auto);
    res["beta_unshifted"] = t.beta;
    res["beta_shifted"] = ts.beta;
    Prediction p = predict_stationary(c, disp, ThermalBranch::Auto);
    Prediction ps = predict_stationary(cs, disp, ThermalBranch::Auto);
    res["shifted_vs_shifted_copy_hs"] = hs_distance(ps.state, p.state.shifted_half());
    write_prediction(out, "stationary_unshifted.csv", p);
    if (cfg.t_end > 0.0) {
        run_relax(cfg, out, res, true);
    } else {
        write_prediction(out, "stationary.csv", ps);
        res["stationary"] = prediction_json(ps);
    }
    res["beta"] = ts.beta;
}

void run_prethermalization(const ScenarioConfig& cfg, Outputs& out, json& res) {
    const PairPotential pot = cfg.make_potential();
    Model m = make_model(cfg, cfg.eta, pot);
    const WignerField w0 = initial_state(cfg, m.grid, cfg.initial.shift_half);
    const ConservedCharges c0 = charges(w0, m.disp);
    const NonthermalProfile nt = solve_nonthermal(c0);
    const WignerField wnt = build_be_state(nt, c0.basis);
    const ThermalParams th = solve_thermal(c0, m.disp, cfg.thermal_branch);
    const WignerField wth = build_be_state(th, m.grid, m.disp, c0.basis);
    const double s_nt = entropy(wnt), s_th = entropy(wth);
    res["entropy_nonthermal"] = s_nt;
    res["entropy_thermal"] = s_th;
    res["beta"] = th.beta;
    Prediction pred;
    pred.state = wth;
    pred.thermal = th;
    write_prediction(out, "stationary.csv", pred);

    EvolveOptions o = evolve_options(cfg, &wth, c0.basis);
    CsvWriter pre(out.path("prethermal.csv").string(), {"t", "entropy", "hs_dist_nonthermal", "hs_dist_thermal"});
    o.observer = [&](const WignerField& w, const TrajectorySample& s) {
        pre.row({s.t, s.entropy, hs_distance(w, wnt), s.hs_dist_to_stationary});
    };
    EvolveResult r = evolve(w0, *m.op, o);
    pre.close();
    write_timeline_csv(out.path("timeline.csv").string(), r.record, w0.dim());
    write_snapshots(out, r.record);
    res["trajectory"] = trajectory_summary(r.record, c0);
    const double t_nt = time_to_entropy(r.record, s_nt);
    const double t_th = time_to_entropy(r.record, s_th);
    res["t_nonthermal_1pct"] = t_nt;
    res["t_thermal_1pct"] = t_th;
    res["timescale_ratio"] = (t_nt > 0.0 && t_th > 0.0) ? t_th / t_nt : NAN;
}

void run_stationary_only(const ScenarioConfig& cfg, Outputs& out, json& res) {
    const BrillouinGrid g(cfg.grid_points);
    const Dispersion disp{cfg.eta};
    if (cfg.charges_source == "explicit") {
        std::vector<double> h = cfg.explicit_h.size() == 1 ? std::vector<double>(g.size(), 0.0) : cfg.explicit_h;
        const ConservedCharges c = charges_from_profile(g, h, cfg.explicit_eps);
        Prediction p;
        p.profile = solve_nonthermal(c, {}, &p.report);
        p.state = build_be_state(*p.profile, c.basis);
        res["stationary"] = prediction_json(p);
        write_prediction(out, "stationary.csv", p);
        return;
    }
    const WignerField w0 = initial_state(cfg, g, cfg.initial.shift_half);
    const ConservedCharges c = charges(w0, disp);
    res["charges"] = charges_json(c);
    Prediction p = predict_stationary(c, disp, cfg.thermal_branch);
    res["stationary"] = prediction_json(p);
    if (p.thermal) res["beta"] = p.thermal->beta;
    write_prediction(out, "stationary.csv", p);
}

void run_oracle_suite(const ScenarioConfig& cfg, Outputs& out, json& res) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss;
    std::ofstream csv(out.path("oracle.csv"));
    csv << "check,value_re,value_im,reference_re,reference_im,rel_err,tolerance,passed\n";
    int failed = 0, total = 0;
    auto record = [&](const std::string& name, cd v, cd ref, double tol) {
        const double err = std::abs(v - ref) / std::max(std::abs(ref), 1e-300);
        const bool ok = err <= tol;
        csv << name << ',' << format_real(v.real()) << ',' << format_real(v.imag()) << ',' << format_real(ref.real())
            << ',' << format_real(ref.imag()) << ',' << format_real(err) << ',' << format_real(tol) << ','
            << (ok ? 1 : 0) << '\n';
        ++total;
        if (!ok) ++failed;
    };

    // Single mode: <n^2> = 2W^2 + W.
    {
        const double e = 0.5 + std::abs(gauss(rng));
        OneParticleHamiltonian h(ComplexMatrix::Constant(1, 1, e));
        const double w = 1.0 / std::expm1(e);
        record("single_mode_n2", wick_moment(h, parse_moment_request("c0 a0 c0 a0")).value, 2 * w * w + w, 1e-12);
    }
    const int trials = 5;
    for (int t = 0; t < trials; ++t) {
        ComplexMatrix a(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = cd(gauss(rng), gauss(rng));
        ComplexMatrix hm = 0.2 * a * a.adjoint() + 1.2 * ComplexMatrix::Identity(3, 3);
        OneParticleHamiltonian h(hm);
        ComplexMatrix g = two_point(h), gb = brute_force_two_point(h, 60);
        record("two_point_" + std::to_string(t), cd((g - gb).norm(), 0.0) + gb.norm(), gb.norm(), 1e-8);
        for (int pairs = 1; pairs <= 3; ++pairs) {
            std::vector<LadderFactor> req;
            for (int p = 0; p < pairs; ++p) {
                req.push_back({static_cast<int>(rng() % 3), Ladder::Create});
                req.push_back({static_cast<int>(rng() % 3), Ladder::Annihilate});
            }
            std::shuffle(req.begin(), req.end(), rng);
            record("moment_" + std::to_string(t) + "_" + std::to_string(pairs), wick_moment(h, req).value,
                   brute_force_moment(h, req, 40), 1e-6);
        }
    }
    csv.close();
    res["checks"] = total;
    res["failed"] = failed;
    if (failed) throw DomainError("oracle suite: " + std::to_string(failed) + " of " + std::to_string(total) +
                                  " checks failed (see oracle.csv)");
}

}  // namespace

int run_scenario(const ScenarioConfig& cfg, json* meta_out) {
    json meta;
    meta["version"] = kVersion;
    meta["config"] = cfg.to_json();
    meta["threads"] = num_threads();
    Outputs out;
    out.dir = cfg.output_dir;
    int status = 0;
    const auto t0 = Clock::now();
    json res = json::object();
    try {
        cfg.validate();
        fs::create_directories(out.dir);
        switch (cfg.scenario) {
            case Scenario::Relax: run_relax(cfg, out, res, cfg.initial.shift_half); break;
            case Scenario::ComparePotentials: run_compare_potentials(cfg, out, res); break;
            case Scenario::NegativeTemperature: run_negative_temperature(cfg, out, res); break;
            case Scenario::Prethermalization: run_prethermalization(cfg, out, res); break;
            case Scenario::StationaryOnly: run_stationary_only(cfg, out, res); break;
            case Scenario::OracleSuite: run_oracle_suite(cfg, out, res); break;
        }
        meta["status"] = "ok";
        meta["partial"] = false;
    } catch (const std::exception& e) {
        meta["status"] = "error";
        meta["error"] = e.what();
        meta["partial"] = true;
        status = 1;
    }
    meta["results"] = res;
    meta["files"] = out.files;
    meta["wall_seconds"] = seconds_since(t0);
    try {
        fs::create_directories(out.dir);
        std::ofstream f(out.dir / "run_meta.json");
        f << meta.dump(2) << '\n';
        if (!f) throw std::runtime_error("cannot write run_meta.json");
    } catch (const std::exception& e) {
        meta["meta_write_error"] = e.what();
        status = 1;
    }
    if (meta_out) *meta_out = meta;
    return status;
}

std::vector<ValidationCheck> validate_scenario(const ScenarioConfig& cfg) {
    std::vector<ValidationCheck> out;
    auto check = [&](const std::string& name, auto&& fn) {
        ValidationCheck c{name, false, ""};
        try {
            c.message = fn();
            c.passed = true;
        } catch (const std::exception& e) {
            c.message = e.what();
        }
        out.push_back(c);
        return c.passed;
    };

    check("config", [&] {
        cfg.validate();
        return std::string("all parameters in range");
    });
    const bool grid_ok = check("grid symmetry", [&] {
        if (cfg.grid_points % 2 != 0)
            throw DomainError("N = " + std::to_string(cfg.grid_points) +
                              " is odd; the reflection k -> 1/2 - k does not map the grid onto itself");
        BrillouinGrid g(cfg.grid_points);
        for (int j = 0; j < g.size(); ++j) {
            if (g.reflect(g.reflect(j)) != j) throw DomainError("reflection is not an involution on the grid");
            if (std::abs(wrap_momentum(0.5 - g.k(j)) - g.k(g.reflect(j))) > 1e-12)
                throw DomainError("reflection k -> 1/2 - k misses grid point " + std::to_string(j));
            if (g.shift_half(g.shift_half(j)) != j) throw DomainError("half shift is not an involution");
        }
        return "N = " + std::to_string(g.size()) + ", reflection and half shift are grid bijections";
    });
    if (!grid_ok) return out;
    const BrillouinGrid g(cfg.grid_points);
    const Dispersion disp{cfg.eta};

    check("initial state PSD", [&] {
        WignerField w = initial_state(cfg, g, cfg.initial.shift_half);
        std::ostringstream os;
        os << "min eigenvalue " << w.min_eigenvalue();
        return os.str();
    });
    if (cfg.collision.mode == CollisionMode::RootResolved) {
        check("quadrature roots", [&] {
            auto q = CollisionQuadrature::build(g, disp, cfg.collision.tol_root, cfg.collision.scan_factor);
            CollisionOperator op(g, disp, cfg.make_potential(), &q, cfg.collision);
            std::ostringstream os;
            os << q.root_count() << " roots over " << q.pair_count() << " pairs, "
               << op.diagnostics().dropped_roots << " dropped (|g'| < g_min), " << op.diagnostics().degenerate_pairs
               << " degenerate pairs";
            return os.str();
        });
    }
    check("stationary feasibility", [&] {
        ConservedCharges c;
        if (cfg.charges_source == "explicit") {
            std::vector<double> h = cfg.explicit_h.size() == 1 ? std::vector<double>(g.size(), 0.0) : cfg.explicit_h;
            c = charges_from_profile(g, h, cfg.explicit_eps);
            solve_nonthermal(c);
            return std::string("nonthermal profile solved");
        }
        c = charges(initial_state(cfg, g, cfg.initial.shift_half), disp);
        Prediction p = predict_stationary(c, disp, cfg.thermal_branch);
        std::ostringstream os;
        if (p.thermal)
            os << "thermal state, beta = " << p.thermal->beta;
        else
            os << "nonthermal profile solved";
        os << " (residual " << p.report.residual << ")";
        return os.str();
    });
    return out;
}

}  // namespace bhk
