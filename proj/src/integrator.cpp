#include "bhk/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bhk {

namespace {

MatrixField axpy(const WignerField& w, double a, const MatrixField& k) {
    MatrixField out(w.size());
    for (int j = 0; j < w.size(); ++j) out[j] = w[j] + a * k[j];
    return out;
}

WignerField rk4_split(const WignerField& w, double dt, const CollisionOperator& op, const StepOptions& opt,
                      int depth, const MatrixField* k1, StepInfo& info) {
    WignerField next = rk4_step_raw(w, dt, op, k1);
    info.evaluations += k1 ? 3 : 4;
    const double lmin = next.min_eigenvalue();
    if (lmin >= -opt.psd_reject) {
        info.min_eigenvalue = std::min(info.min_eigenvalue, lmin);
        return next;
    }
    if (depth >= opt.max_halvings) {
        std::ostringstream os;
        os << "rk4_step: step size underflow at t=" << w.time() << " (dt=" << dt << ", min eigenvalue " << lmin
           << ")";
        throw DomainError(os.str());
    }
    ++info.rejections;
    WignerField mid = rk4_split(w, 0.5 * dt, op, opt, depth + 1, nullptr, info);
    return rk4_split(mid, 0.5 * dt, op, opt, depth + 1, nullptr, info);
}

}  // namespace

WignerField rk4_step_raw(const WignerField& w, double dt, const CollisionOperator& op, const MatrixField* k1) {
    const BrillouinGrid& g = w.grid();
    MatrixField a = k1 ? *k1 : op.eval_C(w);
    MatrixField b = op.eval_C(WignerField(g, axpy(w, 0.5 * dt, a), w.time() + 0.5 * dt));
    MatrixField c = op.eval_C(WignerField(g, axpy(w, 0.5 * dt, b), w.time() + 0.5 * dt));
    MatrixField d = op.eval_C(WignerField(g, axpy(w, dt, c), w.time() + dt));
    MatrixField out(w.size());
    for (int j = 0; j < w.size(); ++j) out[j] = w[j] + (dt / 6.0) * (a[j] + 2.0 * b[j] + 2.0 * c[j] + d[j]);
    return WignerField(g, std::move(out), w.time() + dt);
}

WignerField rk4_step(const WignerField& w, double dt, const CollisionOperator& op, const StepOptions& opt,
                     StepInfo* info) {
    if (!(dt > 0.0)) throw DomainError("rk4_step: dt must be positive");
    StepInfo local;
    local.min_eigenvalue = 0.0;
    WignerField out = rk4_split(w, dt, op, opt, 0, nullptr, local);
    local.min_eigenvalue = out.min_eigenvalue();
    if (info) *info = local;
    return out;
}

EvolveResult evolve(const WignerField& w0, const CollisionOperator& op, const EvolveOptions& opt) {
    if (!(opt.dt > 0.0)) throw DomainError("evolve: dt must be positive");
    if (opt.t_end < 0.0) throw DomainError("evolve: t_end must be nonnegative");
    if (opt.sample_every < 1) throw DomainError("evolve: sample_every must be at least 1");
    const BrillouinGrid& g = w0.grid();
    const Dispersion& disp = op.dispersion();

    const ConservedCharges c0 = charges(w0, disp);
    const CMatrix basis = opt.basis.size() ? opt.basis : c0.basis;

    EvolveResult res;
    auto& rec = res.record;
    std::vector<double> snaps = opt.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;

    MatrixField k1;
    bool have_k1 = false;
    WignerField last_sample;

    auto sample = [&](const WignerField& w) {
        TrajectorySample s;
        s.t = w.time();
        s.entropy = entropy(w, opt.step.psd_reject);
        if (opt.record_production) {
            k1 = op.eval_C(w);
            have_k1 = true;
            s.entropy_production = entropy_production(w, k1);
        }
        const ConservedCharges c = charges(w, disp);
        s.energy = c.energy;
        s.eps.assign(c.eps.data(), c.eps.data() + c.eps.size());
        double drift = 0.0;
        for (int j = 0; j < g.size(); ++j) drift = std::max(drift, std::abs(c.h_profile[j] - c0.h_profile[j]));
        s.h_max_drift = drift;
        if (opt.stationary) s.hs_dist_to_stationary = hs_distance(w, *opt.stationary);
        s.offdiag_norm = offdiag_norm(w, basis);
        s.min_eig = w.min_eigenvalue();
        if (!std::isfinite(s.entropy)) throw DomainError("evolve: entropy is not finite");
        rec.samples.push_back(s);
        if (opt.observer) opt.observer(w, s);
    };
    auto take_snapshots = [&](const WignerField& w) {
        while (next_snap < snaps.size() && snaps[next_snap] <= w.time() + 0.5 * opt.dt) {
            rec.snapshots.push_back(w);
            ++next_snap;
        }
    };

    WignerField w = w0;
    const long nsteps = std::lround(std::ceil(opt.t_end / opt.dt - 1e-9));
    sample(w);
    take_snapshots(w);
    last_sample = w;
    for (long step = 1; step <= nsteps; ++step) {
        const double t_target = std::min(opt.t_end, step * opt.dt);
        const double h = t_target - w.time();
        StepInfo info;
        WignerField next;
        if (have_k1) {
            next = rk4_step_raw(w, h, op, &k1);
            have_k1 = false;
            if (next.min_eigenvalue() < -opt.step.psd_reject) next = rk4_step(w, h, op, opt.step, &info);
        } else {
            next = rk4_step(w, h, op, opt.step, &info);
        }
        next.set_time(t_target);
        w = std::move(next);
        rec.rejections += info.rejections;
        ++rec.steps;
        if (step % opt.sample_every == 0 || step == nsteps) {
            sample(w);
            if (opt.stationarity_tol > 0.0 && hs_distance(w, last_sample) < opt.stationarity_tol) {
                rec.stopped_early = step != nsteps;
                take_snapshots(w);
                break;
            }
            last_sample = w;
        }
        take_snapshots(w);
    }
    res.final_state = std::move(w);
    return res;
}

}  // namespace bhk
