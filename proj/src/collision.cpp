#include "bhk/collision.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "bhk/parallel.hpp"

namespace bhk {

static_assert(std::endian::native == std::endian::little, "quadrature cache assumes a little-endian host");

CollisionMode collision_mode_from_name(const std::string& name) {
    if (name == "root-resolved" || name == "roots") return CollisionMode::RootResolved;
    if (name == "mollified") return CollisionMode::Mollified;
    throw DomainError("unknown collision mode '" + name + "'");
}

std::string to_string(CollisionMode m) { return m == CollisionMode::RootResolved ? "root-resolved" : "mollified"; }

void CollisionConfig::validate() const {
    if (!(tol_root > 0.0)) throw DomainError("collision.tol_root must be positive");
    if (!(g_min > 0.0)) throw DomainError("collision.g_min must be positive");
    if (!(c_moll > 0.0)) throw DomainError("collision.c_moll must be positive");
    if (!(c_pv > 0.0)) throw DomainError("collision.c_pv must be positive");
    if (scan_factor < 8) throw DomainError("collision.scan_factor must be at least 8");
}

double CollisionConfig::mollifier_width(const BrillouinGrid& g, const Dispersion& d) const {
    return c_moll * g.dk() * d.max_abs_domega();
}

double CollisionConfig::pv_width(const BrillouinGrid& g, const Dispersion& d) const {
    return c_pv * g.dk() * d.max_abs_domega();
}

double EnergyRoot::weight() const { return 1.0 / std::abs(gprime); }

double energy_mismatch(const Dispersion& disp, double k1, double k2, double k3) {
    return disp.omega(k1) - disp.omega(k2) + disp.omega(k3) - disp.omega(k1 - k2 + k3);
}

namespace {

// Every root of g on the circle, unfiltered by |g'|. Roots that fail tol_root are discarded.
std::vector<EnergyRoot> find_roots(const Dispersion& disp, const BrillouinGrid& grid, double k1, double k2,
                                   double tol_root, int scan_factor) {
    const int m = scan_factor * grid.size();
    const double h = 1.0 / m;
    // Scan nodes are offset from grid nodes so grid roots fall inside subintervals.
    const double start = -0.5 + 0.3819660112501051 * h;
    const double o12 = disp.omega(k1) - disp.omega(k2);
    auto g = [&](double k3) { return o12 + disp.omega(k3) - disp.omega(k1 - k2 + k3); };

    std::vector<double> found;
    double a = start, ga = g(a);
    for (int i = 0; i < m; ++i) {
        double b = start + (i + 1) * h;
        double gb = g(b);
        if (ga == 0.0) {
            found.push_back(a);
        } else if ((ga < 0.0) != (gb < 0.0) && gb != 0.0) {
            boost::uintmax_t iters = 200;
            auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-16; };
            auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
            double best = r.first, gbest = std::abs(g(r.first));
            for (double c : {r.second, 0.5 * (r.first + r.second)}) {
                double gc = std::abs(g(c));
                if (gc < gbest) {
                    gbest = gc;
                    best = c;
                }
            }
            found.push_back(best);
        }
        a = b;
        ga = gb;
    }

    std::vector<EnergyRoot> out;
    for (double k3 : found) {
        k3 = wrap_momentum(k3);
        int j = grid.on_grid(k3, 1e-10);
        if (j >= 0 && std::abs(g(grid.k(j))) <= tol_root) k3 = grid.k(j);
        if (std::abs(g(k3)) > tol_root) continue;
        bool dup = false;
        for (const auto& r : out) {
            if (std::abs(wrap_momentum(r.k3 - k3)) < 1e-10) dup = true;
        }
        if (dup) continue;
        EnergyRoot r;
        r.k3 = k3;
        r.gprime = disp.domega(k3) - disp.domega(k1 - k2 + k3);
        out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const EnergyRoot& x, const EnergyRoot& y) { return x.k3 < y.k3; });
    return out;
}

bool degenerate_pair(double k1, double k2) { return std::abs(wrap_momentum(k1 - k2)) < 1e-14; }

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

constexpr char kMagic[8] = {'B', 'H', 'K', 'Q', 'U', 'A', 'D', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DomainError("quadrature cache truncated");
    return v;
}

}  // namespace

RootSet resolve_energy_delta(const Dispersion& disp, const BrillouinGrid& grid, double k1, double k2,
                             const CollisionConfig& cfg) {
    RootSet rs;
    if (degenerate_pair(k1, k2)) {
        rs.degenerate = true;
        return rs;
    }
    for (const auto& r : find_roots(disp, grid, k1, k2, cfg.tol_root, cfg.scan_factor)) {
        if (std::abs(r.gprime) < cfg.g_min)
            ++rs.dropped;
        else
            rs.roots.push_back(r);
    }
    return rs;
}

CollisionQuadrature CollisionQuadrature::build(const BrillouinGrid& grid, const Dispersion& disp,
                                               double tol_root, int scan_factor) {
    CollisionQuadrature q;
    q.grid_ = grid;
    q.eta_ = disp.eta;
    q.tol_root_ = tol_root;
    const int n = grid.size();
    const std::size_t npairs = static_cast<std::size_t>(n) * (n - 1) / 2;
    std::vector<std::vector<EnergyRoot>> per(npairs);
    parallel_for(n, [&](int i1) {
        for (int i2 = i1 + 1; i2 < n; ++i2) {
            per[q.pair_index(i1, i2)] = find_roots(disp, grid, grid.k(i1), grid.k(i2), tol_root, scan_factor);
        }
    });
    q.offset_.assign(npairs + 1, 0);
    for (std::size_t p = 0; p < npairs; ++p) {
        q.offset_[p + 1] = q.offset_[p] + per[p].size();
        for (const auto& r : per[p]) {
            q.k3_.push_back(r.k3);
            q.weight_.push_back(r.weight());
        }
    }
    return q;
}

std::size_t CollisionQuadrature::pair_index(int i1, int i2) const {
    const std::size_t n = grid_.size();
    const std::size_t a = i1;
    return a * n - a * (a + 1) / 2 + (i2 - i1 - 1);
}

std::uint64_t CollisionQuadrature::cache_key(int n, double eta, double tol_root) {
    std::uint64_t h = fnv1a(&n, sizeof n);
    h = fnv1a(&eta, sizeof eta, h);
    return fnv1a(&tol_root, sizeof tol_root, h);
}

void CollisionQuadrature::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DomainError("cannot write quadrature cache " + path);
    os.write(kMagic, sizeof kMagic);
    put(os, kVersion);
    put(os, static_cast<std::int32_t>(grid_.size()));
    put(os, eta_);
    put(os, tol_root_);
    put(os, static_cast<std::uint64_t>(pair_count()));
    put(os, static_cast<std::uint64_t>(root_count()));
    for (std::size_t p = 0; p < pair_count(); ++p) put(os, static_cast<std::uint32_t>(end(p) - begin(p)));
    os.write(reinterpret_cast<const char*>(k3_.data()), static_cast<std::streamsize>(k3_.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(weight_.data()),
             static_cast<std::streamsize>(weight_.size() * sizeof(double)));
    if (!os) throw DomainError("failed writing quadrature cache " + path);
}

CollisionQuadrature CollisionQuadrature::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DomainError("cannot open quadrature cache " + path);
    char magic[sizeof kMagic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw DomainError("bad quadrature cache magic");
    if (get<std::uint32_t>(is) != kVersion) throw DomainError("unsupported quadrature cache version");
    CollisionQuadrature q;
    q.grid_ = BrillouinGrid(get<std::int32_t>(is));
    q.eta_ = get<double>(is);
    q.tol_root_ = get<double>(is);
    auto npairs = get<std::uint64_t>(is);
    auto nroots = get<std::uint64_t>(is);
    const auto n = static_cast<std::uint64_t>(q.grid_.size());
    if (npairs != n * (n - 1) / 2) throw DomainError("quadrature cache pair count mismatch");
    q.offset_.assign(npairs + 1, 0);
    for (std::uint64_t p = 0; p < npairs; ++p) q.offset_[p + 1] = q.offset_[p] + get<std::uint32_t>(is);
    if (q.offset_.back() != nroots) throw DomainError("quadrature cache root count mismatch");
    q.k3_.resize(nroots);
    q.weight_.resize(nroots);
    is.read(reinterpret_cast<char*>(q.k3_.data()), static_cast<std::streamsize>(nroots * sizeof(double)));
    is.read(reinterpret_cast<char*>(q.weight_.data()), static_cast<std::streamsize>(nroots * sizeof(double)));
    if (!is) throw DomainError("quadrature cache truncated");
    return q;
}

CollisionQuadrature CollisionQuadrature::load_or_build(const std::string& dir, const BrillouinGrid& grid,
                                                       const Dispersion& disp, double tol_root, int scan_factor) {
    if (dir.empty()) return build(grid, disp, tol_root, scan_factor);
    std::ostringstream name;
    name << "quad_" << std::hex << cache_key(grid.size(), disp.eta, tol_root) << ".bin";
    std::filesystem::path path = std::filesystem::path(dir) / name.str();
    if (std::filesystem::exists(path)) {
        auto q = load(path.string());
        if (q.grid().size() == grid.size() && q.eta() == disp.eta && q.tol_root() == tol_root) return q;
    }
    auto q = build(grid, disp, tol_root, scan_factor);
    std::filesystem::create_directories(dir);
    q.save(path.string());
    return q;
}

// ---------------------------------------------------------------------------
// Kernel pieces

CMatrix eval_A_quad(const CMatrix& w1, const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double v23,
                    double v34) {
    if (w1.rows() != w2.rows() || w2.rows() != w3.rows() || w3.rows() != w4.rows())
        throw DomainError("eval_A_quad: dimension mismatch");
    const CMatrix id = CMatrix::Identity(w1.rows(), w1.cols());
    CMatrix t1 = id + w1, t2 = id + w2, t3 = id + w3, t4 = id + w4;
    CMatrix r = t1 * w2 * t3 * w4 + w4 * t3 * w2 * t1 - w1 * t2 * w3 * t4 - t4 * w3 * t2 * w1;
    return v23 * v34 * r;
}

CMatrix eval_A_tr(const CMatrix& w1, const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double v34) {
    if (w1.rows() != w2.rows() || w2.rows() != w3.rows() || w3.rows() != w4.rows())
        throw DomainError("eval_A_tr: dimension mismatch");
    const CMatrix id = CMatrix::Identity(w1.rows(), w1.cols());
    CMatrix t1 = id + w1, t2 = id + w2, t3 = id + w3, t4 = id + w4;
    CMatrix r = (t1 * w2 + w2 * t1) * (t3 * w4).trace() - (w1 * t2 + t2 * w1) * (w3 * t4).trace();
    return v34 * v34 * r;
}

CMatrix eval_A(const CMatrix& w1, const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double v23,
               double v34) {
    const CMatrix id = CMatrix::Identity(w1.rows(), w1.cols());
    CMatrix t3 = id + w3, t4 = id + w4;
    const double uv = v23 * v34, uu = v34 * v34;
    cd tr23 = (w2 * t3).trace();
    CMatrix inner = uv * (w2 * t4 - w3 * t4 - w2 * t3) + uu * (t4 * (w2.trace() - w3.trace()) - tr23 * id);
    return uv * w4 * t3 * w2 + uu * w4 * tr23 + w1 * inner;
}

CMatrix eval_gain_term(const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double v23, double v34) {
    const CMatrix id = CMatrix::Identity(w2.rows(), w2.cols());
    CMatrix t3 = id + w3;
    CMatrix g = v23 * v34 * w4 * t3 * w2 + v34 * v34 * w4 * (w2 * t3).trace();
    return g + g.adjoint();
}

CMatrix eval_gain_symmetrized(const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double v23, double v34) {
    const CMatrix id = CMatrix::Identity(w2.rows(), w2.cols());
    CMatrix t3 = id + w3;
    CMatrix g = v23 * v34 * (w4 * t3 * w2 + w2 * t3 * w4) + v34 * v34 * w4 * (w2 * t3).trace().real() +
                v23 * v23 * w2 * (w4 * t3).trace().real();
    return hermitian_part(g);
}

// ---------------------------------------------------------------------------
// Collision operator

namespace {

CMatrix herm2(const CMatrix& m) { return m + m.adjoint(); }

CMatrix interp(const WignerField& w, const Stencil& s) {
    CMatrix out = s.w[0] * w[s.idx[0]];
    for (int m = 1; m < s.count; ++m) out += s.w[m] * w[s.idx[m]];
    return out;
}

// Aq + At for the quadruple (1,2,3,4), and the same for the image (3,4,1,2).
struct PairValues {
    CMatrix aq_q, at_q, aq_s, at_s;
};

PairValues quadruple_values(const CMatrix& w1, const CMatrix& w2, const CMatrix& w3, const CMatrix& w4, double u,
                            double v) {
    const CMatrix id = CMatrix::Identity(w1.rows(), w1.cols());
    CMatrix x = (id + w1) * w2;
    CMatrix y = w1 * (id + w2);
    CMatrix z = (id + w3) * w4;
    CMatrix uu = w3 * (id + w4);
    const double trx = x.trace().real(), try_ = y.trace().real();
    const double trz = z.trace().real(), tru = uu.trace().real();
    PairValues pv;
    const double a = u * v, b = u * u;
    pv.aq_q = a * (herm2(x * z) - herm2(y * uu));
    pv.aq_s = a * (herm2(z * x) - herm2(uu * y));
    pv.at_q = b * (herm2(x) * trz - herm2(y) * tru);
    pv.at_s = b * (herm2(z) * trx - herm2(uu) * try_);
    return pv;
}

void check_finite(const MatrixField& f, const BrillouinGrid& grid, const char* what) {
    for (int j = 0; j < static_cast<int>(f.size()); ++j) {
        if (!f[j].allFinite()) {
            std::ostringstream os;
            os << what << ": non-finite value at k=" << grid.k(j);
            throw DomainError(os.str());
        }
    }
}

}  // namespace

CollisionOperator::CollisionOperator(const BrillouinGrid& grid, const Dispersion& disp, const PairPotential& pot,
                                     const CollisionQuadrature* quad, const CollisionConfig& cfg)
    : grid_(grid), disp_(disp), pot_(pot), cfg_(cfg) {
    cfg_.validate();
    const int n = grid.size();
    const double dk = grid.dk();
    omega_.resize(n);
    for (int j = 0; j < n; ++j) omega_[j] = disp.omega(grid.k(j));
    eps_moll_ = cfg.mollifier_width(grid, disp);
    eps_pv_ = cfg.pv_width(grid, disp);

    if (cfg.mode == CollisionMode::RootResolved) {
        if (!quad) throw DomainError("root-resolved mode needs a collision quadrature");
        if (!(quad->grid() == grid) || quad->eta() != disp.eta)
            throw DomainError("collision quadrature was built for a different grid or dispersion");
        diag_.degenerate_pairs = n;
        for (int i1 = 0; i1 < n; ++i1) {
            for (int i2 = i1 + 1; i2 < n; ++i2) {
                const std::size_t p = quad->pair_index(i1, i2);
                const double k1 = grid.k(i1), k2 = grid.k(i2);
                for (std::size_t r = quad->begin(p); r < quad->end(p); ++r) {
                    const double w = quad->weight(r);
                    if (!(w <= 1.0 / cfg.g_min)) {
                        ++diag_.dropped_roots;
                        continue;
                    }
                    const double k3 = quad->root(r);
                    Quadruple q;
                    q.i1 = i1;
                    q.i2 = i2;
                    q.s3 = grid.stencil(k3);
                    q.s4 = grid.stencil(k1 - k2 + k3);
                    q.u = pot(k1 - k2);
                    q.v = pot(k2 - k3);
                    q.coef = 0.5 * kPi * dk * w;
                    quads_.push_back(q);
                }
            }
        }
        diag_.quadruples = quads_.size();
        if (quads_.empty()) throw DomainError("collision quadrature is empty: no energy-conserving roots");
    }
    if (cfg.include_vlasov) build_vlasov_tables();
}

double CollisionOperator::pv_weight(int i1, int i2, int i3) const {
    const int i4 = grid_.combine(i1, i3, i2);
    const double wb = omega_[i1] - omega_[i2] + omega_[i3] - omega_[i4];
    const double dk = grid_.dk();
    return dk * dk * wb / (wb * wb + eps_pv_ * eps_pv_);
}

void CollisionOperator::build_vlasov_tables() {
    const int n = grid_.size();
    std::vector<double> vdiff(n);
    for (int m = 0; m < n; ++m) vdiff[m] = pot_(static_cast<double>(m) / n);
    auto vd = [&](int a, int b) { return vdiff[grid_.wrap(a - b)]; };

    prod_coef_ = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(n) * n);
    lin_coef_ = Eigen::MatrixXd::Zero(n, n);
    trace_coef_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * n, n);
    parallel_for(n, [&](int i1) {
        for (int i2 = 0; i2 < n; ++i2) {
            const double u = vd(i1, i2);
            for (int i3 = 0; i3 < n; ++i3) {
                const int i4 = grid_.combine(i1, i3, i2);
                const double p = pv_weight(i1, i2, i3);
                if (p == 0.0) continue;
                const double a = p * u * vd(i2, i3);
                const double b = p * u * u;
                lin_coef_(i1, i3) += a;
                prod_coef_(i1, static_cast<Eigen::Index>(i3) * n + i4) += a;
                prod_coef_(i1, static_cast<Eigen::Index>(i2) * n + i3) += a;
                prod_coef_(i1, static_cast<Eigen::Index>(i2) * n + i4) -= a;
                trace_coef_(static_cast<Eigen::Index>(i1) * n + i4, i2) -= b;
                trace_coef_(static_cast<Eigen::Index>(i1) * n + i4, i3) += b;
            }
        }
    });
}

MatrixField CollisionOperator::eval_Heff(const WignerField& w) const {
    if (!cfg_.include_vlasov) throw DomainError("Vlasov term disabled in collision config");
    if (!(w.grid() == grid_)) throw DomainError("field grid does not match collision operator");
    const int n = grid_.size();
    const int d = w.dim();
    const int dd = d * d;
    const Eigen::Index nn = static_cast<Eigen::Index>(n) * n;

    Eigen::MatrixXd pre(nn, dd), pim(nn, dd);
    parallel_for(n, [&](int a) {
        for (int b = 0; b < n; ++b) {
            CMatrix m = w[a] * w[b];
            const Eigen::Index row = static_cast<Eigen::Index>(a) * n + b;
            for (int e = 0; e < dd; ++e) {
                pre(row, e) = m.data()[e].real();
                pim(row, e) = m.data()[e].imag();
            }
        }
    });
    Eigen::MatrixXd wre(n, dd), wim(n, dd);
    Eigen::VectorXd tr(n);
    for (int a = 0; a < n; ++a) {
        for (int e = 0; e < dd; ++e) {
            wre(a, e) = w[a].data()[e].real();
            wim(a, e) = w[a].data()[e].imag();
        }
        tr(a) = w[a].trace().real();
    }
    Eigen::VectorXd c = trace_coef_ * tr;
    Eigen::MatrixXd lin = lin_coef_ + Eigen::Map<Eigen::MatrixXd>(c.data(), n, n).transpose();
    Eigen::MatrixXd hre = prod_coef_ * pre + lin * wre;
    Eigen::MatrixXd him = prod_coef_ * pim + lin * wim;

    MatrixField h(n, CMatrix(d, d));
    for (int j = 0; j < n; ++j) {
        CMatrix m(d, d);
        for (int e = 0; e < dd; ++e) m.data()[e] = cd(hre(j, e), him(j, e));
        h[j] = hermitian_part(m);
    }
    return h;
}

MatrixField CollisionOperator::eval_Cc(const WignerField& w) const {
    MatrixField h = eval_Heff(w);
    const cd mi(0.0, -1.0);
    for (int j = 0; j < grid_.size(); ++j) h[j] = hermitian_part(mi * (h[j] * w[j] - w[j] * h[j]));
    check_finite(h, grid_, "eval_Cc");
    return h;
}

MatrixField CollisionOperator::eval_Cc_direct(const WignerField& w) const {
    const int n = grid_.size();
    const int d = w.dim();
    MatrixField out(n, CMatrix::Zero(d, d));
    const cd mi(0.0, -1.0);
    parallel_for(n, [&](int i1) {
        CMatrix acc = CMatrix::Zero(d, d);
        for (int i2 = 0; i2 < n; ++i2) {
            for (int i3 = 0; i3 < n; ++i3) {
                const double p = pv_weight(i1, i2, i3);
                if (p == 0.0) continue;
                const int i4 = grid_.combine(i1, i3, i2);
                const double u = pot_(grid_.k(i1) - grid_.k(i2));
                const double v = pot_(grid_.k(i2) - grid_.k(i3));
                CMatrix a = eval_A(w[i1], w[i2], w[i3], w[i4], v, u);
                acc += p * (a - a.adjoint());
            }
        }
        out[i1] = hermitian_part(mi * acc);
    });
    check_finite(out, grid_, "eval_Cc_direct");
    return out;
}

MatrixField CollisionOperator::eval_Cd(const WignerField& w) const {
    if (!(w.grid() == grid_)) throw DomainError("field grid does not match collision operator");
    return cfg_.mode == CollisionMode::RootResolved ? eval_Cd_roots(w) : eval_Cd_mollified(w);
}

namespace {

template <int D>
using FixedMatrix = Eigen::Matrix<cd, D, D>;

template <int D>
FixedMatrix<D> fixed_interp(const std::vector<FixedMatrix<D>>& w, const Stencil& s) {
    FixedMatrix<D> out = s.w[0] * w[s.idx[0]];
    for (int m = 1; m < s.count; ++m) out += s.w[m] * w[s.idx[m]];
    return out;
}

}  // namespace

template <int D>
MatrixField CollisionOperator::eval_Cd_roots_fixed(const WignerField& w) const {
    using M = FixedMatrix<D>;
    const int n = grid_.size();
    const int nq = static_cast<int>(quads_.size());
    std::vector<M> wf(n);
    for (int j = 0; j < n; ++j) wf[j] = w[j];
    std::vector<M> f(4 * static_cast<std::size_t>(nq));
    const M id = M::Identity();
    parallel_for(nq, [&](int iq) {
        const Quadruple& q = quads_[iq];
        const M& w1 = wf[q.i1];
        const M& w2 = wf[q.i2];
        const M w3 = fixed_interp<D>(wf, q.s3);
        const M w4 = fixed_interp<D>(wf, q.s4);
        const M x = (id + w1) * w2, y = w1 * (id + w2);
        const M z = (id + w3) * w4, uu = w3 * (id + w4);
        const double trx = x.trace().real(), try_ = y.trace().real();
        const double trz = z.trace().real(), tru = uu.trace().real();
        const double a = q.u * q.v * q.coef, b = q.u * q.u * q.coef;
        M xz = x * z - y * uu;
        M zx = z * x - uu * y;
        xz = a * (xz + xz.adjoint()).eval();
        zx = a * (zx + zx.adjoint()).eval();
        const M atq = b * ((x + x.adjoint()) * trz - (y + y.adjoint()) * tru);
        const M ats = b * ((z + z.adjoint()) * trx - (uu + uu.adjoint()) * try_);
        const std::size_t base = 4 * static_cast<std::size_t>(iq);
        f[base + 0] = xz + atq;
        f[base + 1] = zx + ats;
        f[base + 2] = -(zx + atq);
        f[base + 3] = -(xz + ats);
    });
    std::vector<M> acc(n, M::Zero());
    for (int iq = 0; iq < nq; ++iq) {
        const Quadruple& q = quads_[iq];
        const std::size_t base = 4 * static_cast<std::size_t>(iq);
        acc[q.i1] += f[base + 0];
        for (int m = 0; m < q.s3.count; ++m) acc[q.s3.idx[m]] += q.s3.w[m] * f[base + 1];
        acc[q.i2] += f[base + 2];
        for (int m = 0; m < q.s4.count; ++m) acc[q.s4.idx[m]] += q.s4.w[m] * f[base + 3];
    }
    MatrixField out(n);
    for (int j = 0; j < n; ++j) out[j] = hermitian_part(CMatrix(acc[j]));
    check_finite(out, grid_, "eval_Cd");
    return out;
}

MatrixField CollisionOperator::eval_Cd_roots(const WignerField& w) const {
    switch (w.dim()) {
        case 1: return eval_Cd_roots_fixed<1>(w);
        case 2: return eval_Cd_roots_fixed<2>(w);
        case 3: return eval_Cd_roots_fixed<3>(w);
        case 4: return eval_Cd_roots_fixed<4>(w);
        case 5: return eval_Cd_roots_fixed<5>(w);
        case 6: return eval_Cd_roots_fixed<6>(w);
        case 7: return eval_Cd_roots_fixed<7>(w);
        default: throw DomainError("eval_Cd: unsupported matrix dimension " + std::to_string(w.dim()));
    }
}

MatrixField CollisionOperator::eval_Cd_mollified(const WignerField& w) const {
    const int n = grid_.size();
    const int d = w.dim();
    const double dk = grid_.dk();
    const double eps = eps_moll_;
    const double norm = 1.0 / (eps * std::sqrt(kPi));
    MatrixField out(n, CMatrix::Zero(d, d));
    parallel_for(n, [&](int i1) {
        CMatrix acc = CMatrix::Zero(d, d);
        for (int i2 = 0; i2 < n; ++i2) {
            if (i2 == i1) continue;
            const double u = pot_(grid_.k(i1) - grid_.k(i2));
            for (int i3 = 0; i3 < n; ++i3) {
                const int i4 = grid_.combine(i1, i3, i2);
                const double wb = omega_[i1] - omega_[i2] + omega_[i3] - omega_[i4];
                if (std::abs(wb) > 8.0 * eps) continue;
                const double delta = norm * std::exp(-wb * wb / (eps * eps));
                const double v = pot_(grid_.k(i2) - grid_.k(i3));
                PairValues pv = quadruple_values(w[i1], w[i2], w[i3], w[i4], u, v);
                acc += delta * (pv.aq_q + pv.at_q);
            }
        }
        out[i1] = hermitian_part(kPi * dk * dk * acc);
    });
    check_finite(out, grid_, "eval_Cd");
    return out;
}

MatrixField CollisionOperator::eval_gain(const WignerField& w) const {
    const int n = grid_.size();
    const int d = w.dim();
    MatrixField out(n, CMatrix::Zero(d, d));
    if (cfg_.mode == CollisionMode::RootResolved) {
        for (const Quadruple& q : quads_) {
            CMatrix w3 = interp(w, q.s3), w4 = interp(w, q.s4);
            out[q.i1] += 2.0 * q.coef * eval_gain_symmetrized(w[q.i2], w3, w4, q.v, q.u);
            out[q.i2] += 2.0 * q.coef * eval_gain_symmetrized(w[q.i1], w4, w3, q.v, q.u);
        }
        return out;
    }
    const double dk = grid_.dk();
    const double eps = eps_moll_;
    const double norm = 1.0 / (eps * std::sqrt(kPi));
    parallel_for(n, [&](int i1) {
        CMatrix acc = CMatrix::Zero(d, d);
        for (int i2 = 0; i2 < n; ++i2) {
            if (i2 == i1) continue;
            const double u = pot_(grid_.k(i1) - grid_.k(i2));
            for (int i3 = 0; i3 < n; ++i3) {
                const int i4 = grid_.combine(i1, i3, i2);
                const double wb = omega_[i1] - omega_[i2] + omega_[i3] - omega_[i4];
                if (std::abs(wb) > 8.0 * eps) continue;
                const double delta = norm * std::exp(-wb * wb / (eps * eps));
                const double v = pot_(grid_.k(i2) - grid_.k(i3));
                acc += delta * eval_gain_symmetrized(w[i2], w[i3], w[i4], v, u);
            }
        }
        out[i1] = kPi * dk * dk * acc;
    });
    return out;
}

MatrixField CollisionOperator::eval_C(const WignerField& w) const {
    MatrixField c = eval_Cd(w);
    if (cfg_.include_vlasov) {
        MatrixField cc = eval_Cc(w);
        for (std::size_t j = 0; j < c.size(); ++j) c[j] += cc[j];
    }
    return c;
}

MatrixField eval_Cd(const WignerField& w, const Dispersion& disp, const PairPotential& pot,
                    const CollisionQuadrature& quad, const CollisionConfig& cfg) {
    CollisionConfig c = cfg;
    c.include_vlasov = false;
    return CollisionOperator(w.grid(), disp, pot, &quad, c).eval_Cd(w);
}

MatrixField eval_Cc(const WignerField& w, const Dispersion& disp, const PairPotential& pot,
                    const CollisionConfig& cfg) {
    CollisionConfig c = cfg;
    c.include_vlasov = true;
    c.mode = CollisionMode::Mollified;
    return CollisionOperator(w.grid(), disp, pot, nullptr, c).eval_Cc(w);
}

MatrixField eval_C(const WignerField& w, const Dispersion& disp, const PairPotential& pot,
                   const CollisionQuadrature& quad, const CollisionConfig& cfg) {
    return CollisionOperator(w.grid(), disp, pot, &quad, cfg).eval_C(w);
}

double field_hs_norm(const MatrixField& f, double dk) {
    double s = 0.0;
    for (const auto& m : f) s += m.squaredNorm();
    return std::sqrt(s * dk);
}

CMatrix field_integral(const MatrixField& f, double dk) {
    CMatrix s = CMatrix::Zero(f.front().rows(), f.front().cols());
    for (const auto& m : f) s += m;
    return s * dk;
}

}  // namespace bhk
