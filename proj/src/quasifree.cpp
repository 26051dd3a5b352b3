#include "bhk/quasifree.hpp"

#include <cmath>
#include <sstream>

namespace bhk {

OneParticleHamiltonian::OneParticleHamiltonian(const ComplexMatrix& h) {
    if (h.rows() != h.cols() || h.rows() == 0) throw DomainError("one-particle Hamiltonian must be square");
    if ((h - h.adjoint()).norm() > 1e-12 * (1.0 + h.norm()))
        throw DomainError("one-particle Hamiltonian must be Hermitian");
    h_ = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h_);
    energies_ = es.eigenvalues();
    u_ = es.eigenvectors();
    if (!(energies_.minCoeff() > 0.0)) {
        std::ostringstream os;
        os << "one-particle Hamiltonian has nonpositive eigenvalue " << energies_.minCoeff();
        throw DomainError(os.str());
    }
}

ComplexMatrix two_point(const OneParticleHamiltonian& h) {
    Eigen::VectorXd occ(h.modes());
    for (int m = 0; m < h.modes(); ++m) occ(m) = 1.0 / std::expm1(h.energies()(m));
    const ComplexMatrix& u = h.modes_matrix();
    return u * occ.asDiagonal() * u.adjoint();
}

cd permanent(const ComplexMatrix& m) {
    const int n = static_cast<int>(m.rows());
    if (m.cols() != n) throw DomainError("permanent: matrix must be square");
    if (n > kMaxPermanentDim)
        throw DomainError("permanent: dimension " + std::to_string(n) + " exceeds " +
                          std::to_string(kMaxPermanentDim));
    if (n == 0) return cd(1.0, 0.0);

    // Row sums over the current column subset, updated one column at a time along a Gray code.
    Eigen::VectorXcd rows = Eigen::VectorXcd::Zero(n);
    cd total(0.0, 0.0);
    const unsigned long count = 1ul << n;
    unsigned long gray = 0;
    for (unsigned long i = 1; i < count; ++i) {
        const unsigned long next = i ^ (i >> 1);
        const unsigned long diff = next ^ gray;
        const int col = __builtin_ctzl(diff);
        if (next & diff)
            rows += m.col(col);
        else
            rows -= m.col(col);
        gray = next;
        cd prod = rows.prod();
        const int size = __builtin_popcountl(next);
        total += ((n - size) % 2 == 0) ? prod : -prod;
    }
    return total;
}

MomentRequest parse_moment_request(const std::string& word) {
    MomentRequest out;
    std::istringstream is(word);
    std::string tok;
    while (is >> tok) {
        if (tok.size() < 2 || (tok[0] != 'c' && tok[0] != 'a'))
            throw DomainError("moment request: bad factor '" + tok + "' (expected c<mode> or a<mode>)");
        LadderFactor f;
        f.op = tok[0] == 'c' ? Ladder::Create : Ladder::Annihilate;
        try {
            f.mode = std::stoi(tok.substr(1));
        } catch (const std::exception&) {
            throw DomainError("moment request: bad mode in '" + tok + "'");
        }
        out.push_back(f);
    }
    return out;
}

namespace {

void check_modes(const OneParticleHamiltonian& h, const MomentRequest& r) {
    for (const auto& f : r)
        if (f.mode < 0 || f.mode >= h.modes())
            throw DomainError("moment request: mode " + std::to_string(f.mode) + " out of range");
}

}  // namespace

MomentValue wick_moment(const OneParticleHamiltonian& h, const MomentRequest& request) {
    check_modes(h, request);
    std::vector<int> cpos, apos;
    for (int p = 0; p < static_cast<int>(request.size()); ++p)
        (request[p].op == Ladder::Create ? cpos : apos).push_back(p);
    MomentValue out;
    if (cpos.size() != apos.size()) {
        out.value = 0.0;
        out.balanced = false;
        out.note = "unbalanced request: the moment vanishes by gauge invariance";
        return out;
    }
    const int np = static_cast<int>(cpos.size());
    if (np > kMaxPermanentDim / 2)
        throw DomainError("wick_moment: at most " + std::to_string(kMaxPermanentDim / 2) + " pairs supported");
    const ComplexMatrix g = two_point(h);
    ComplexMatrix k(np, np);
    for (int r = 0; r < np; ++r) {
        const int i = request[cpos[r]].mode;
        for (int c = 0; c < np; ++c) {
            const int j = request[apos[c]].mode;
            // <a*_i a_j> = G(j, i); annihilator first gives delta_ij + G(j, i).
            k(r, c) = g(j, i);
            if (apos[c] < cpos[r] && i == j) k(r, c) += 1.0;
        }
    }
    out.value = permanent(k);
    return out;
}

namespace {

// <w> in the single-mode thermal state with energy e, truncated at `cutoff` quanta.
double single_mode_average(const std::vector<Ladder>& word, double e, int cutoff) {
    double num = 0.0, z = 0.0;
    for (int n = 0; n <= cutoff; ++n) {
        const double weight = std::exp(-e * n);
        z += weight;
        // Apply the word right to left to |n>.
        int state = n;
        double amp = 1.0;
        for (auto it = word.rbegin(); it != word.rend() && amp != 0.0; ++it) {
            if (*it == Ladder::Annihilate) {
                if (state == 0) {
                    amp = 0.0;
                } else {
                    amp *= std::sqrt(static_cast<double>(state));
                    --state;
                }
            } else {
                if (state == cutoff) {
                    amp = 0.0;
                } else {
                    ++state;
                    amp *= std::sqrt(static_cast<double>(state));
                }
            }
        }
        if (state == n) num += weight * amp;
    }
    return num / z;
}

}  // namespace

cd brute_force_moment(const OneParticleHamiltonian& h, const MomentRequest& request, int cutoff) {
    check_modes(h, request);
    if (cutoff < 1) throw DomainError("brute force: cutoff must be positive");
    const int m = h.modes();
    const int len = static_cast<int>(request.size());
    const ComplexMatrix& u = h.modes_matrix();
    // a_i = sum_p U(i,p) b_p and a*_i = sum_p conj(U(i,p)) b*_p.
    std::vector<int> choice(len, 0);
    cd total(0.0, 0.0);
    while (true) {
        cd coef(1.0, 0.0);
        std::vector<int> creates(m, 0), annihilates(m, 0);
        for (int p = 0; p < len; ++p) {
            const cd x = u(request[p].mode, choice[p]);
            if (request[p].op == Ladder::Create) {
                coef *= std::conj(x);
                ++creates[choice[p]];
            } else {
                coef *= x;
                ++annihilates[choice[p]];
            }
        }
        bool nonzero = std::abs(coef) > 0.0;
        for (int q = 0; q < m && nonzero; ++q) nonzero = creates[q] == annihilates[q];
        if (nonzero) {
            double value = 1.0;
            for (int q = 0; q < m && value != 0.0; ++q) {
                if (creates[q] == 0) continue;
                std::vector<Ladder> sub;
                for (int p = 0; p < len; ++p)
                    if (choice[p] == q) sub.push_back(request[p].op);
                value *= single_mode_average(sub, h.energies()(q), cutoff);
            }
            total += coef * value;
        }
        int p = 0;
        while (p < len && ++choice[p] == m) choice[p++] = 0;
        if (p == len) break;
    }
    return total;
}

ComplexMatrix brute_force_two_point(const OneParticleHamiltonian& h, int cutoff) {
    const int m = h.modes();
    ComplexMatrix g(m, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            g(j, i) = brute_force_moment(h, {{i, Ladder::Create}, {j, Ladder::Annihilate}}, cutoff);
    return g;
}

}  // namespace bhk
