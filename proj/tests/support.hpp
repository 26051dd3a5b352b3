#pragma once

#include <random>

#include "bhk/grid.hpp"

namespace bhk::testing {

inline CMatrix random_matrix(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> g;
    CMatrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = cd(g(rng), g(rng));
    return m;
}

inline CMatrix random_psd(std::mt19937_64& rng, int d, double scale = 0.3, double shift = 0.0) {
    CMatrix a = random_matrix(rng, d);
    return scale * a * a.adjoint() + shift * CMatrix::Identity(d, d);
}

inline CMatrix random_unitary(std::mt19937_64& rng, int d) {
    Eigen::HouseholderQR<CMatrix> qr(random_matrix(rng, d));
    CMatrix q = qr.householderQ();
    // Fix the determinant phase so the result is in SU(d).
    cd det = q.determinant();
    return q * std::pow(det, -1.0 / d);
}

// Smooth random PSD field: a few Fourier modes of random Hermitian matrices plus a floor.
inline WignerField random_field(std::mt19937_64& rng, const BrillouinGrid& g, int d, double floor = 0.5) {
    CMatrix a0 = random_psd(rng, d), a1 = random_matrix(rng, d) * 0.15, a2 = random_matrix(rng, d) * 0.08;
    MatrixField v(g.size());
    double lmin = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        const double k = g.k(j);
        v[j] = hermitian_part(a0 + std::polar(1.0, kTwoPi * k) * a1 + std::polar(1.0, 2 * kTwoPi * k) * a2);
        lmin = std::min(lmin, HermitianMatrix(v[j]).min_eigenvalue());
    }
    for (auto& m : v) m += (floor - lmin) * CMatrix::Identity(d, d);
    return WignerField(g, std::move(v));
}

}  // namespace bhk::testing
