#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhk/grid.hpp"

namespace bhk {

using ComplexMatrix = Eigen::MatrixXcd;

// Hermitian one-particle matrix with strictly positive spectrum.
class OneParticleHamiltonian {
public:
    explicit OneParticleHamiltonian(const ComplexMatrix& h);

    int modes() const { return static_cast<int>(h_.rows()); }
    const ComplexMatrix& matrix() const { return h_; }
    const Eigen::VectorXd& energies() const { return energies_; }
    // Columns are normal modes: H = U diag(energies) U^dagger.
    const ComplexMatrix& modes_matrix() const { return u_; }

private:
    ComplexMatrix h_;
    Eigen::VectorXd energies_;
    ComplexMatrix u_;
};

// G(j, m) = <a*_m a_j> = ((e^H - 1)^{-1})_{jm}.
ComplexMatrix two_point(const OneParticleHamiltonian& h);

constexpr int kMaxPermanentDim = 12;

// Ryser formula with Gray-code updates.
cd permanent(const ComplexMatrix& m);

enum class Ladder { Create, Annihilate };

struct LadderFactor {
    int mode = 0;
    Ladder op = Ladder::Create;
};

using MomentRequest = std::vector<LadderFactor>;

// Parses a word such as "c0 a0 c1 a2" (c = creation, a = annihilation).
MomentRequest parse_moment_request(const std::string& word);

struct MomentValue {
    cd value;
    bool balanced = true;
    std::string note;
};

// Expectation of the ordered product in the quasi-free state of H, as a permanent of contractions.
MomentValue wick_moment(const OneParticleHamiltonian& h, const MomentRequest& request);

// Thermal average over the Fock space truncated at `cutoff` quanta per normal mode.
ComplexMatrix brute_force_two_point(const OneParticleHamiltonian& h, int cutoff = 60);
cd brute_force_moment(const OneParticleHamiltonian& h, const MomentRequest& request, int cutoff = 40);

}  // namespace bhk
