#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sqz/common.hpp"

namespace sqz::lattice {

/// Single-particle spectrum of a 1D lattice in a harmonic trap,
/// H = -J sum (|j><j+1| + h.c.) + Omega sum (j - j0)^2 |j><j| (open chain).
struct TrapSpectrum {
    double J = 0.0;
    double trap_strength_Omega = 0.0;
    int L = 0;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;  // columns, orthonormal
    int n_critical = 0;
    bool untrapped = false;  // Omega <= 0: every mode counts as delocalized
    std::vector<bool> localized;
    double effective_mass = 0.0;  // hbar / (2 J a^2) with hbar = a = 1
    double effective_freq = 0.0;  // sqrt(4 J Omega)

    /// 1 / sum_j |v_j|^4 for mode n.
    double participation_ratio(int n) const {
        double s = 0.0;
        for (int j = 0; j < L; ++j) s += std::pow(eigenvectors(j, n), 4);
        return 1.0 / s;
    }

    /// Number of modes below the onset of left/right pair degeneracy: above
    /// n_c the modes localize on either flank of the trap and come in
    /// near-degenerate pairs (splitting below 10% of the preceding spacing).
    int degeneracy_onset() const {
        for (int n = 1; n + 1 < L; ++n) {
            const double prev = eigenvalues(n) - eigenvalues(n - 1);
            const double split = eigenvalues(n + 1) - eigenvalues(n);
            if (split < 0.1 * prev) return n;
        }
        return L;
    }
};

inline Eigen::MatrixXd trap_hamiltonian(double J, double Omega, int L) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(L, L);
    const double j0 = 0.5 * (L - 1);
    for (int j = 0; j < L; ++j) {
        H(j, j) = Omega * (j - j0) * (j - j0);
        if (j + 1 < L) H(j, j + 1) = H(j + 1, j) = -J;
    }
    return H;
}

/// Critical index n_c = round(2 sqrt(2 J / Omega)) clipped to [0, L].
inline int critical_mode(double J, double Omega, int L) {
    if (Omega <= 0.0) return L;
    const long n = std::lround(2.0 * std::sqrt(2.0 * J / Omega));
    return static_cast<int>(std::clamp<long>(n, 0, L));
}

inline TrapSpectrum trap_modes(double J, double trap_strength, int L) {
    require(L >= 4, "trap_modes requires L >= 4");
    require(J >= 0.0, "J must be >= 0");
    TrapSpectrum t;
    t.J = J;
    t.trap_strength_Omega = trap_strength;
    t.L = L;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(trap_hamiltonian(J, std::max(trap_strength, 0.0), L));
    if (es.info() != Eigen::Success) throw Error("trap diagonalization failed");
    t.eigenvalues = es.eigenvalues();
    t.eigenvectors = es.eigenvectors();
    t.untrapped = trap_strength <= 0.0;
    t.n_critical = critical_mode(J, trap_strength, L);
    t.localized.resize(L);
    for (int n = 0; n < L; ++n) t.localized[n] = n >= t.n_critical;
    t.effective_mass = J > 0.0 ? 1.0 / (2.0 * J) : INFINITY;
    t.effective_freq = std::sqrt(4.0 * J * std::max(trap_strength, 0.0));
    return t;
}

}  // namespace sqz::lattice
