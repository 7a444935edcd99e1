#pragma once

// Frozen-mode spin model H = -(U/L) S.S - sum_q B_q s_q^z on 2^N states.
// Bit k of a basis index set means spin k is up.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sqz/linalg/krylov.hpp"
#include "sqz/metrics.hpp"
#include "sqz/spin/axial.hpp"

namespace sqz::spin {

using CVec = Eigen::VectorXcd;

inline constexpr int kDenseCap = 14;
inline constexpr int kSpinCap = 20;

namespace ops {

/// out = S+ in (or S- in when raise is false).
inline void ladder(int N, const CVec& in, CVec& out, bool raise) {
    out.setZero(in.size());
    const std::size_t dim = std::size_t{1} << N;
    const Complex* src = in.data();
    Complex* dst = out.data();
    for (int k = 0; k < N; ++k) {
        const std::size_t b = std::size_t{1} << k;
        // blocks of b states with bit k clear followed by b states with it set
        for (std::size_t base = 0; base < dim; base += 2 * b) {
            const Complex* from = src + base + (raise ? 0 : b);
            Complex* to = dst + base + (raise ? b : 0);
            for (std::size_t i = 0; i < b; ++i) to[i] += from[i];
        }
    }
}

inline double sz_value(int N, std::uint64_t s) { return popcount(s) - 0.5 * N; }

/// out = (S_x, S_y, S_z)[axis] in.
inline void collective(int N, int axis, const CVec& in, CVec& out) {
    if (axis == 2) {
        out.resize(in.size());
        for (Eigen::Index s = 0; s < in.size(); ++s) out[s] = sz_value(N, s) * in[s];
        return;
    }
    CVec up, dn;
    ladder(N, in, up, true);
    ladder(N, in, dn, false);
    out = axis == 0 ? CVec(0.5 * (up + dn)) : CVec(Complex(0, -0.5) * (up - dn));
}

}  // namespace ops

/// Product state with every spin at polar angle theta and azimuth phi.
inline CVec coherent_state(int N, double theta, double phi) {
    require(N >= 1 && N <= kSpinCap, "coherent_state: N out of range");
    const std::uint64_t dim = std::uint64_t{1} << N;
    const Complex up = std::cos(theta / 2) * std::exp(Complex(0, -phi / 2));
    const Complex dn = std::sin(theta / 2) * std::exp(Complex(0, phi / 2));
    CVec v(dim);
    for (std::uint64_t s = 0; s < dim; ++s) {
        const int k = popcount(s);
        v[s] = std::pow(up, k) * std::pow(dn, N - k);
    }
    return v;
}

inline SpinSnapshot snapshot(int N, const CVec& psi, double t = 0.0) {
    SpinSnapshot s;
    s.n_spins = N;
    s.time = t;
    CVec a[3];
    for (int i = 0; i < 3; ++i) ops::collective(N, i, psi, a[i]);
    for (int i = 0; i < 3; ++i) {
        s.mean(i) = psi.dot(a[i]).real();
        for (int j = 0; j < 3; ++j) s.second_moments(i, j) = a[i].dot(a[j]).real();
    }
    return s;
}

class SpinHamiltonian {
public:
    /// fields B_q of the N occupied modes; coupling U on a lattice of L sites.
    SpinHamiltonian(std::vector<double> fields, double U, int L) : B_(std::move(fields)), U_(U), L_(L) {
        N_ = static_cast<int>(B_.size());
        require(N_ >= 1 && N_ <= kSpinCap, "spin_hamiltonian supports 1 <= N <= 20");
        require(L_ >= N_, "spin_hamiltonian requires L >= N");
        const std::uint64_t dim = dimension();
        diag_.resize(dim);
        const double g = U_ / L_;
        for (std::uint64_t s = 0; s < dim; ++s) {
            const double m = ops::sz_value(N_, s);
            double d = -g * (m * m + m);
            for (int k = 0; k < N_; ++k) d -= B_[k] * (((s >> k) & 1) ? 0.5 : -0.5);
            diag_[s] = d;
        }
    }

    int n_spins() const { return N_; }
    std::uint64_t dimension() const { return std::uint64_t{1} << N_; }

    /// out = H in, using S.S = S- S+ + Sz^2 + Sz.
    void apply(const CVec& in, CVec& out) const {
        ops::ladder(N_, in, tmp_, true);
        ops::ladder(N_, tmp_, out, false);
        out *= -U_ / L_;
        out.array() += diag_.array() * in.array();
    }
    void operator()(const CVec& in, CVec& out) const { apply(in, out); }

    Eigen::SparseMatrix<double> sparse() const {
        require(N_ <= kDenseCap, "explicit spin Hamiltonian is limited to N <= 14");
        const std::uint64_t dim = dimension();
        std::vector<Eigen::Triplet<double>> trip;
        const double g = U_ / L_;
        for (std::uint64_t s = 0; s < dim; ++s) {
            trip.emplace_back(s, s, diag_[s]);
            // S- S+ flips an up spin at j and a down spin at k: <s'|S- S+|s> for s' = s with k up, j down
            for (int k = 0; k < N_; ++k) {
                if ((s >> k) & 1) continue;
                const std::uint64_t r = s | (std::uint64_t{1} << k);
                for (int j = 0; j < N_; ++j)
                    if ((r >> j) & 1) trip.emplace_back(r ^ (std::uint64_t{1} << j), s, -g);
            }
        }
        Eigen::SparseMatrix<double> H(dim, dim);
        H.setFromTriplets(trip.begin(), trip.end());
        return H;
    }

    Eigen::MatrixXd dense() const {
        require(N_ <= 12, "dense spin Hamiltonian is limited to N <= 12");
        return Eigen::MatrixXd(sparse());
    }

private:
    std::vector<double> B_;
    double U_;
    int L_;
    int N_ = 0;
    Eigen::VectorXd diag_;
    mutable CVec tmp_;
};

inline SpinHamiltonian spin_hamiltonian(const AxialField& field, double U, int L, int N) {
    require(static_cast<int>(field.B_q.size()) == N, "field size must equal N");
    return SpinHamiltonian(field.B_q, U, L);
}

/// Weight of the state in the S = N/2 (symmetric) manifold.
inline double dicke_population(int N, const CVec& psi) {
    require(N >= 1 && N <= kSpinCap, "dicke_population supports N <= 20");
    require(psi.size() == (Eigen::Index{1} << N), "state size must be 2^N");
    std::vector<Complex> sums(N + 1, 0.0);
    for (Eigen::Index s = 0; s < psi.size(); ++s) sums[popcount(s)] += psi[s];
    double p = 0.0;
    for (int k = 0; k <= N; ++k) p += std::norm(sums[k]) / binomial(N, k);
    return p / psi.squaredNorm();
}

struct SpinTrace {
    SqueezingTrace squeezing;
    std::vector<double> dicke;
};

/// exp(-i pi Sx): every spin flipped, times (-i)^N.
inline CVec pi_pulse_x(int N, const CVec& psi) {
    const std::uint64_t mask = (std::uint64_t{1} << N) - 1;
    const Complex ph = std::pow(Complex(0, -1), N);
    CVec out(psi.size());
    for (std::uint64_t s = 0; s <= mask; ++s) out[s] = ph * psi[~s & mask];
    return out;
}

/// Evolve the x-polarized coherent state and record snapshots at `times`
/// (nondecreasing, starting at or after 0). With `echo`, every point is a
/// separate run with a pi_x pulse at t/2.
inline SpinTrace spin_squeezing_trace(const SpinHamiltonian& H, const std::vector<double>& times,
                                      const linalg::KrylovOptions& opt = {}, bool echo = false) {
    const int N = H.n_spins();
    const CVec psi0 = coherent_state(N, kPi / 2, 0.0);
    CVec psi = psi0;
    SpinTrace out;
    double t = 0.0;
    for (double tk : times) {
        require(tk >= t, "times must be nondecreasing and >= 0");
        if (echo) {
            psi = linalg::expm_multiply(H, psi0, tk / 2, opt);
            psi = linalg::expm_multiply(H, pi_pulse_x(N, psi), tk / 2, opt);
        } else {
            psi = linalg::expm_multiply(H, psi, tk - t, opt);
        }
        t = tk;
        out.squeezing.push(snapshot(N, psi, t));
        out.dicke.push_back(dicke_population(N, psi));
    }
    return out;
}

}  // namespace sqz::spin
