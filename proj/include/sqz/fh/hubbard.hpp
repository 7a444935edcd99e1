#pragma once

// Spin-orbit-coupled Fermi-Hubbard chain in a fixed-N Fock space over 2L
// spin orbitals, with Krylov propagation and the Ramsey protocol.
//
// Orbital o = 2j + sigma (sigma = 0 up, 1 down). A basis state s stands for
// c+_{o1} c+_{o2} ... |0> with o1 < o2 < ..., so moving a fermion picks up
// (-1)^(occupied orbitals strictly between source and target).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sqz/drive/pulses.hpp"
#include "sqz/linalg/krylov.hpp"
#include "sqz/metrics.hpp"
#include "sqz/spin/axial.hpp"

namespace sqz::fh {

using linalg::CVec;
using Bits = std::uint32_t;
using SparseH = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

inline constexpr int kMaxSites = 12;
inline constexpr long kMaxDim = 12870;  // C(16, 8)

enum class Boundary { periodic, open };

struct ModelParams {
    double J = 1.0;
    double U = 0.0;
    double phi = 0.0;
    double trap_strength = 0.0;
    Boundary boundary = Boundary::periodic;
    int L = 2;
    int N = 0;

    void validate() const {
        require(L >= 2 && L <= kMaxSites, "L must lie in [2, 12]");
        require(N >= 0 && N <= 2 * L, "N must lie in [0, 2L]");
        require(phi >= 0.0 && phi < 2 * kPi, "phi must lie in [0, 2 pi)");
        require(std::isfinite(J) && std::isfinite(U) && std::isfinite(trap_strength), "J, U, trap_strength must be finite");
        require(binomial(2 * L, N) <= kMaxDim, "Fock space exceeds the exact-diagonalization cap C(16, 8)");
    }
};

inline constexpr int orbital(int site, int spin) { return 2 * site + spin; }

class FockBasis {
public:
    FockBasis(int L, int N) : L_(L), N_(N) {
        require(L >= 1 && L <= kMaxSites && N >= 0 && N <= 2 * L, "FockBasis: need 1 <= L <= 12, 0 <= N <= 2L");
        require(binomial(2 * L, N) <= kMaxDim, "FockBasis: dimension exceeds cap");
        const int M = 2 * L;
        for (int n = 0; n <= M; ++n)
            for (int k = 0; k <= M; ++k) choose_[n][k] = static_cast<long>(std::llround(binomial(n, k)));
        states_.reserve(choose_[M][N]);
        if (N == 0) {
            states_.push_back(0);
            return;
        }
        // Gosper's hack walks fixed-popcount integers in increasing order
        Bits s = (Bits{1} << N) - 1;
        const Bits end = Bits{1} << M;
        while (s < end) {
            states_.push_back(s);
            const Bits c = s & (~s + 1);
            const Bits r = s + c;
            s = (((r ^ s) >> 2) / c) | r;
        }
    }

    int L() const { return L_; }
    int N() const { return N_; }
    long size() const { return static_cast<long>(states_.size()); }
    Bits state(long i) const { return states_[i]; }
    const std::vector<Bits>& states() const { return states_; }

    /// Position of s in the sorted list (colexicographic rank).
    long index(Bits s) const {
        long r = 0;
        int k = 1;
        while (s) {
            const int p = __builtin_ctz(s);
            r += choose_[p][k++];
            s &= s - 1;
        }
        return r;
    }

private:
    int L_, N_;
    std::vector<Bits> states_;
    long choose_[2 * kMaxSites + 1][2 * kMaxSites + 1] = {};
};

namespace detail {
inline int between(Bits s, int a, int b) {
    if (a > b) std::swap(a, b);
    const Bits mask = ((Bits{1} << b) - 1) & ~((Bits{1} << (a + 1)) - 1);
    return popcount(s & mask);
}
inline bool occupied(Bits s, int o) { return (s >> o) & 1u; }
}  // namespace detail

/// Hopping -J (e^{i phi} c+_{j up} c_{j+1 up} + h.c.) for spin up and without
/// the phase for spin down, so a plane wave e^{iqj} of spin up has energy
/// -2J cos(q + phi); U n_up n_dn on site; trap Omega (j - j0)^2 n_j with
/// j0 = (L - 1) / 2.
inline SparseH build_hamiltonian(const ModelParams& p, const FockBasis& basis) {
    p.validate();
    require(basis.L() == p.L && basis.N() == p.N, "basis does not match model parameters");
    const int L = p.L;
    const double j0 = 0.5 * (L - 1);
    std::vector<Eigen::Triplet<Complex>> trip;
    const int bonds = p.boundary == Boundary::periodic ? L : L - 1;
    const Complex w_up = -p.J * std::exp(Complex(0, p.phi));
    for (long i = 0; i < basis.size(); ++i) {
        const Bits s = basis.state(i);
        double diag = 0.0;
        for (int j = 0; j < L; ++j) {
            const bool u = detail::occupied(s, orbital(j, 0)), d = detail::occupied(s, orbital(j, 1));
            diag += p.U * (u && d) + p.trap_strength * (j - j0) * (j - j0) * (u + d);
        }
        if (diag != 0.0) trip.emplace_back(i, i, diag);
        for (int b = 0; b < bonds; ++b) {
            const int j = b, k = (b + 1) % L;
            for (int sigma = 0; sigma < 2; ++sigma) {
                const Complex amp = sigma == 0 ? w_up : Complex(-p.J);
                const int oj = orbital(j, sigma), ok = orbital(k, sigma);
                // amp c+_j c_k and conj(amp) c+_k c_j, each generated from its source state
                if (detail::occupied(s, ok) && !detail::occupied(s, oj)) {
                    const Bits t = s ^ (Bits{1} << ok) ^ (Bits{1} << oj);
                    const double sign = detail::between(s, oj, ok) % 2 ? -1.0 : 1.0;
                    trip.emplace_back(basis.index(t), i, sign * amp);
                }
                if (detail::occupied(s, oj) && !detail::occupied(s, ok)) {
                    const Bits t = s ^ (Bits{1} << ok) ^ (Bits{1} << oj);
                    const double sign = detail::between(s, oj, ok) % 2 ? -1.0 : 1.0;
                    trip.emplace_back(basis.index(t), i, sign * std::conj(amp));
                }
            }
        }
    }
    SparseH H(basis.size(), basis.size());
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

/// exp(-i H t) psi. Throws with the achieved error if the Krylov step fails.
inline CVec evolve(const SparseH& H, const CVec& psi, double t, double tol = 1e-10, int max_dim = 40) {
    require(tol > 0.0, "tolerance must be > 0");
    auto apply = [&H](const CVec& in, CVec& out) { out.noalias() = H * in; };
    return linalg::expm_multiply(apply, psi, t, {max_dim, tol});
}

// ---- spin operators -------------------------------------------------------

/// out = S+^(theta) in with S+^(theta) = sum_j e^{i theta j} c+_{j up} c_{j dn}.
/// Adjacent orbitals: no fermionic sign.
inline void apply_raise(const FockBasis& b, double theta, const CVec& in, CVec& out, bool lower = false) {
    out.setZero(in.size());
    for (long i = 0; i < b.size(); ++i) {
        if (in[i] == 0.0) continue;
        const Bits s = b.state(i);
        for (int j = 0; j < b.L(); ++j) {
            const int from = orbital(j, lower ? 0 : 1), to = orbital(j, lower ? 1 : 0);
            if (!detail::occupied(s, from) || detail::occupied(s, to)) continue;
            const Complex ph = std::exp(Complex(0, lower ? -theta * j : theta * j));
            out[b.index(s ^ (Bits{1} << from) ^ (Bits{1} << to))] += ph * in[i];
        }
    }
}

inline void apply_sz(const FockBasis& b, const CVec& in, CVec& out) {
    out.resize(in.size());
    for (long i = 0; i < b.size(); ++i) {
        const Bits s = b.state(i);
        double m = 0.0;
        for (int j = 0; j < b.L(); ++j) m += 0.5 * (detail::occupied(s, orbital(j, 0)) - detail::occupied(s, orbital(j, 1)));
        out[i] = m * in[i];
    }
}

/// Collective component axis (0 x, 1 y, 2 z) of the rotated spin S^(theta).
inline void apply_spin(const FockBasis& b, int axis, double theta, const CVec& in, CVec& out) {
    if (axis == 2) return apply_sz(b, in, out);
    CVec up, dn;
    apply_raise(b, theta, in, up);
    apply_raise(b, theta, in, dn, true);
    out = axis == 0 ? CVec(0.5 * (up + dn)) : CVec(Complex(0, -0.5) * (up - dn));
}

inline SpinSnapshot spin_snapshot(const FockBasis& b, const CVec& psi, double theta = 0.0, double t = 0.0) {
    SpinSnapshot s;
    s.n_spins = b.N();
    s.time = t;
    CVec a[3];
    for (int i = 0; i < 3; ++i) apply_spin(b, i, theta, psi, a[i]);
    for (int i = 0; i < 3; ++i) {
        s.mean(i) = psi.dot(a[i]).real();
        for (int j = 0; j < 3; ++j) s.second_moments(i, j) = a[i].dot(a[j]).real();
    }
    return s;
}

/// Weight in the S = N/2 manifold of the homogeneous total spin, by the
/// polynomial projector prod_{S' < N/2} (S^2 - S'(S'+1)) / (Smax(Smax+1) - S'(S'+1)).
inline double dicke_population(const FockBasis& b, const CVec& psi) {
    const double smax = 0.5 * b.N();
    auto s2 = [&](const CVec& in) {
        CVec r, l, z, zz;
        apply_raise(b, 0.0, in, r);
        apply_raise(b, 0.0, r, l, true);  // S- S+
        apply_sz(b, in, z);
        apply_sz(b, z, zz);
        return CVec(l + zz + z);
    };
    CVec v = psi;
    for (double sp = smax - 1; sp >= -1e-9; sp -= 1.0) {
        const double ev = sp * (sp + 1);
        v = (s2(v) - ev * v) / (smax * (smax + 1) - ev);
    }
    return psi.dot(v).real() / psi.squaredNorm();
}

inline std::vector<double> site_density(const FockBasis& b, const CVec& psi, int spin) {
    std::vector<double> n(b.L(), 0.0);
    for (long i = 0; i < b.size(); ++i) {
        const double w = std::norm(psi[i]);
        if (w == 0.0) continue;
        const Bits s = b.state(i);
        for (int j = 0; j < b.L(); ++j) {
            if (spin != 1 && detail::occupied(s, orbital(j, 0))) n[j] += w;
            if (spin != 0 && detail::occupied(s, orbital(j, 1))) n[j] += w;
        }
    }
    return n;
}

inline double doublons(const FockBasis& b, const CVec& psi) {
    double d = 0.0;
    for (long i = 0; i < b.size(); ++i) {
        const Bits s = b.state(i);
        d += std::norm(psi[i]) * popcount(s & (s >> 1) & 0x55555555u);
    }
    return d;
}

// ---- pulses -----------------------------------------------------------------

/// Apply a product of single-site 2x2 rotations (basis up, down) on the
/// singly occupied sites. Empty and doubly occupied sites are untouched.
template <class SiteMatrix>
CVec apply_local(const FockBasis& b, CVec psi, const SiteMatrix& site) {
    for (int j = 0; j < b.L(); ++j) {
        const Mat2 m = site(j);
        const int ou = orbital(j, 0), od = orbital(j, 1);
        for (long i = 0; i < b.size(); ++i) {
            const Bits s = b.state(i);
            if (!detail::occupied(s, ou) || detail::occupied(s, od)) continue;
            const long k = b.index(s ^ (Bits{1} << ou) ^ (Bits{1} << od));
            const Complex a = psi[i], c = psi[k];
            psi[i] = m(0, 0) * a + m(0, 1) * c;
            psi[k] = m(1, 0) * a + m(1, 1) * c;
        }
    }
    return psi;
}

/// exp(-i angle S_axis^(soc_angle)) for a pulse event.
inline CVec collective_pulse(const FockBasis& b, const CVec& psi, const drive::PulseEvent& e) {
    return apply_local(b, psi, [&](int j) { return drive::local_pulse(e, j); });
}

/// exp(-i rotation S_n) with S_n = (1/2) sum_j e^{i(theta_L j - laser_phase)} c+_{j up} c_{j dn} + h.c.;
/// laser_phase 0 is x, pi/2 is y.
inline CVec collective_pulse(const FockBasis& b, const CVec& psi, double rotation, double laser_phase, double soc_angle) {
    return apply_local(b, psi, [&](int j) {
        const Complex w = std::exp(Complex(0, soc_angle * j - laser_phase));
        const Mat2 n = 0.5 * (w * local::sp() + std::conj(w) * local::sm());
        return Mat2(std::cos(rotation / 2) * Mat2::Identity() - Complex(0, 2 * std::sin(rotation / 2)) * n);
    });
}

// ---- initial state ----------------------------------------------------------

/// Single-particle orbitals of the down-spin hopping + trap problem, columns
/// ordered by energy. Homogeneous periodic chains use plane waves e^{i q j}
/// with degenerate +-q filled positive first.
inline Eigen::MatrixXcd down_orbitals(const ModelParams& p) {
    const int L = p.L;
    Eigen::MatrixXcd C(L, L);
    if (p.boundary == Boundary::periodic && p.trap_strength == 0.0 && p.J > 0.0) {
        const auto labels = spin::detail::ordered_labels(L);
        for (int k = 0; k < L; ++k)
            for (int j = 0; j < L; ++j) C(j, k) = std::exp(Complex(0, 2 * kPi * labels[k] * j / L)) / std::sqrt(double(L));
        return C;
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(L, L);
    const double j0 = 0.5 * (L - 1);
    for (int j = 0; j < L; ++j) {
        h(j, j) = p.trap_strength * (j - j0) * (j - j0);
        const int k = (j + 1) % L;
        if (j + 1 < L || p.boundary == Boundary::periodic) {
            h(j, k) -= p.J;
            h(k, j) -= p.J;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw Error("single-particle diagonalization failed");
    return es.eigenvectors().cast<Complex>();
}

/// Slater determinant of the N lowest down-spin orbitals (the all-down sector
/// is free: U acts only between opposite spins).
inline CVec all_down_ground_state(const ModelParams& p, const FockBasis& b) {
    require(b.L() == p.L && b.N() == p.N, "basis does not match model parameters");
    require(p.N <= p.L, "all-down state needs N <= L");
    const Eigen::MatrixXcd C = down_orbitals(p);
    CVec psi = CVec::Zero(b.size());
    Bits down_mask = 0;
    for (int j = 0; j < p.L; ++j) down_mask |= Bits{1} << orbital(j, 1);
    for (long i = 0; i < b.size(); ++i) {
        const Bits s = b.state(i);
        if (s & ~down_mask) continue;
        Eigen::MatrixXcd M(p.N, p.N);
        int r = 0;
        for (int j = 0; j < p.L; ++j) {
            if (!detail::occupied(s, orbital(j, 1))) continue;
            for (int k = 0; k < p.N; ++k) M(r, k) = C(j, k);
            ++r;
        }
        psi[i] = p.N == 0 ? Complex(1.0) : M.determinant();
    }
    const double n = psi.norm();
    require(n > 1e-12, "all-down ground state vanished");
    return psi / n;
}

// ---- Ramsey protocol -------------------------------------------------------

struct RamseyOptions {
    bool echo = true;              // single pi_x pulse at t/2 for every time point
    double measure_theta = 0.0;    // SOC angle of the measured spin operators
    bool dicke = true;
    double tolerance = 1e-10;
    int krylov_dim = 40;
};

struct RamseyTrace {
    SqueezingTrace squeezing;
    std::vector<double> doublons;
    std::vector<std::vector<double>> density_up, density_total;
    std::vector<double> dicke;
    std::vector<double> particle_number;
    bool failed = false;
    std::string failure;
};

namespace detail {
inline void record(RamseyTrace& out, const FockBasis& b, const CVec& psi, double t, const RamseyOptions& o) {
    out.squeezing.push(spin_snapshot(b, psi, o.measure_theta, t));
    out.doublons.push_back(doublons(b, psi));
    out.density_up.push_back(site_density(b, psi, 0));
    out.density_total.push_back(site_density(b, psi, 2));
    double n = 0.0;
    for (double x : out.density_total.back()) n += x;
    out.particle_number.push_back(n / psi.squaredNorm());
    if (o.dicke) out.dicke.push_back(dicke_population(b, psi));
}
}  // namespace detail

/// Evolve psi0 under H and record observables at each time (no pulses).
inline RamseyTrace propagate(const SparseH& H, const FockBasis& b, CVec psi, const std::vector<double>& times,
                             const RamseyOptions& o = {}) {
    RamseyTrace out;
    double t = 0.0;
    for (double tk : times) {
        require(tk >= t, "times must be nondecreasing and >= 0");
        try {
            psi = evolve(H, psi, tk - t, o.tolerance, o.krylov_dim);
        } catch (const Error& e) {
            out.failed = true;
            out.failure = e.what();
            break;
        }
        t = tk;
        detail::record(out, b, psi, t, o);
    }
    return out;
}

/// pi/2 pulse from the all-down ground state to +x, then free evolution with
/// an optional echo. Observables are measured in the frame of the sequence.
inline RamseyTrace ramsey_run(const ModelParams& p, const std::vector<double>& times, const RamseyOptions& o = {}) {
    p.validate();
    const FockBasis b(p.L, p.N);
    const SparseH H = build_hamiltonian(p, b);
    CVec psi0 = all_down_ground_state(p, b);
    psi0 = collective_pulse(b, psi0, drive::PulseEvent{0.0, 'y', -kPi / 2, 0.0});
    if (!o.echo) return propagate(H, b, psi0, times, o);
    RamseyTrace out;
    for (double t : times) {
        require(t >= 0.0, "times must be >= 0");
        try {
            CVec psi = evolve(H, psi0, t / 2, o.tolerance, o.krylov_dim);
            psi = collective_pulse(b, psi, drive::PulseEvent{t / 2, 'x', kPi, 0.0});
            psi = evolve(H, psi, t / 2, o.tolerance, o.krylov_dim);
            detail::record(out, b, psi, t, o);
        } catch (const Error& e) {
            out.failed = true;
            out.failure = e.what();
            break;
        }
    }
    return out;
}

enum class DensityChannel { up, total };

/// sqrt(time average of (n_j(t) - n_j(t_0))^2) per site over the recorded
/// samples, t_0 being the first sample.
inline std::vector<double> density_fluctuations(const RamseyTrace& tr, DensityChannel ch = DensityChannel::up) {
    const auto& n = ch == DensityChannel::up ? tr.density_up : tr.density_total;
    require(!n.empty(), "density_fluctuations: empty trace");
    std::vector<double> out(n.front().size(), 0.0);
    for (const auto& row : n)
        for (std::size_t j = 0; j < row.size(); ++j) out[j] += (row[j] - n.front()[j]) * (row[j] - n.front()[j]);
    for (double& x : out) x = std::sqrt(x / n.size());
    return out;
}

}  // namespace sqz::fh
