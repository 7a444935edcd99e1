#pragma once

// Lowest Bloch band of a 1D sinusoidal lattice V0 sin^2(pi x / a) by
// plane-wave diagonalization. Energies are in recoil units
// E_R = hbar^2 k^2 / 2m with k = pi / a; quasimomenta are in units of k, so
// the first Brillouin zone is q in [-1, 1).

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sqz/common.hpp"

namespace sqz::lattice {

namespace units {
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double h = 6.62607015e-34;         // J s
inline constexpr double amu = 1.66053906660e-27;    // kg
inline constexpr double bohr = 5.29177210903e-11;   // m
inline constexpr double sr87_mass = 86.9088775 * amu;
inline constexpr double sr_magic_spacing = 813.4e-9 / 2.0;  // m
}  // namespace units

/// Physical lattice parameters. The s-wave scattering length has no default:
/// the clock-state value must be supplied by the caller.
struct LatticeSpec {
    double depth_V0 = 0.0;          // in-plane depth, E_R
    double transverse_depth = 60.0; // E_R
    double lattice_constant_a = units::sr_magic_spacing;  // m
    double mass = units::sr87_mass;                        // kg
    std::optional<double> scattering_length_s;             // m
    double pwave_im_length_b = 121.0 * units::bohr;       // m

    void validate() const {
        require(depth_V0 >= 0.0, "depth_V0 must be >= 0");
        require(transverse_depth >= 0.0, "transverse_depth must be >= 0");
        require(lattice_constant_a > 0.0 && mass > 0.0, "lattice constant and mass must be positive");
        require(pwave_im_length_b >= 0.0, "pwave_im_length_b must be >= 0");
    }

    /// Recoil energy divided by hbar (rad/s).
    double recoil_rate() const {
        const double k = kPi / lattice_constant_a;
        return units::hbar * k * k / (2.0 * mass);
    }
};

/// Lowest-band data on a uniform quasimomentum grid.
struct BandData {
    double depth = 0.0;
    int n_planewaves = 0;
    std::vector<double> quasimomenta;  // units of k
    std::vector<double> band_energy;   // E_R
    Eigen::MatrixXcd bloch_coefficients;  // column j: plane-wave amplitudes at quasimomenta[j]
    double tunneling_J = 0.0;             // E_R
    bool tight_binding_degenerate = false;  // free-particle limit: J is not a tunneling rate
    // Wannier function sampled on x in units of a, centred at 0.
    std::vector<double> wannier_x;
    std::vector<double> wannier;
    double wannier_dx = 0.0;

    double bandwidth() const {
        auto [lo, hi] = std::minmax_element(band_energy.begin(), band_energy.end());
        return *hi - *lo;
    }
};

/// Plane-wave index n runs over -(n_pw-1)/2 .. (n_pw-1)/2 with wavevector q + 2n.
inline Eigen::MatrixXd planewave_hamiltonian(double depth, double q, int n_pw) {
    const int nmax = (n_pw - 1) / 2;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n_pw, n_pw);
    for (int i = 0; i < n_pw; ++i) {
        const double kk = q + 2.0 * (i - nmax);
        H(i, i) = kk * kk + depth / 2.0;
        if (i + 1 < n_pw) H(i, i + 1) = H(i + 1, i) = -depth / 4.0;
    }
    return H;
}

struct BlochState {
    double energy = 0.0;
    Eigen::VectorXd coefficients;  // real, gauge fixed so that u_q(0) > 0
};

inline BlochState lowest_bloch_state(double depth, double q, int n_pw) {
    require(n_pw >= 11 && n_pw % 2 == 1, "n_planewaves must be odd and >= 11");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(planewave_hamiltonian(depth, q, n_pw));
    if (es.info() != Eigen::Success)
        throw Error("plane-wave diagonalization failed; retry with n_planewaves = " + std::to_string(2 * n_pw + 1));
    BlochState s;
    s.energy = es.eigenvalues()(0);
    s.coefficients = es.eigenvectors().col(0);
    const double edge = std::max(std::abs(s.coefficients(0)), std::abs(s.coefficients(n_pw - 1)));
    if (edge > 1e-9)
        throw Error("plane-wave expansion not converged (edge amplitude " + std::to_string(edge) +
                    "); retry with n_planewaves = " + std::to_string(2 * n_pw + 1));
    if (s.coefficients.sum() < 0.0) s.coefficients = -s.coefficients;
    return s;
}

/// u_q(x) and du/dx for the periodic Bloch factor, x in units of a.
/// The full Bloch wave is exp(i pi q x) u_q(x).
inline Complex bloch_wave(const Eigen::VectorXd& c, double q, double x, Complex* derivative = nullptr) {
    const int n_pw = static_cast<int>(c.size());
    const int nmax = (n_pw - 1) / 2;
    Complex v{}, d{};
    for (int i = 0; i < n_pw; ++i) {
        const double kk = kPi * (q + 2.0 * (i - nmax));
        const Complex e = std::exp(kI * kk * x);
        v += c(i) * e;
        d += c(i) * kI * kk * e;
    }
    if (derivative) *derivative = d;
    return v;
}

/// Lowest band on n_quasimomenta uniformly spaced points of [-1, 1) plus the
/// maximally localized (real, symmetric) Wannier function on those points.
inline BandData band_structure(double depth, int n_planewaves, int n_quasimomenta = 64, int points_per_cell = 32) {
    require(depth >= 0.0, "depth must be >= 0");
    require(n_quasimomenta >= 4, "need at least 4 quasimomenta");
    BandData b;
    b.depth = depth;
    b.n_planewaves = n_planewaves;
    b.bloch_coefficients.resize(n_planewaves, n_quasimomenta);
    for (int j = 0; j < n_quasimomenta; ++j) {
        const double q = -1.0 + 2.0 * j / n_quasimomenta;
        auto s = lowest_bloch_state(depth, q, n_planewaves);
        b.quasimomenta.push_back(q);
        b.band_energy.push_back(s.energy);
        b.bloch_coefficients.col(j) = s.coefficients.cast<Complex>();
    }
    b.tunneling_J = b.bandwidth() / 4.0;
    // In the free-particle limit the band is a parabola, not a cosine.
    b.tight_binding_degenerate = depth < 1e-12;

    // w(x) = (1/M) sum_q e^{i pi q x} u_q(x), normalized numerically on the
    // ring of M cells; truncated where |w| < 1e-6 of its peak.
    const int cells = n_quasimomenta;
    const int npts = cells * points_per_cell;
    const double dx = 1.0 / points_per_cell;
    std::vector<double> xs(npts), ws(npts);
    double norm2 = 0.0;
    for (int p = 0; p < npts; ++p) {
        const double x = -cells / 2.0 + p * dx;
        Complex acc{};
        for (int j = 0; j < n_quasimomenta; ++j) {
            const double q = b.quasimomenta[j];
            acc += bloch_wave(b.bloch_coefficients.col(j).real(), q, x);
        }
        xs[p] = x;
        ws[p] = acc.real();
        norm2 += ws[p] * ws[p] * dx;
    }
    const double s = 1.0 / std::sqrt(norm2);
    double peak = 0.0;
    for (auto& w : ws) {
        w *= s;
        peak = std::max(peak, std::abs(w));
    }
    int first = 0, last = npts - 1;
    while (first < last && std::abs(ws[first]) < 1e-6 * peak) ++first;
    while (last > first && std::abs(ws[last]) < 1e-6 * peak) --last;
    b.wannier_x.assign(xs.begin() + first, xs.begin() + last + 1);
    b.wannier.assign(ws.begin() + first, ws.begin() + last + 1);
    b.wannier_dx = dx;
    return b;
}

inline BandData band_structure(const LatticeSpec& spec, int n_planewaves, int n_quasimomenta = 64) {
    spec.validate();
    return band_structure(spec.depth_V0, n_planewaves, n_quasimomenta);
}

inline double wannier_norm(const BandData& b) {
    double n = 0.0;
    for (double w : b.wannier) n += w * w * b.wannier_dx;
    return n;
}

/// Integral of w^4 over x (units of 1/a).
inline double wannier_quartic(const BandData& b) {
    double s = 0.0;
    for (double w : b.wannier) s += w * w * w * w * b.wannier_dx;
    return s;
}

/// On-site s-wave interaction U in recoil units from the product of
/// per-axis Wannier quartic integrals (two in-plane axes, one transverse):
///   U / E_R = (8 / pi) (a_s / a) prod_axes int w^4 d(x/a).
inline double hubbard_U(const LatticeSpec& spec, const BandData& inplane, const BandData& transverse) {
    spec.validate();
    require(spec.scattering_length_s.has_value(), "hubbard_U requires scattering_length_s (no default is assumed)");
    for (const BandData* b : {&inplane, &transverse})
        require(std::abs(wannier_norm(*b) - 1.0) < 1e-6, "hubbard_U: Wannier function is not normalized");
    const double ratio = *spec.scattering_length_s / spec.lattice_constant_a;
    const double ix = wannier_quartic(inplane);
    return 8.0 / kPi * ratio * ix * ix * wannier_quartic(transverse);
}

}  // namespace sqz::lattice
