#pragma once

// SOC angle that puts the axial-field spread at a fixed fraction of U, and
// the OAT rate that follows from it.

#include <cmath>
#include <string>

#include "sqz/lattice/band.hpp"
#include "sqz/spin/axial.hpp"

namespace sqz::cli {

struct SaturationResult {
    double phi = 0.0;
    double chi = 0.0;
    double B_tilde = 0.0;
    double ratio = 0.0;  // B~ / U at phi
    double J = 0.0, U = 0.0;
    int iterations = 0;
    bool valid = false;
    std::string flag;
};

/// Bisection on phi in (0, pi] for B~(phi) / U = target within tol. B~ is
/// the spread of B_q over `modes`; chi = B~^2 / ((N - 1) f U).
inline SaturationResult saturation_search(double J, double U, const spin::ModeSet& modes, double target = 0.05,
                                          double tol = 1e-4) {
    require(J > 0.0 && U > 0.0, "saturation_search needs J > 0 and U > 0");
    require(target > 0.0 && tol > 0.0, "target and tolerance must be > 0");
    require(modes.size() >= 2, "saturation_search needs at least two occupied modes");
    SaturationResult r;
    r.J = J;
    r.U = U;
    auto ratio = [&](double phi) { return spin::axial_fields(J, phi, modes).var_root_B / U; };
    double lo = 0.0, hi = kPi;
    if (ratio(hi) < target) {
        r.phi = hi;
        r.ratio = ratio(hi);
        r.flag = "no phi in (0, pi] reaches the target B~/U";
        return r;
    }
    double mid = hi, val = ratio(hi);
    while (std::abs(val - target) >= tol && r.iterations < 200) {
        mid = 0.5 * (lo + hi);
        val = ratio(mid);
        (val < target ? lo : hi) = mid;
        ++r.iterations;
    }
    r.phi = mid;
    r.ratio = val;
    const auto field = spin::axial_fields(J, mid, modes);
    r.B_tilde = field.var_root_B;
    r.chi = spin::oat_parameters(field, U, modes.filling(), static_cast<int>(modes.size())).chi;
    r.valid = std::abs(val - target) < tol;
    if (!r.valid) r.flag = "bisection did not reach tolerance";
    return r;
}

struct LatticePoint {
    double J = 0.0, U = 0.0;  // rad/s
    double J_recoil = 0.0, U_recoil = 0.0;
};

/// Tunneling and on-site interaction of a 2D layer in rad/s.
inline LatticePoint lattice_point(const lattice::LatticeSpec& spec, int n_planewaves = 31) {
    spec.validate();
    const auto inplane = lattice::band_structure(spec.depth_V0, n_planewaves);
    const auto transverse = lattice::band_structure(spec.transverse_depth, n_planewaves);
    require(!inplane.tight_binding_degenerate, "in-plane depth too shallow for a tight-binding J");
    LatticePoint p;
    p.J_recoil = inplane.tunneling_J;
    p.U_recoil = lattice::hubbard_U(spec, inplane, transverse);
    p.J = p.J_recoil * spec.recoil_rate();
    p.U = p.U_recoil * spec.recoil_rate();
    return p;
}

/// Saturation at depth V0 for a filled ell x ell layer (f = 1, N = ell^2).
inline SaturationResult saturation_search(const lattice::LatticeSpec& spec, int ell, double target = 0.05, double tol = 1e-4) {
    require(ell >= 2, "ell must be >= 2");
    const auto p = lattice_point(spec);
    return saturation_search(p.J, p.U, spin::full_band(ell, 2), target, tol);
}

}  // namespace sqz::cli
