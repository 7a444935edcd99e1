#pragma once

// Closed-form one-axis twisting H = chi Sz^2 from the x-polarized coherent
// state, with uncorrelated single-spin decay (s_-) and dephasing (s_z).
// Populations evolve classically under decay and the Ising phase imprinted
// by spin k on spin j depends only on m_k(t), so each spectator contributes
// an independent factor averaged over its telegraph history.

#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "sqz/dynamics/decoherence.hpp"
#include "sqz/metrics.hpp"

namespace sqz {

namespace detail {

// (exp(x t) - 1) / x, continuous at x = 0.
inline Complex expm1_over(Complex x, double t) {
    const Complex xt = x * t;
    if (std::abs(xt) < 1e-6) return t * (1.0 + xt / 2.0 + xt * xt / 6.0);
    return (std::exp(xt) - 1.0) / x;
}

// E[exp(i kappa int_0^t m)] for a spin starting in the x state, m = +-1/2,
// with up -> down decay at rate g.
inline Complex phase_factor(double kappa, double g, double t) {
    const Complex x{-g, kappa};
    const Complex e = std::exp(x * t);
    return 0.5 * std::exp(Complex(0, -kappa * t / 2)) * (1.0 + e + g * expm1_over(x, t));
}

// E[m(t) exp(i kappa int_0^t m)] for the same process.
inline Complex weighted_phase_factor(double kappa, double g, double t) {
    const Complex x{-g, kappa};
    const Complex e = std::exp(x * t);
    return 0.25 * std::exp(Complex(0, -kappa * t / 2)) * (e - g * expm1_over(x, t) - 1.0);
}

}  // namespace detail

struct OatPoint {
    CollectiveMoments moments;
    SpinSnapshot snapshot;
    double xi2 = 1.0;
};

inline OatPoint oat_correlators(int N, double chi, double t, const DecoherenceSpec& dec = {}) {
    require(N >= 2, "oat_correlators requires N >= 2");
    require(t >= 0.0, "time must be >= 0");
    dec.validate();
    require(dec.frame_bessel == 1.0, "closed-form OAT correlators are undriven (frame_bessel must be 1)");
    const double n = N;
    const double gd = dec.rate_decay, gp = dec.rate_dephase;
    const double coh = std::exp(-(gd + gp) * t / 2);
    const double z = 0.5 * std::exp(-gd * t) - 0.5;
    const Complex phi1 = detail::phase_factor(2 * chi, gd, t);
    const Complex phi2 = detail::phase_factor(4 * chi, gd, t);
    const Complex psi1 = detail::weighted_phase_factor(2 * chi, gd, t);
    const Complex sp1 = 0.5 * coh * std::pow(phi1, n - 1);

    OatPoint p;
    auto& m = p.moments;
    m.sz = n * z;
    m.sp = n * sp1;
    m.spsm = n * (0.5 + z) + n * (n - 1) * 0.25 * coh * coh;
    m.spsp = n * (n - 1) * 0.25 * coh * coh * std::pow(phi2, n - 2);
    m.spsz = -0.5 * n * sp1 + n * (n - 1) * 0.5 * coh * std::pow(phi1, n - 2) * psi1;
    m.szsz = n / 4 + n * (n - 1) * z * z;
    p.snapshot = snapshot_from_moments(m, n, t);
    p.xi2 = squeezing_parameter(p.snapshot).xi2;
    return p;
}

/// Optimal OAT squeezing on (0, t_max]: coarse scan then Brent refinement
/// around the best grid point.
inline OptimalPoint oat_optimum(int N, double chi, double t_max, const DecoherenceSpec& dec = {}, int n_scan = 400) {
    require(t_max > 0.0 && n_scan >= 3, "oat_optimum needs t_max > 0 and n_scan >= 3");
    auto f = [&](double t) { return oat_correlators(N, chi, t, dec).xi2; };
    int best = 1;
    double fbest = f(t_max / n_scan);
    for (int k = 2; k <= n_scan; ++k) {
        const double v = f(t_max * k / n_scan);
        if (v < fbest) fbest = v, best = k;
    }
    OptimalPoint o;
    o.index = best;
    o.bracketed = best < n_scan;
    if (!o.bracketed) {
        o.t_opt = t_max;
        o.db_opt = to_db(fbest);
        return o;
    }
    const double lo = t_max * (best - 1) / n_scan, hi = t_max * (best + 1) / n_scan;
    auto r = boost::math::tools::brent_find_minima(f, lo, hi, 50);
    o.t_opt = r.first;
    o.db_opt = to_db(r.second);
    return o;
}

}  // namespace sqz
