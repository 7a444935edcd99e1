#pragma once

// p-wave two-body loss rates between occupied quasimomentum modes of a 2D
// layer. Bloch waves factorize over the in-plane axes; the transverse axis
// contributes the deep-lattice Wannier function, which is shared by both
// atoms and therefore drops out of the antisymmetrized gradient.

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sqz/lattice/band.hpp"

namespace sqz::lattice {

struct LossMatrix {
    Eigen::MatrixXd rates;       // 1/s, symmetric, zero diagonal
    double mean_rate_gamma = 0;  // sum_{kk'} rates / ell^2
    bool converged = true;       // two-resolution quadrature agreement within 1%
    double quadrature_discrepancy = 0.0;
};

using Mode2D = std::pair<int, int>;  // integer quasimomentum labels, q = 2 m / ell (units of k)

namespace detail {

struct PairIntegrals {
    double grad = 0.0;  // int_cell |f' g - f g'|^2 dx
    double dens = 0.0;  // int_cell |f g|^2 dx
};

inline PairIntegrals cell_integrals(const Eigen::VectorXd& cf, double qf, const Eigen::VectorXd& cg, double qg, int points) {
    PairIntegrals r;
    const double dx = 1.0 / points;
    for (int p = 0; p < points; ++p) {
        const double x = p * dx;
        Complex df, dg;
        const Complex f = bloch_wave(cf, qf, x, &df);
        const Complex g = bloch_wave(cg, qg, x, &dg);
        r.grad += std::norm(df * g - f * dg) * dx;
        r.dens += std::norm(f * g) * dx;
    }
    return r;
}

}  // namespace detail

/// Gamma_{kk'} = (3 pi hbar b^3 / m) int W[phi_k, phi_k'] d^3r for every pair of
/// occupied modes, with W = |(grad phi_k) phi_k' - phi_k grad phi_k'|^2.
inline LossMatrix pwave_loss_matrix(const LatticeSpec& spec, const BandData& transverse, int ell,
                                    const std::vector<Mode2D>& occupied, int n_planewaves = 31,
                                    int quad_points = 64) {
    spec.validate();
    require(ell >= 1, "ell must be positive");
    require(!occupied.empty(), "no occupied modes");
    const double a = spec.lattice_constant_a;

    std::map<int, Eigen::VectorXd> bloch;
    for (auto [mx, my] : occupied)
        for (int m : {mx, my})
            if (!bloch.count(m)) bloch[m] = lowest_bloch_state(spec.depth_V0, 2.0 * m / ell, n_planewaves).coefficients;

    auto tables = [&](int points) {
        std::map<std::pair<int, int>, detail::PairIntegrals> t;
        for (auto& [m1, c1] : bloch)
            for (auto& [m2, c2] : bloch)
                t[{m1, m2}] = detail::cell_integrals(c1, 2.0 * m1 / ell, c2, 2.0 * m2 / ell, points);
        return t;
    };
    const auto fine = tables(quad_points);
    const auto coarse = tables(quad_points / 2);

    const double z4 = wannier_quartic(transverse);
    const double prefactor = 3.0 * kPi * units::hbar * std::pow(spec.pwave_im_length_b, 3) / spec.mass;
    const double geom = 1.0 / (double(ell) * ell * std::pow(a, 5));

    const int n = static_cast<int>(occupied.size());
    LossMatrix out;
    out.rates = Eigen::MatrixXd::Zero(n, n);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            auto value = [&](const auto& t) {
                const auto& X = t.at({occupied[i].first, occupied[j].first});
                const auto& Y = t.at({occupied[i].second, occupied[j].second});
                return prefactor * geom * z4 * (X.grad * Y.dens + X.dens * Y.grad);
            };
            const double vf = value(fine);
            const double vc = value(coarse);
            if (vf > 0.0) worst = std::max(worst, std::abs(vf - vc) / vf);
            out.rates(i, j) = vf;
        }
    // Antisymmetrized overlaps of identical modes vanish; the integrand is
    // symmetric under exchange.
    out.rates = 0.5 * (out.rates + out.rates.transpose()).eval();
    out.rates.diagonal().setZero();
    out.mean_rate_gamma = out.rates.sum() / (double(ell) * ell);
    out.quadrature_discrepancy = worst;
    out.converged = worst <= 0.01;
    return out;
}

/// All ell^2 modes of a periodic ell x ell layer.
inline std::vector<Mode2D> full_layer_modes(int ell) {
    std::vector<Mode2D> m;
    for (int x = -ell / 2; x < ell - ell / 2; ++x)
        for (int y = -ell / 2; y < ell - ell / 2; ++y) m.emplace_back(x, y);
    return m;
}

}  // namespace sqz::lattice
