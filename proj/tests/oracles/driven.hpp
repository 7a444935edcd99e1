#pragma once

// Driven one-axis twisting chi Sz^2 + beta omega cos(omega t) Sx with lab-frame
// single-spin decay and dephasing, integrated densely, against the secular
// two-axis-twisting moment model. Samples at whole drive periods, where the
// rotating and lab frames coincide.

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles/lindblad.hpp"
#include "sqz/drive/pulses.hpp"

namespace oracle {

struct DrivenComparison {
    std::vector<double> times, xi2_exact, xi2_moments;
    double max_relative = 0.0;
};

inline DrivenComparison driven_tat(int N, double chi, int sign, double omega_over_Nchi, const sqz::DecoherenceSpec& lab,
                                   double t_end, int samples, sqz::FrameRule rule = sqz::FrameRule::time_averaged) {
    using namespace sqz;
    SpinChain c(N);
    const double beta = drive::solve_modulation_index(sign);
    const double w = omega_over_Nchi * N * chi;
    const CMat Sz2 = c.sz * c.sz;
    const CMat Sx = c.sx;
    auto L = Lindblad::with_local_jumps(
        c, [&](double t) { return CMat(chi * Sz2 + beta * w * std::cos(w * t) * Sx); }, lab.jumps());
    const auto [th, ph] = drive::tat_initial_direction(sign);
    CMat rho = c.coherent_rho(th, ph);

    const auto frame = drive::transform_jump_rates(lab, beta, rule);
    auto m = coherent_moments(N, th, ph);
    MomentGenerator T(m.basis, drive::tat_secular_hamiltonian(chi, sign), frame.jumps());

    const double period = 2 * kPi / w;
    const int per_sample = std::max(1, static_cast<int>(std::round(t_end / samples / period)));
    DrivenComparison out;
    double t = 0.0;
    for (int k = 1; k <= samples; ++k) {
        const double t1 = k * per_sample * period;
        rho = L.evolve(rho, t, t1, 1e-10);
        auto r = taylor_propagate(T, m, t1 - t);
        require(r.valid, "moment propagation flagged invalid: " + r.reason);
        m = r.table;
        t = t1;
        const double xe = squeezing_parameter(snapshot_from_moments(c.moments(rho), N, t)).xi2;
        const double xm = squeezing_parameter(m.snapshot()).xi2;
        out.times.push_back(t);
        out.xi2_exact.push_back(xe);
        out.xi2_moments.push_back(xm);
        out.max_relative = std::max(out.max_relative, std::abs(xe - xm) / xm);
    }
    return out;
}

}  // namespace oracle
