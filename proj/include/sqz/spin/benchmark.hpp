#pragma once

// Optimal squeezing of the exact spin model against its one-axis-twisting
// reduction, for a chain at unit filling.

#include <cmath>
#include <vector>

#include "sqz/dynamics/oat.hpp"
#include "sqz/spin/hamiltonian.hpp"

namespace sqz::spin {

struct OatErrorPoint {
    double field_to_interaction = 0.0;  // B~/U
    double U = 0.0;
    double chi = 0.0;
    double db_oat = 0.0, t_oat = 0.0;
    double db_spin = 0.0, t_spin = 0.0;
    double min_dicke = 1.0;
    double relative_error = 0.0;  // |db_oat - db_spin| / db_spin
};

struct OatBenchmarkConfig {
    int N = 20;
    double J = 1.0;
    double phi = kPi / 20;
    double window_lo = 0.25, window_hi = 1.2;  // search window in units of the OAT optimal time
    int window_points = 20;
    linalg::KrylovOptions krylov{40, 1e-7};
};

/// One point of the benchmark: fields of the N-site chain with every mode
/// occupied, U = B~ / ratio.
inline OatErrorPoint oat_error_point(double ratio, const OatBenchmarkConfig& cfg = {}) {
    require(cfg.N >= 2 && cfg.N <= kSpinCap, "oat_error_point supports 2 <= N <= 20");
    require(cfg.window_points >= 3 && cfg.window_lo > 0 && cfg.window_hi > cfg.window_lo, "invalid search window");
    const int N = cfg.N;
    OatErrorPoint out;
    out.field_to_interaction = ratio;
    auto field = axial_fields(cfg.J, cfg.phi, lowest_modes_1d(N, N));
    if (ratio == 0.0 || field.var_root_B == 0.0) {
        // no residual field: pure collective dynamics, no squeezing in either model
        return out;
    }
    require(ratio > 0.0, "B~/U must be >= 0");
    out.U = field.var_root_B / ratio;
    out.chi = oat_parameters(field, out.U, 1.0, N).chi;
    const auto oat = oat_optimum(N, out.chi, 3.0 / (out.chi * std::pow(N, 2.0 / 3.0)), DecoherenceSpec{});
    out.db_oat = oat.db_opt;
    out.t_oat = oat.t_opt;

    SpinHamiltonian H(field.B_q, out.U, N);
    double lo = cfg.window_lo * oat.t_opt, hi = cfg.window_hi * oat.t_opt;
    CVec psi = coherent_state(N, kPi / 2, 0.0);
    double t = 0.0;
    SqueezingTrace trace;
    for (int attempt = 0; attempt < 4; ++attempt) {
        for (int i = 0; i < cfg.window_points; ++i) {
            const double tk = lo + (hi - lo) * i / (cfg.window_points - 1);
            if (tk <= t && !trace.times.empty()) continue;
            psi = linalg::expm_multiply(H, psi, tk - t, cfg.krylov);
            t = tk;
            trace.push(snapshot(N, psi, t));
            out.min_dicke = std::min(out.min_dicke, dicke_population(N, psi));
        }
        // optimum must be interior to the sampled window; otherwise extend it forward
        std::size_t best = 0;
        for (std::size_t i = 1; i < trace.size(); ++i)
            if (trace.db[i] > trace.db[best]) best = i;
        if (best + 1 < trace.size() && best > 0) break;
        require(best > 0, "spin-model optimum precedes the search window");
        const double w = hi - lo;
        lo = hi;
        hi += w;
    }
    const auto opt = optimal_point(trace);
    out.db_spin = opt.db_opt;
    out.t_spin = opt.t_opt;
    out.relative_error = std::abs(out.db_oat - out.db_spin) / std::abs(out.db_spin);
    return out;
}

inline std::vector<OatErrorPoint> oat_error_benchmark(const std::vector<double>& ratios, const OatBenchmarkConfig& cfg = {}) {
    std::vector<OatErrorPoint> out;
    for (double r : ratios) out.push_back(oat_error_point(r, cfg));
    return out;
}

}  // namespace sqz::spin
