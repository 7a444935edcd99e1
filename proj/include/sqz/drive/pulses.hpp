#pragma once

// Two-axis twisting from an amplitude-modulated S_x drive, rotating-frame
// jumps, decoupling sequences and gauge-switching pulses.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "sqz/dynamics/decoherence.hpp"
#include "sqz/dynamics/moments.hpp"
#include "sqz/spin/axial.hpp"

namespace sqz::drive {

inline double bessel_j0(double x) { return std::cyl_bessel_j(0.0, x); }

namespace detail {
inline double refine_root(double target, double lo, double hi, double tol) {
    auto f = [&](double b) { return bessel_j0(2 * b) - target; };
    boost::uintmax_t iters = 200;
    auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
    auto r = boost::math::tools::toms748_solve(f, lo, hi, stop, iters);
    if (iters >= 200) throw Error("modulation index root did not converge");
    return 0.5 * (r.first + r.second);
}
}  // namespace detail

/// Modulation index with J0(2 beta) = sign / 3. For sign = +1 the smallest
/// positive root; for sign = -1 the root in (0, 6] minimizing |J0(beta)|.
inline double solve_modulation_index(int sign, double tol = 1e-14) {
    require(sign == 1 || sign == -1, "sign must be +1 or -1");
    const double target = sign / 3.0;
    std::vector<double> roots;
    const int n = 6000;
    double prev = bessel_j0(0.0) - target;  // J0(0) = 1 > 1/3: no root at 0
    for (int k = 1; k <= n; ++k) {
        const double b = 6.0 * k / n;
        const double v = bessel_j0(2 * b) - target;
        if ((prev < 0) != (v < 0)) roots.push_back(detail::refine_root(target, 6.0 * (k - 1) / n, b, tol));
        prev = v;
    }
    if (roots.empty()) throw Error("no modulation index root bracketed in (0, 6]");
    if (sign == 1) return roots.front();
    return *std::min_element(roots.begin(), roots.end(),
                             [](double a, double b) { return std::abs(bessel_j0(a)) < std::abs(bessel_j0(b)); });
}

/// Amplitude-modulated drive Omega(t) = beta omega cos(omega t) S_x.
struct DriveSpec {
    double rabi_amplitude_Omega0 = 0.0;  // beta * omega
    double mod_freq_omega = 0.0;
    double mod_index_beta = 0.0;
    int sign = 1;

    static DriveSpec make(int sign, double omega) {
        DriveSpec d;
        d.sign = sign;
        d.mod_freq_omega = omega;
        d.mod_index_beta = solve_modulation_index(sign);
        d.rabi_amplitude_Omega0 = d.mod_index_beta * omega;
        return d;
    }

    /// omega >= ratio * N * chi and J0(2 beta) = sign / 3.
    void validate(int N, double chi, double ratio = 20.0) const {
        require(sign == 1 || sign == -1, "drive sign must be +1 or -1");
        require(std::abs(bessel_j0(2 * mod_index_beta) - sign / 3.0) < 1e-10, "modulation index does not satisfy J0(2 beta) = +-1/3");
        require(mod_freq_omega >= ratio * N * chi, "modulation frequency must satisfy omega >= " + std::to_string(ratio) + " N chi");
    }
    double rabi(double t) const { return rabi_amplitude_Omega0 * std::cos(mod_freq_omega * t); }
};

struct TatHamiltonian {
    CollectiveHamiltonian h;
    double dropped_spin_squared = 0.0;  // coefficient of S.S removed from the effective Hamiltonian
    int sign = 1;
};

/// (chi/3)(Sz^2 - Sx^2) for sign +1 and (chi/3)(Sy^2 - Sx^2) for sign -1, in
/// S+/Sz/S- monomials. Adding (chi/3) S.S gives (chi/3)(2Sz^2 + Sy^2) and
/// (chi/3)(Sz^2 + 2Sy^2) respectively.
inline TatHamiltonian tat_coefficients(double chi, int sign) {
    require(sign == 1 || sign == -1, "sign must be +1 or -1");
    require(chi >= 0.0, "chi must be >= 0");
    TatHamiltonian t;
    t.sign = sign;
    if (chi == 0.0) return t;
    const double c = chi / 3;
    t.dropped_spin_squared = c;
    // Sx^2 = (S+^2 + S-^2 + 2 S+S- - 2 Sz) / 4,  Sy^2 - Sx^2 = -(S+^2 + S-^2) / 2
    if (sign == 1) {
        t.h.add({0, 2, 0}, c).add({2, 0, 0}, -c / 4).add({0, 0, 2}, -c / 4).add({1, 0, 1}, -c / 2).add({0, 1, 0}, c / 2);
    } else {
        t.h.add({2, 0, 0}, -c / 2).add({0, 0, 2}, -c / 2);
    }
    return t;
}

/// The secular rotating-frame Hamiltonian with the S.S term kept:
/// (chi/3)(2Sz^2 + Sy^2) or (chi/3)(Sz^2 + 2Sy^2). Under single-spin jumps S.S
/// is not inert, so this is the form to propagate with decoherence.
inline CollectiveHamiltonian tat_secular_hamiltonian(double chi, int sign) {
    auto t = tat_coefficients(chi, sign);
    const double c = t.dropped_spin_squared;
    if (c != 0.0) t.h.add({1, 0, 1}, c).add({0, 2, 0}, c).add({0, 1, 0}, -c);  // S.S = S+S- + Sz^2 - Sz
    return t.h;
}

/// Polar/azimuthal angles of the state squeezed by H_TAT^(sign): y for +, z for -.
inline std::pair<double, double> tat_initial_direction(int sign) {
    return sign == 1 ? std::pair{kPi / 2, kPi / 2} : std::pair{0.0, 0.0};
}

/// Jumps in the rotating frame of the drive with modulation index beta.
inline DecoherenceSpec transform_jump_rates(DecoherenceSpec dec, double beta, FrameRule rule = FrameRule::time_averaged) {
    dec.frame_bessel = bessel_j0(beta);
    dec.frame_bessel_2beta = bessel_j0(2 * beta);
    dec.rule = rule;
    return dec;
}

struct PulseEvent {
    double time = 0.0;
    char axis = 'x';
    double angle = kPi;
    double soc_angle = 0.0;  // theta of the pulse operator S^(theta)
};

struct PulseSchedule {
    std::vector<PulseEvent> events;
    double total_time = 0.0;

    void validate() const {
        double prev = 0.0;
        for (const auto& e : events) {
            require(e.time >= prev && e.time <= total_time, "pulse times must be nondecreasing within [0, total_time]");
            require(e.axis == 'x' || e.axis == 'y', "pulse axis must be x or y");
            prev = e.time;
        }
    }

    std::vector<PiPulse> pi_pulses() const {
        std::vector<PiPulse> out;
        for (const auto& e : events) {
            require(std::abs(e.angle - kPi) < 1e-12 && e.soc_angle == 0.0, "only homogeneous pi pulses map onto collective moments");
            out.push_back({e.time, e.axis});
        }
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["total_time"] = total_time;
        j["events"] = nlohmann::json::array();
        for (const auto& e : events)
            j["events"].push_back({{"time", e.time}, {"axis", std::string(1, e.axis)}, {"angle", e.angle}, {"soc_angle", e.soc_angle}});
        return j;
    }

    static PulseSchedule from_json(const nlohmann::json& j) {
        PulseSchedule s;
        s.total_time = j.at("total_time").get<double>();
        for (const auto& e : j.at("events")) {
            const auto axis = e.at("axis").get<std::string>();
            require(axis.size() == 1, "pulse axis must be a single character");
            s.events.push_back({e.at("time").get<double>(), axis[0], e.at("angle").get<double>(), e.at("soc_angle").get<double>()});
        }
        s.validate();
        return s;
    }
};

/// Single-site matrix exp(-i angle s_axis^(soc_angle * site)), with
/// s_x^(theta) = (e^{i theta} s+ + e^{-i theta} s-) / 2.
inline Mat2 local_pulse(const PulseEvent& e, int site) {
    const double a = e.soc_angle * site + (e.axis == 'y' ? -kPi / 2 : 0.0);
    const Complex w = std::exp(Complex(0, a));
    const Mat2 n = 0.5 * (w * local::sp() + std::conj(w) * local::sm());  // unit-free spin component
    // (2n)^2 = 1, so exp(-i angle n) = cos(angle/2) - 2i sin(angle/2) n
    return std::cos(e.angle / 2) * Mat2::Identity() - Complex(0, 2 * std::sin(e.angle / 2)) * n;
}

enum class AxisPolicy { all_x, xy_alternating };

/// (tau/2 - pi - tau/2)^n with tau = total_time / n.
inline PulseSchedule cpmg_schedule(int n_pulses, double total_time, AxisPolicy policy = AxisPolicy::all_x) {
    require(n_pulses >= 0, "n_pulses must be >= 0");
    require(total_time >= 0.0, "total_time must be >= 0");
    PulseSchedule s;
    s.total_time = total_time;
    if (n_pulses == 0) return s;
    const double tau = total_time / n_pulses;
    for (int k = 0; k < n_pulses; ++k) {
        const char axis = (policy == AxisPolicy::xy_alternating && k % 2 == 1) ? 'y' : 'x';
        s.events.push_back({tau * (k + 0.5), axis, kPi, 0.0});
    }
    return s;
}

/// G_theta ~ exp(i pi Sx^(0)) exp(i pi Sx^(theta/2)): the pulse with SOC angle
/// theta/2 acts first. Both are pi pulses about x (the sign of the rotation
/// is immaterial for a pi pulse up to a global phase).
inline PulseSchedule gauge_switch_schedule(double theta) {
    require(theta >= 0.0 && theta < 2 * kPi, "theta must lie in [0, 2 pi)");
    PulseSchedule s;
    s.events.push_back({0.0, 'x', kPi, theta / 2});
    s.events.push_back({0.0, 'x', kPi, 0.0});
    return s;
}

/// Root-mean-square of the mean axial field B bar over choices of N occupied
/// modes among the ell x ell modes of a periodic layer. Exact enumeration for
/// ell <= 4, otherwise seeded Monte Carlo.
inline double residual_field_rms(double J, double phi, int ell, int N, int samples = 10000, unsigned seed = 7) {
    require(ell >= 1 && N >= 1 && N <= ell * ell, "need 1 <= N <= ell^2");
    const auto band = spin::full_band(ell, 2);
    const auto all = spin::axial_fields(J, phi, band).B_q;
    const int M = static_cast<int>(all.size());
    double acc = 0.0;
    long count = 0;
    if (ell <= 4) {
        std::vector<bool> pick(M, false);
        std::fill(pick.begin(), pick.begin() + N, true);
        do {
            double s = 0.0;
            for (int i = 0; i < M; ++i)
                if (pick[i]) s += all[i];
            acc += (s / N) * (s / N);
            ++count;
        } while (std::prev_permutation(pick.begin(), pick.end()));
    } else {
        std::mt19937_64 rng(seed);
        std::vector<int> idx(M);
        std::iota(idx.begin(), idx.end(), 0);
        for (int k = 0; k < samples; ++k) {
            std::shuffle(idx.begin(), idx.end(), rng);
            double s = 0.0;
            for (int i = 0; i < N; ++i) s += all[idx[i]];
            acc += (s / N) * (s / N);
            ++count;
        }
    }
    return std::sqrt(acc / count);
}

}  // namespace sqz::drive
