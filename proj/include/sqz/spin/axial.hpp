#pragma once

// Frozen-mode axial fields B_q = -4J sin(q a + phi/2) sin(phi/2) per axis and
// the one-axis-twisting parameters derived from their spread.

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>
#include <vector>

#include "sqz/common.hpp"

namespace sqz::spin {

/// Occupied quasimomenta (q a, radians) on a periodic 1D chain or 2D layer.
struct ModeSet {
    int dims = 1;
    int linear_size = 0;                  // L (1D) or ell (2D)
    int total_modes = 0;                  // L, or lx * ly
    int extent_y = 1;                     // ly; a single row has no y bonds
    std::vector<std::array<double, 2>> q;  // second component unused in 1D
    double filling() const { return double(q.size()) / total_modes; }
    std::size_t size() const { return q.size(); }
};

namespace detail {
// Integer momentum labels m in [-L/2, L/2) sorted by |m| with ties toward
// positive m: 0, 1, -1, 2, -2, ...
inline std::vector<int> ordered_labels(int L) {
    std::vector<int> m;
    for (int k = -L / 2; k < L - L / 2; ++k) m.push_back(k);
    std::stable_sort(m.begin(), m.end(), [](int a, int b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        return a > b;
    });
    return m;
}
}  // namespace detail

/// N lowest-|q| modes of a periodic chain of L sites (q = 2 pi m / L).
/// Degenerate +-q pairs are filled positive first.
inline ModeSet lowest_modes_1d(int L, int N) {
    require(L >= 1 && N >= 1 && N <= L, "need 1 <= N <= L");
    ModeSet s;
    s.dims = 1;
    s.linear_size = L;
    s.total_modes = L;
    auto m = detail::ordered_labels(L);
    for (int k = 0; k < N; ++k) s.q.push_back({2 * kPi * m[k] / L, 0.0});
    return s;
}

/// N lowest tight-binding modes of an lx x ly periodic layer, ordered by
/// -cos qx - cos qy, ties broken by the 1D label order on each axis.
inline ModeSet lowest_modes_2d(int lx, int ly, int N) {
    require(lx >= 1 && ly >= 1 && N >= 1 && N <= lx * ly, "need 1 <= N <= lx * ly");
    auto mx = detail::ordered_labels(lx);
    auto my = detail::ordered_labels(ly);
    std::vector<std::tuple<double, int, int>> all;
    for (int i = 0; i < lx; ++i)
        for (int j = 0; j < ly; ++j) {
            const double e = -std::cos(2 * kPi * mx[i] / lx) - std::cos(2 * kPi * my[j] / ly);
            all.emplace_back(std::round(e * 1e12) / 1e12, i, j);
        }
    std::stable_sort(all.begin(), all.end());
    ModeSet s;
    s.dims = 2;
    s.linear_size = lx;
    s.total_modes = lx * ly;
    s.extent_y = ly;
    for (int k = 0; k < N; ++k) {
        auto [e, i, j] = all[k];
        s.q.push_back({2 * kPi * mx[i] / lx, 2 * kPi * my[j] / ly});
    }
    return s;
}

inline ModeSet lowest_modes_2d(int ell, int N) { return lowest_modes_2d(ell, ell, N); }

inline ModeSet full_band(int linear_size, int dims) {
    return dims == 1 ? lowest_modes_1d(linear_size, linear_size) : lowest_modes_2d(linear_size, linear_size * linear_size);
}

struct AxialField {
    std::vector<double> B_q;
    double mean_B = 0.0;     // B bar
    double var_root_B = 0.0; // B tilde
};

struct FieldStats {
    double mean = 0.0, var = 0.0;
};

inline FieldStats two_pass_stats(const std::vector<double>& x) {
    FieldStats s;
    for (double v : x) s.mean += v;
    s.mean /= x.size();
    for (double v : x) s.var += (v - s.mean) * (v - s.mean);
    s.var /= x.size();
    return s;
}

inline FieldStats welford_stats(const std::vector<double>& x) {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double v : x) {
        ++n;
        const double d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    return {mean, m2 / n};
}

inline double axial_field(double J, double phi, double qa) { return -4.0 * J * std::sin(qa + phi / 2) * std::sin(phi / 2); }

/// Per-mode fields; in 2D the contributions of the two axes add (phi_x = phi_y = phi).
/// An lx x 1 layer reduces to the chain.
inline AxialField axial_fields(double J, double phi, const ModeSet& modes) {
    require(!modes.q.empty(), "axial_fields: empty mode set");
    AxialField f;
    for (const auto& q : modes.q) {
        double b = axial_field(J, phi, q[0]);
        if (modes.dims == 2 && modes.extent_y > 1) b += axial_field(J, phi, q[1]);
        f.B_q.push_back(b);
    }
    const auto s = two_pass_stats(f.B_q);
    f.mean_B = s.mean;
    f.var_root_B = std::sqrt(s.var);
    return f;
}

struct OATParams {
    double chi = 0.0;
    double mean_B = 0.0;
    double gap = 0.0;  // f U
    int N = 0;
    double field_to_interaction = 0.0;  // B tilde / U
};

/// chi = B~^2 / ((N - 1) f U).
inline OATParams oat_parameters(const AxialField& field, double U, double f, int N) {
    require(U > 0.0, "oat_parameters requires U > 0");
    require(N >= 2, "oat_parameters requires N >= 2");
    require(f > 0.0, "filling must be positive");
    OATParams p;
    p.N = N;
    p.gap = f * U;
    p.mean_B = field.mean_B;
    p.chi = field.var_root_B * field.var_root_B / ((N - 1) * f * U);
    p.field_to_interaction = field.var_root_B / U;
    return p;
}

}  // namespace sqz::spin
