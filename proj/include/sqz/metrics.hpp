#pragma once

// Ramsey squeezing parameter and trace post-processing shared by every
// dynamics backend.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sqz/common.hpp"

namespace sqz {

/// Mean collective spin and symmetrized second moments <(S_i S_j + S_j S_i)/2>.
struct SpinSnapshot {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d second_moments = Eigen::Matrix3d::Zero();
    double n_spins = 0.0;
    double time = 0.0;

    Eigen::Matrix3d covariance() const { return second_moments - mean * mean.transpose(); }
};

/// Expectation values of the collective monomials needed for a snapshot.
/// Convention: S+ = Sx + i Sy.
struct CollectiveMoments {
    double sz = 0.0;
    Complex sp{};     // <S+>
    double spsm = 0;  // <S+ S->
    Complex spsp{};   // <S+ S+>
    Complex spsz{};   // <S+ Sz>
    double szsz = 0;  // <Sz Sz>
};

inline SpinSnapshot snapshot_from_moments(const CollectiveMoments& m, double n_spins, double time) {
    SpinSnapshot s;
    s.n_spins = n_spins;
    s.time = time;
    s.mean = {m.sp.real(), m.sp.imag(), m.sz};
    const double xx = 0.5 * (m.spsp.real() + m.spsm - m.sz);
    const double yy = 0.5 * (-m.spsp.real() + m.spsm - m.sz);
    const double xy = 0.5 * m.spsp.imag();
    const double xz = m.spsz.real() + 0.5 * m.sp.real();
    const double yz = m.spsz.imag() + 0.5 * m.sp.imag();
    s.second_moments << xx, xy, xz, xy, yy, yz, xz, yz, m.szsz;
    return s;
}

struct SqueezingValue {
    double xi2 = 1.0;
    /// Angle of the minimal-variance axis in the plane orthogonal to the
    /// mean spin, measured from the first transverse basis vector.
    double theta_min = 0.0;
};

/// Orthonormal pair spanning the plane orthogonal to n.
inline std::pair<Eigen::Vector3d, Eigen::Vector3d> transverse_basis(const Eigen::Vector3d& n) {
    Eigen::Vector3d helper = std::abs(n.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
    Eigen::Vector3d e1 = helper.cross(n).normalized();
    Eigen::Vector3d e2 = n.cross(e1).normalized();
    return {e1, e2};
}

/// xi^2 = min_theta var(S_perp,theta) * N / |<S>|^2, minimized in closed
/// form as the smaller eigenvalue of the transverse 2x2 covariance.
inline SqueezingValue squeezing_parameter(const SpinSnapshot& snap) {
    const double len = snap.mean.norm();
    if (!(len > 0.0)) throw Error("undefined squeezing direction: zero mean spin");
    const Eigen::Vector3d n = snap.mean / len;
    auto [e1, e2] = transverse_basis(n);
    const Eigen::Matrix3d cov = snap.covariance();
    const double a = e1.dot(cov * e1);
    const double b = e2.dot(cov * e2);
    const double c = 0.5 * (e1.dot(cov * e2) + e2.dot(cov * e1));
    const double half_tr = 0.5 * (a + b);
    const double disc = std::sqrt(0.25 * (a - b) * (a - b) + c * c);
    const double lmin = half_tr - disc;
    // var(cos t e1 + sin t e2) = a cos^2 + b sin^2 + 2c sin cos, minimized at
    // t = (atan2(2c, a - b) + pi) / 2.
    const double theta = 0.5 * (std::atan2(2.0 * c, a - b) + kPi);
    return {std::max(lmin, 0.0) * snap.n_spins / (len * len), theta};
}

inline double to_db(double xi2) { return -10.0 * std::log10(xi2); }

/// Time series of snapshots with derived squeezing values.
struct SqueezingTrace {
    std::vector<double> times;
    std::vector<SpinSnapshot> snapshots;
    std::vector<double> xi2;
    std::vector<double> db;
    std::vector<bool> valid;

    std::size_t size() const { return times.size(); }

    void push(const SpinSnapshot& s, bool ok = true) {
        times.push_back(s.time);
        snapshots.push_back(s);
        double x = std::numeric_limits<double>::quiet_NaN();
        if (ok) {
            try {
                x = squeezing_parameter(s).xi2;
            } catch (const Error&) {
                ok = false;
            }
        }
        xi2.push_back(x);
        db.push_back(ok && x > 0.0 ? to_db(x) : std::numeric_limits<double>::quiet_NaN());
        valid.push_back(ok && x > 0.0 && std::isfinite(x));
    }

    /// Append a point given only by its xi^2 (used by samplers that do not
    /// keep snapshots).
    void push_value(double t, double x, bool ok = true) {
        times.push_back(t);
        snapshots.push_back({});
        xi2.push_back(x);
        const bool good = ok && x > 0.0 && std::isfinite(x);
        db.push_back(good ? to_db(x) : std::numeric_limits<double>::quiet_NaN());
        valid.push_back(good);
    }
};

struct OptimalPoint {
    double t_opt = 0.0;
    double db_opt = 0.0;
    bool bracketed = false;
    std::size_t index = 0;
    /// t_opt expressed in tunneling times 2 pi / J, when J was supplied.
    std::optional<double> t_opt_tunneling;
};

/// Vertex of the parabola through three points (x_i, y_i).
inline std::pair<double, double> parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d0 = (y1 - y0) / (x1 - x0);
    const double d1 = (y2 - y1) / (x2 - x1);
    const double a = (d1 - d0) / (x2 - x0);
    if (a == 0.0) return {x1, y1};
    const double b = d0 - a * (x0 + x1);
    const double c = y0 - a * x0 * x0 - b * x0;
    const double xv = -b / (2.0 * a);
    return {xv, c - b * b / (4.0 * a)};
}

/// Location of maximal squeezing (in dB) among valid points, refined by a
/// local quadratic fit when the extremum is interior.
inline OptimalPoint optimal_point(const SqueezingTrace& trace, std::optional<double> J = std::nullopt) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < trace.size(); ++i)
        if (trace.valid[i]) idx.push_back(i);
    if (idx.size() < 3) throw Error("optimal_point needs at least 3 valid points");
    std::size_t best = 0;
    for (std::size_t k = 1; k < idx.size(); ++k)
        if (trace.db[idx[k]] > trace.db[idx[best]]) best = k;
    OptimalPoint p;
    p.index = idx[best];
    p.t_opt = trace.times[idx[best]];
    p.db_opt = trace.db[idx[best]];
    if (best > 0 && best + 1 < idx.size()) {
        const auto i0 = idx[best - 1], i1 = idx[best], i2 = idx[best + 1];
        auto [tv, dv] = parabola_vertex(trace.times[i0], trace.db[i0], trace.times[i1], trace.db[i1],
                                        trace.times[i2], trace.db[i2]);
        if (tv >= trace.times[i0] && tv <= trace.times[i2] && dv >= p.db_opt) {
            p.t_opt = tv;
            p.db_opt = dv;
        }
        p.bracketed = true;
    }
    if (J) p.t_opt_tunneling = p.t_opt * *J / (2.0 * kPi);
    return p;
}

}  // namespace sqz
