#pragma once

// Moment propagation for permutation-symmetric spin ensembles.
//
// The state is described by the symmetric correlators
//   r(a, b, c) = < s+_{i1..ia} sz_{j1..jb} s-_{k1..kc} >
// on a + b + c distinct spins, which by permutation symmetry do not depend on
// the labels. Collective monomials S+^m+ Sz^mz S-^m- are linear combinations
// of these, and |r| <= 1 keeps the recursion well scaled. With degree cap
// D = N the set is closed under any Hamiltonian of degree <= 2 and under
// uncorrelated single-spin jumps: the only degree-raising term carries the
// factor (N - d), which vanishes at d = N.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "sqz/dynamics/decoherence.hpp"
#include "sqz/metrics.hpp"

namespace sqz {

namespace detail {
// High-degree correlators underflow into subnormals, which are far below
// any tolerance but slow every multiply; flush them while in scope.
class FlushSubnormals {
public:
#if defined(__SSE__)
    FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
    ~FlushSubnormals() { _mm_setcsr(saved_); }
private:
    unsigned saved_;
#endif
};
}  // namespace detail

/// Exponents of the collective monomial S+^m_plus Sz^m_z S-^m_minus.
struct OpIndex {
    int m_plus = 0, m_z = 0, m_minus = 0;
    int degree() const { return m_plus + m_z + m_minus; }
    auto operator<=>(const OpIndex&) const = default;
};

/// Hamiltonian as a sum of collective monomials with complex coefficients.
/// The caller is responsible for hermiticity.
struct CollectiveHamiltonian {
    std::vector<std::pair<OpIndex, Complex>> terms;

    CollectiveHamiltonian& add(OpIndex m, Complex c) {
        if (c != 0.0) terms.emplace_back(m, c);
        return *this;
    }
    bool empty() const { return terms.empty(); }
};

inline CollectiveHamiltonian oat_hamiltonian(double chi) { return CollectiveHamiltonian{}.add({0, 2, 0}, chi); }

/// Triangular layout of all (a, b, c) with a + b + c <= D.
class MomentBasis {
public:
    MomentBasis() = default;
    MomentBasis(int n_spins, int degree_cap) : n_(n_spins), d_(degree_cap) {
        require(n_spins >= 2, "moment engine requires N >= 2");
        require(degree_cap >= 2 && degree_cap <= n_spins, "degree cap must lie in [2, N]");
    }
    int n_spins() const { return n_; }
    int degree_cap() const { return d_; }
    Eigen::Index size() const { return offset(d_ + 1); }

    static Eigen::Index offset(int d) { return Eigen::Index(d) * (d + 1) * (d + 2) / 6; }
    Eigen::Index index(int a, int b, int c) const {
        const int d = a + b + c;
        return offset(d) + Eigen::Index(a) * (d + 1) - Eigen::Index(a) * (a - 1) / 2 + b;
    }
    bool contains(int a, int b, int c) const { return a >= 0 && b >= 0 && c >= 0 && a + b + c <= d_; }

    /// Calls f(a, b, c, index) in storage order.
    template <class F>
    void for_each(F&& f) const {
        Eigen::Index i = 0;
        for (int d = 0; d <= d_; ++d)
            for (int a = 0; a <= d; ++a)
                for (int b = 0; b <= d - a; ++b) f(a, b, d - a - b, i++);
    }

private:
    int n_ = 0, d_ = 0;
};

/// Symmetric correlators at a given time.
struct MomentTable {
    MomentBasis basis;
    Eigen::VectorXcd values;
    double time = 0.0;

    int n_spins() const { return basis.n_spins(); }
    Complex r(int a, int b, int c) const { return values(basis.index(a, b, c)); }

    /// Expectation of the collective monomial for degree <= 2.
    CollectiveMoments collective() const {
        const double n = n_spins();
        const double pairs = n * (n - 1);
        CollectiveMoments m;
        m.sz = n * r(0, 1, 0).real();
        m.sp = n * r(1, 0, 0);
        m.spsm = n * (0.5 + r(0, 1, 0).real()) + pairs * r(1, 0, 1).real();
        m.spsp = pairs * r(2, 0, 0);
        m.spsz = -0.5 * n * r(1, 0, 0) + pairs * r(1, 1, 0);
        m.szsz = n / 4 + pairs * r(0, 2, 0).real();
        return m;
    }
    SpinSnapshot snapshot() const { return snapshot_from_moments(collective(), n_spins(), time); }

    /// max |r(a,b,c) - conj r(c,b,a)|; zero for a physical state.
    double hermiticity_drift() const {
        double worst = 0.0;
        basis.for_each([&](int a, int b, int c, Eigen::Index i) {
            if (a < c) worst = std::max(worst, std::abs(values(i) - std::conj(r(c, b, a))));
        });
        return worst;
    }
};

/// Product state with every spin along (theta, phi); theta is the polar angle from +z.
inline MomentTable coherent_moments(int n_spins, double theta, double phi, int degree_cap = -1) {
    MomentTable t;
    t.basis = MomentBasis(n_spins, degree_cap < 0 ? n_spins : degree_cap);
    t.values.resize(t.basis.size());
    const Complex p = 0.5 * std::sin(theta) * std::exp(kI * phi);
    const Complex z = 0.5 * std::cos(theta);
    t.basis.for_each([&](int a, int b, int c, Eigen::Index i) {
        t.values(i) = std::pow(p, a) * std::pow(z, b) * std::pow(std::conj(p), c);
    });
    return t;
}

/// Instantaneous global pi pulse about x or y.
inline void apply_pi_pulse(MomentTable& t, char axis) {
    require(axis == 'x' || axis == 'y', "pi pulse axis must be x or y");
    Eigen::VectorXcd out(t.values.size());
    t.basis.for_each([&](int a, int b, int c, Eigen::Index i) {
        const int parity = axis == 'x' ? b : a + b + c;
        out(i) = (parity % 2 ? -1.0 : 1.0) * t.r(c, b, a);
    });
    t.values = std::move(out);
}

/// Global rotation exp(-i alpha Sz).
inline void apply_z_rotation(MomentTable& t, double alpha) {
    t.basis.for_each([&](int a, int, int c, Eigen::Index i) { t.values(i) *= std::exp(kI * alpha * double(a - c)); });
}

/// Linear generator d r / dt = T r for a degree <= 2 Hamiltonian and
/// uncorrelated local jumps. Stored as a stencil over (a, b, c) so that
/// application is matrix-free.
class MomentGenerator {
public:
    MomentGenerator(const MomentBasis& basis, const CollectiveHamiltonian& h, const std::vector<LocalJump>& jumps)
        : basis_(basis) {
        const std::array<Mat2, 3> e = {local::sp(), local::sz(), local::sm()};
        Mat2 one_body = Mat2::Zero();
        struct Pair { Complex w; Mat2 A, B; };
        std::vector<Pair> two_body;
        for (const auto& [m, coef] : h.terms) {
            require(m.m_plus >= 0 && m.m_z >= 0 && m.m_minus >= 0, "negative monomial exponent");
            require(m.degree() <= 2, "Hamiltonian monomials above degree 2 are not supported");
            std::vector<Mat2> f;
            for (int k = 0; k < m.m_plus; ++k) f.push_back(e[0]);
            for (int k = 0; k < m.m_z; ++k) f.push_back(e[1]);
            for (int k = 0; k < m.m_minus; ++k) f.push_back(e[2]);
            if (f.size() == 1) one_body += coef * f[0];
            if (f.size() == 2) {
                one_body += coef * f[0] * f[1];
                two_body.push_back({coef, f[0], f[1]});
            }
        }
        for (int t = 0; t < 3; ++t) {
            const Mat2& O = e[t];
            // one-body commutator and jumps act on each support spin
            Mat2 local_gen = kI * (one_body * O - O * one_body);
            for (const auto& j : jumps)
                local_gen += j.rate * (j.op.adjoint() * O * j.op - 0.5 * (j.op.adjoint() * j.op * O + O * j.op.adjoint() * j.op));
            add_single(Kind::support, t, 0, local_gen);
            for (const auto& p : two_body) {
                // one spin in the support, its partner outside
                add_pair(Kind::outside, t, 0, kI * p.w * (p.A * O - O * p.A), p.B, true);
                add_pair(Kind::outside, t, 0, kI * p.w * (p.B * O - O * p.B), p.A, true);
                for (int t2 = 0; t2 < 3; ++t2) {
                    const Mat2& O2 = e[t2];
                    add_pair(Kind::pair, t, t2, kI * p.w * (p.A * O), p.B * O2, false);
                    add_pair(Kind::pair, t, t2, -kI * p.w * (O * p.A), O2 * p.B, false);
                }
            }
        }
        for (const auto& [key, c] : merged_)
            if (std::abs(c) > 1e-15) stencil_.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                                                         std::get<3>(key), std::get<4>(key), std::get<5>(key), c});
        merged_.clear();
        for (auto& st : stencil_) st.dd = st.da + st.db + st.dc;
        const int D = basis_.degree_cap();
        start_.resize(std::size_t(D + 1) * (D + 1));
        for (int d = 0; d <= D; ++d)
            for (int a = 0; a <= d; ++a) start_[std::size_t(d) * (D + 1) + a] = basis_.index(a, 0, d - a);
    }

    const MomentBasis& basis() const { return basis_; }
    std::size_t stencil_size() const { return stencil_.size(); }

    void apply(const Eigen::VectorXcd& r, Eigen::VectorXcd& out) const {
        detail::FlushSubnormals ftz;
        out.setZero(r.size());
        const int N = basis_.n_spins(), D = basis_.degree_cap();
        const Complex* in = r.data();
        Complex* o = out.data();
        // Stencil-major: along a row of fixed (d, a) both source and target
        // are contiguous in b and the count factor is polynomial in b.
        for (const auto& s : stencil_) {
            for (int d = std::max(0, -s.dd); d <= D && d + s.dd <= D; ++d) {
                const int d2 = d + s.dd;
                for (int a = std::max(0, -s.da); a <= d && a + s.da <= d2; ++a) {
                    const int b_lo = std::max(0, -s.db), b_hi = std::min(d - a, d - a + s.dc);
                    if (b_lo > b_hi) continue;
                    Complex* dst = o + start(d, a);
                    const Complex* src = in + start(d2, a + s.da) + s.db;
                    // explicit real arithmetic avoids the NaN-checking complex multiply
                    const double cr = s.coef.real(), ci = s.coef.imag();
                    double* dp = reinterpret_cast<double*>(dst);
                    const double* sp = reinterpret_cast<const double*>(src);
                    // count factor (u0 + u1 b)(v0 + v1 b)
                    double u0, u1, v0 = 1.0, v1 = 0.0;
                    linear_count(s.t1, a, d, u0, u1);
                    if (s.kind == Kind::pair) {
                        linear_count(s.t2, a, d, v0, v1);
                        v0 -= (s.t1 == s.t2);
                    } else if (s.kind == Kind::outside) {
                        v0 = N - d;
                    }
                    for (int b = b_lo; b <= b_hi; ++b) {
                        const double f = (u0 + u1 * b) * (v0 + v1 * b);
                        const double xr = sp[2 * b], xi = sp[2 * b + 1];
                        dp[2 * b] += f * (cr * xr - ci * xi);
                        dp[2 * b + 1] += f * (cr * xi + ci * xr);
                    }
                }
            }
        }
    }

    Eigen::SparseMatrix<Complex> to_sparse() const {
        std::vector<Eigen::Triplet<Complex>> trip;
        const int N = basis_.n_spins();
        basis_.for_each([&](int a, int b, int c, Eigen::Index i) {
            const int n[3] = {a, b, c};
            for (const auto& s : stencil_) {
                const double f = factor(s, n, N);
                if (f == 0.0 || a + b + c + s.da + s.db + s.dc > basis_.degree_cap()) continue;
                trip.emplace_back(i, basis_.index(a + s.da, b + s.db, c + s.dc), s.coef * f);
            }
        });
        Eigen::SparseMatrix<Complex> T(basis_.size(), basis_.size());
        T.setFromTriplets(trip.begin(), trip.end());
        return T;
    }

    /// Row-sum bound on ||T||_inf.
    double norm_bound() const {
        double worst = 0.0;
        const int N = basis_.n_spins();
        basis_.for_each([&](int a, int b, int c, Eigen::Index) {
            const int n[3] = {a, b, c};
            double s = 0.0;
            for (const auto& st : stencil_) s += std::abs(st.coef) * factor(st, n, N);
            worst = std::max(worst, s);
        });
        return worst;
    }

private:
    enum class Kind { support, pair, outside };
    struct Stencil {
        Kind kind;
        int t1, t2;
        int da, db, dc;
        Complex coef;
        int dd = 0;
    };

    Eigen::Index start(int d, int a) const { return start_[std::size_t(d) * (basis_.degree_cap() + 1) + a]; }

    // n[t] = c0 + c1 b along a row of fixed (d, a)
    static void linear_count(int t, int a, int d, double& c0, double& c1) {
        if (t == 0) c0 = a, c1 = 0;
        else if (t == 1) c0 = 0, c1 = 1;
        else c0 = d - a, c1 = -1;
    }

    static inline double factor(const Stencil& s, const int* n, int N) {
        switch (s.kind) {
            case Kind::support: return n[s.t1];
            case Kind::pair: return double(n[s.t1]) * (n[s.t2] - (s.t1 == s.t2));
            case Kind::outside: return double(n[s.t1]) * (N - n[0] - n[1] - n[2]);
        }
        return 0.0;
    }

    // Components on {1, s+, sz, s-}; index 0 is the identity.
    static std::array<Complex, 4> decompose(const Mat2& M) {
        return {0.5 * (M(0, 0) + M(1, 1)), M(0, 1), M(0, 0) - M(1, 1), M(1, 0)};
    }

    void accumulate(Kind k, int t1, int t2, std::array<int, 3> shift, Complex c) {
        if (c == 0.0) return;
        merged_[{k, t1, t2, shift[0], shift[1], shift[2]}] += c;
    }

    // Support spin of type t replaced by M.
    void add_single(Kind k, int t, int t2, const Mat2& M) {
        const auto d = decompose(M);
        for (int e = 0; e < 4; ++e) {
            std::array<int, 3> shift{0, 0, 0};
            shift[t] -= 1;
            if (e > 0) shift[e - 1] += 1;
            accumulate(k, t, t2, shift, d[e]);
        }
    }

    // Two sites replaced by M1 (the support spin of type t) and M2 (either
    // the support spin of type t2 or a fresh spin outside the support).
    void add_pair(Kind k, int t, int t2, const Mat2& M1, const Mat2& M2, bool fresh) {
        const auto d1 = decompose(M1), d2 = decompose(M2);
        for (int e1 = 0; e1 < 4; ++e1)
            for (int e2 = 0; e2 < 4; ++e2) {
                std::array<int, 3> shift{0, 0, 0};
                shift[t] -= 1;
                if (!fresh) shift[t2] -= 1;
                if (e1 > 0) shift[e1 - 1] += 1;
                if (e2 > 0) shift[e2 - 1] += 1;
                accumulate(k, t, fresh ? 0 : t2, shift, d1[e1] * d2[e2]);
            }
    }

    MomentBasis basis_;
    std::vector<Stencil> stencil_;
    std::vector<Eigen::Index> start_;
    std::map<std::tuple<Kind, int, int, int, int, int>, Complex> merged_;
};

struct TaylorOptions {
    int series_order = 40;          // maximum terms per step, >= 10
    double tolerance = 1e-10;       // relative tail tolerance per step
    double hermiticity_tolerance = 1e-6;
    double initial_step = 0.0;      // 0: derived from the row-sum bound of T
};

struct PropagationResult {
    MomentTable table;
    bool valid = true;
    int steps = 0;
    double last_step = 0.0;  // proposed step; reuse as initial_step for the next segment
    long applications = 0;
    double max_tail = 0.0;
    std::string reason;
};

/// Advances the table by t with Taylor partial sums of exp(T dt). Steps are
/// chosen so the series converges within series_order terms without
/// catastrophic cancellation; the result is flagged invalid when the tail
/// never drops below tolerance, values become non-finite or the
/// hermiticity pairing drifts.
inline PropagationResult taylor_propagate(const MomentGenerator& T, MomentTable init, double t, const TaylorOptions& opt = {}) {
    require(opt.series_order >= 10, "series_order must be >= 10");
    require(t >= 0.0, "propagation time must be >= 0");
    require(init.basis.size() == T.basis().size(), "moment table and generator bases differ");
    PropagationResult res;
    res.table = std::move(init);
    if (t == 0.0) return res;
    detail::FlushSubnormals ftz;

    double dt = opt.initial_step > 0.0 ? opt.initial_step : 4.0 / std::max(T.norm_bound(), 1e-300);
    double remaining = t;
    Eigen::VectorXcd term, next, sum;
    while (remaining > 0.0) {
        double h = std::min(dt, remaining);
        bool ok = false;
        for (int attempt = 0; attempt < 60 && !ok; ++attempt) {
            term = res.table.values;
            sum = term;
            const double base = std::max(1.0, term.cwiseAbs().maxCoeff());
            double peak = base, tail = 0.0;
            int k = 1;
            for (; k <= opt.series_order; ++k) {
                T.apply(term, next);
                ++res.applications;
                term = next * (h / k);
                sum += term;
                const double mag = term.cwiseAbs().maxCoeff();
                peak = std::max(peak, mag);
                tail = mag;
                if (!std::isfinite(mag) || peak > 1e4 * base) break;
                if (mag < opt.tolerance * base) break;
            }
            if (std::isfinite(tail) && peak <= 1e4 * base && tail < opt.tolerance * base) {
                ok = true;
                res.max_tail = std::max(res.max_tail, tail);
                // grow the step when the series converged quickly
                dt = (k < opt.series_order / 2) ? h * 1.5 : h;
            } else {
                h *= 0.5;
            }
        }
        if (!ok) {
            res.valid = false;
            res.reason = "Taylor series failed to converge";
            return res;
        }
        res.table.values = sum;
        res.table.time += h;
        res.last_step = std::max(dt, h);
        remaining -= h;
        if (remaining < 1e-14 * t) remaining = 0.0;
        ++res.steps;
        if (!res.table.values.allFinite()) {
            res.valid = false;
            res.reason = "non-finite moments";
            return res;
        }
    }
    const double drift = res.table.hermiticity_drift();
    if (drift > opt.hermiticity_tolerance) {
        res.valid = false;
        res.reason = "hermiticity drift " + std::to_string(drift);
    }
    return res;
}

}  // namespace sqz

namespace sqz {

/// Instantaneous pi pulse at a given time.
struct PiPulse {
    double time = 0.0;
    char axis = 'x';
};

struct MomentTraceResult {
    SqueezingTrace trace;
    MomentTable final_table;
    bool valid = true;
    std::string reason;
};

/// Samples the squeezing parameter at sample_times (sorted), applying pulses
/// when their time is reached. Sampling stops at the first invalid step;
/// with stop_after_rise > 0 it also stops once xi^2 has risen for that many
/// consecutive samples past its running minimum.
inline MomentTraceResult moment_trace(const MomentGenerator& T, MomentTable table, const std::vector<double>& sample_times,
                                      std::vector<PiPulse> pulses = {}, const TaylorOptions& opt = {},
                                      int stop_after_rise = 0) {
    require(std::is_sorted(sample_times.begin(), sample_times.end()), "sample times must be sorted");
    std::sort(pulses.begin(), pulses.end(), [](const PiPulse& a, const PiPulse& b) { return a.time < b.time; });
    MomentTraceResult out;
    TaylorOptions o = opt;
    std::size_t next_pulse = 0;
    double best = std::numeric_limits<double>::infinity();
    int rises = 0;
    auto advance = [&](double target) {
        if (target <= table.time) return true;
        auto r = taylor_propagate(T, std::move(table), target - table.time, o);
        table = std::move(r.table);
        o.initial_step = r.last_step;
        if (!r.valid) {
            out.valid = false;
            out.reason = r.reason;
        }
        return r.valid;
    };
    for (double ts : sample_times) {
        while (out.valid && next_pulse < pulses.size() && pulses[next_pulse].time <= ts) {
            if (!advance(pulses[next_pulse].time)) break;
            apply_pi_pulse(table, pulses[next_pulse].axis);
            ++next_pulse;
        }
        if (!out.valid || !advance(ts)) break;
        out.trace.push(table.snapshot());
        const bool ok = out.trace.valid.back();
        const double xi2 = out.trace.xi2.back();
        if (stop_after_rise > 0 && ok) {
            if (xi2 < best) best = xi2, rises = 0;
            else if (++rises >= stop_after_rise) break;
        }
    }
    out.final_table = std::move(table);
    return out;
}

}  // namespace sqz
