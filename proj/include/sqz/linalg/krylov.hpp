#pragma once

// Lanczos propagation exp(-i H t) psi for Hermitian operators given only by
// their action on vectors.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sqz/common.hpp"

namespace sqz::linalg {

using CVec = Eigen::VectorXcd;

struct KrylovOptions {
    int max_dim = 40;
    double tolerance = 1e-10;  // accumulated error bound on the state vector
};

struct KrylovStats {
    int steps = 0;
    int applications = 0;
    double error_estimate = 0.0;
};

/// exp(-i H t) psi with adaptive sub-steps. `apply(const CVec& in, CVec& out)`
/// must write H in into out (out is presized).
template <class Apply>
CVec expm_multiply(const Apply& apply, CVec psi, double t, const KrylovOptions& opt = {}, KrylovStats* stats = nullptr) {
    require(std::isfinite(t), "evolution time must be finite");
    require(opt.tolerance > 0.0 && opt.max_dim >= 2, "invalid Krylov options");
    KrylovStats st;
    if (t == 0.0 || psi.size() == 0) {
        if (stats) *stats = st;
        return psi;
    }
    const double sign = t < 0 ? -1.0 : 1.0;
    double remaining = std::abs(t);
    const double total = remaining;
    double dt = remaining;
    const Eigen::Index n = psi.size();
    const int m_max = static_cast<int>(std::min<Eigen::Index>(opt.max_dim, n));

    std::vector<CVec> V;
    CVec w(n);
    while (remaining > 0.0) {
        const double nrm = psi.norm();
        if (nrm == 0.0) break;
        V.assign(1, psi / nrm);
        std::vector<double> alpha, beta;
        bool breakdown = false;
        for (int j = 0; j < m_max; ++j) {
            apply(V[j], w);
            ++st.applications;
            const double a = V[j].dot(w).real();
            alpha.push_back(a);
            w -= a * V[j];
            if (j > 0) w -= beta[j - 1] * V[j - 1];
            for (const auto& v : V) w -= v.dot(w) * v;  // full reorthogonalization
            const double b = w.norm();
            beta.push_back(b);
            if (b < 1e-13 * std::max(1.0, std::abs(a))) {
                breakdown = true;
                break;
            }
            if (j + 1 < m_max) V.push_back(w / b);
        }
        const int m = static_cast<int>(alpha.size());
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const auto& lam = es.eigenvalues();
        const Eigen::MatrixXd& Q = es.eigenvectors();

        auto coeffs = [&](double h) {
            Eigen::VectorXcd c(m);
            for (int i = 0; i < m; ++i) c(i) = std::exp(Complex(0, -sign * lam(i) * h)) * Q(0, i);
            return Eigen::VectorXcd(Q.cast<Complex>() * c);
        };
        dt = std::min(dt, remaining);
        Eigen::VectorXcd y;
        double err = 0.0;
        for (int attempt = 0;; ++attempt) {
            y = coeffs(dt);
            err = breakdown ? 0.0 : beta.back() * std::abs(y(m - 1)) * nrm;
            if (err <= opt.tolerance * dt / total || breakdown) break;
            if (attempt > 60) throw Error("Krylov propagation did not converge; residual " + std::to_string(err));
            dt *= 0.5;
        }
        CVec next = CVec::Zero(n);
        for (int i = 0; i < m; ++i) next += y(i) * V[i];
        psi = nrm * next;
        remaining -= dt;
        if (remaining < 1e-14 * total) remaining = 0.0;
        st.error_estimate += err;
        ++st.steps;
        if (err < 0.1 * opt.tolerance * dt / total) dt *= 1.5;
    }
    if (stats) *stats = st;
    return psi;
}

}  // namespace sqz::linalg
