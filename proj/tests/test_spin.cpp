#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "sqz/spin/axial.hpp"
#include "sqz/spin/hamiltonian.hpp"

using namespace sqz;
using namespace sqz::spin;

TEST(AxialFields, ZeroSocAngleGivesNoField) {
    auto f = axial_fields(1.0, 0.0, lowest_modes_1d(16, 7));
    for (double b : f.B_q) EXPECT_EQ(b, 0.0);
    EXPECT_EQ(f.mean_B, 0.0);
    EXPECT_EQ(f.var_root_B, 0.0);
}

TEST(AxialFields, FullBandHasNoMeanField) {
    EXPECT_NEAR(axial_fields(1.0, kPi / 7, full_band(20, 1)).mean_B, 0.0, 1e-14);
    EXPECT_NEAR(axial_fields(1.0, kPi / 7, full_band(6, 2)).mean_B, 0.0, 1e-14);
}

TEST(AxialFields, FieldVanishesAtShiftedMode) {
    const double phi = 0.37;
    ModeSet one;
    one.dims = 1;
    one.linear_size = one.total_modes = 1;
    one.q = {{-phi / 2, 0.0}};
    EXPECT_NEAR(axial_fields(2.0, phi, one).B_q[0], 0.0, 1e-15);
}

TEST(AxialFields, RejectsEmptyModeSet) {
    EXPECT_THROW(axial_fields(1.0, 0.1, ModeSet{}), Error);
}

TEST(AxialFields, StatisticsAgreeAcrossAccumulators) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<double> x(997);
    for (auto& v : x) v = 1e3 + u(rng);
    auto a = two_pass_stats(x), b = welford_stats(x);
    EXPECT_NEAR(a.mean, b.mean, 1e-12 * std::abs(a.mean));
    EXPECT_NEAR(a.var, b.var, 1e-12 * a.var);
    auto f = axial_fields(1.0, kPi / 9, lowest_modes_2d(8, 40));
    auto w = welford_stats(f.B_q);
    EXPECT_NEAR(f.mean_B, w.mean, 1e-12);
    EXPECT_NEAR(f.var_root_B * f.var_root_B, w.var, 1e-12);
}

TEST(AxialFields, SingleRowLayerMatchesChain) {
    for (int N : {1, 5, 10}) {
        auto a = axial_fields(1.3, kPi / 11, lowest_modes_1d(10, N));
        auto b = axial_fields(1.3, kPi / 11, lowest_modes_2d(10, 1, N));
        ASSERT_EQ(a.B_q.size(), b.B_q.size());
        for (std::size_t i = 0; i < a.B_q.size(); ++i) EXPECT_NEAR(a.B_q[i], b.B_q[i], 1e-15);
        EXPECT_NEAR(a.var_root_B, b.var_root_B, 1e-15);
    }
}

TEST(AxialFields, LowestModesFillSymmetricallyPositiveFirst) {
    auto m = lowest_modes_1d(8, 4);
    const double d = 2 * kPi / 8;
    EXPECT_NEAR(m.q[0][0], 0.0, 1e-15);
    EXPECT_NEAR(m.q[1][0], d, 1e-15);
    EXPECT_NEAR(m.q[2][0], -d, 1e-15);
    EXPECT_NEAR(m.q[3][0], 2 * d, 1e-15);
    EXPECT_DOUBLE_EQ(m.filling(), 0.5);
}

TEST(OatParameters, ChiScalesWithFieldSquaredAndInverseN) {
    AxialField f;
    f.var_root_B = 0.3;
    auto a = oat_parameters(f, 10.0, 0.5, 21);
    f.var_root_B = 0.6;
    auto b = oat_parameters(f, 10.0, 0.5, 21);
    EXPECT_NEAR(b.chi / a.chi, 4.0, 1e-12);
    auto c = oat_parameters(f, 10.0, 0.5, 2001);
    EXPECT_NEAR(c.chi * 2000, b.chi * 20, 1e-12);
    EXPECT_NEAR(b.field_to_interaction, 0.06, 1e-15);
    EXPECT_THROW(oat_parameters(f, 0.0, 0.5, 4), Error);
    EXPECT_THROW(oat_parameters(f, -1.0, 0.5, 4), Error);
    EXPECT_THROW(oat_parameters(f, 1.0, 0.5, 1), Error);
}

TEST(OatParameters, MatchesDirectSummation) {
    // L = 20 chain, 10 lowest-|q| modes: m = 0, 1, -1, ..., 4, -4, 5
    const int L = 20, N = 10;
    const double J = 1.0, U = 10.0, phi = kPi / 25, f = 0.5;
    const int labels[N] = {0, 1, -1, 2, -2, 3, -3, 4, -4, 5};
    double s1 = 0, s2 = 0;
    for (int m : labels) {
        const double b = -4 * J * std::sin(2 * kPi * m / L + phi / 2) * std::sin(phi / 2);
        s1 += b;
        s2 += b * b;
    }
    const double var = s2 / N - (s1 / N) * (s1 / N);
    const double chi = var / ((N - 1) * f * U);
    auto modes = lowest_modes_1d(L, N);
    auto p = oat_parameters(axial_fields(J, phi, modes), U, modes.filling(), N);
    EXPECT_NEAR(p.chi, chi, 1e-14);
    EXPECT_NEAR(p.mean_B, s1 / N, 1e-14);
    EXPECT_NEAR(p.gap, 5.0, 1e-15);
}

namespace {
Eigen::MatrixXd dense_sz(int N) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(1 << N, 1 << N);
    for (int s = 0; s < (1 << N); ++s) m(s, s) = popcount(s) - 0.5 * N;
    return m;
}
}  // namespace

TEST(SpinHamiltonian, TwoSpinsSplitTripletFromSinglet) {
    const double U = 3.0;
    const int L = 5;
    SpinHamiltonian H({0.0, 0.0}, U, L);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.dense());
    auto ev = es.eigenvalues();
    EXPECT_NEAR(ev(0), -2 * U / L, 1e-14);
    EXPECT_NEAR(ev(1), -2 * U / L, 1e-14);
    EXPECT_NEAR(ev(2), -2 * U / L, 1e-14);
    EXPECT_NEAR(ev(3), 0.0, 1e-14);
}

TEST(SpinHamiltonian, HermitianAndConservesSz) {
    auto f = axial_fields(1.0, kPi / 5, lowest_modes_1d(9, 8));
    SpinHamiltonian H(f.B_q, 4.0, 9);
    Eigen::MatrixXd h = H.dense();
    EXPECT_EQ((h - h.transpose()).norm(), 0.0);
    Eigen::MatrixXd sz = dense_sz(8);
    EXPECT_LT((h * sz - sz * h).norm(), 1e-12);
}

TEST(SpinHamiltonian, MatrixFreeActionMatchesSparse) {
    auto f = axial_fields(1.0, kPi / 6, lowest_modes_1d(12, 10));
    SpinHamiltonian H(f.B_q, 2.0, 12);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    CVec v(1 << 10), out(1 << 10);
    for (auto& x : v) x = Complex(g(rng), g(rng));
    H.apply(v, out);
    CVec ref = H.sparse().cast<Complex>() * v;
    EXPECT_LT((out - ref).norm(), 1e-12 * ref.norm());
}

TEST(SpinHamiltonian, UniformFieldIsCollective) {
    const int N = 6, L = 8;
    const double U = 2.0, B = 0.7;
    SpinHamiltonian H(std::vector<double>(N, B), U, L);
    // -(U/L) S.S - B Sz with S.S built from dense collective matrices
    const int d = 1 << N;
    Eigen::MatrixXcd S[3];
    for (int a = 0; a < 3; ++a) {
        S[a].resize(d, d);
        for (int j = 0; j < d; ++j) {
            CVec e = CVec::Zero(d), o;
            e[j] = 1.0;
            ops::collective(N, a, e, o);
            S[a].col(j) = o;
        }
    }
    Eigen::MatrixXcd ref = -(U / L) * (S[0] * S[0] + S[1] * S[1] + S[2] * S[2]) - B * S[2];
    EXPECT_LT((H.dense().cast<Complex>() - ref).norm(), 1e-12);
    Eigen::MatrixXcd ss = S[0] * S[0] + S[1] * S[1] + S[2] * S[2];
    Eigen::MatrixXcd h = H.dense().cast<Complex>();
    EXPECT_LT((h * ss - ss * h).norm(), 1e-11);

    auto tr = spin_squeezing_trace(H, {0.5, 3.0, 11.0});
    for (double x : tr.squeezing.xi2) EXPECT_NEAR(x, 1.0, 1e-9);
}

TEST(SpinHamiltonian, RejectsTooManySpins) {
    EXPECT_THROW(SpinHamiltonian(std::vector<double>(21, 0.0), 1.0, 30), Error);
    EXPECT_THROW(SpinHamiltonian(std::vector<double>(15, 0.0), 1.0, 30).sparse(), Error);
    EXPECT_THROW(SpinHamiltonian(std::vector<double>(5, 0.0), 1.0, 4), Error);
}

TEST(DickePopulation, CoherentStateIsSymmetric) {
    for (int N : {1, 5, 12})
        EXPECT_NEAR(dicke_population(N, coherent_state(N, 1.1, -0.4)), 1.0, 1e-12);
}

TEST(DickePopulation, SingleFlipOverlapsOneOverN) {
    for (int N : {3, 8, 13}) {
        CVec v = CVec::Zero(Eigen::Index{1} << N);
        v[(Eigen::Index{1} << N) - 1 - 4] = 1.0;  // all up except spin 2
        EXPECT_NEAR(dicke_population(N, v), 1.0 / N, 1e-14);
    }
}

namespace {
// Leakage 1 - P_Dicke along the x-state trajectory up to the spin-model optimum.
struct Leakage {
    double peak = 0.0, mean = 0.0;
};
Leakage leakage(int N, double ratio) {
    auto f = axial_fields(1.0, kPi / 20, lowest_modes_1d(N, N));
    const double U = f.var_root_B / ratio;
    const double chi = oat_parameters(f, U, 1.0, N).chi;
    SpinHamiltonian H(f.B_q, U, N);
    std::vector<double> times;
    const double t_end = 1.2 / (chi * std::pow(N, 2.0 / 3.0));
    for (int i = 1; i <= 150; ++i) times.push_back(i * t_end / 150);
    auto tr = spin_squeezing_trace(H, times, {40, 1e-9});
    auto opt = optimal_point(tr.squeezing);
    EXPECT_LT(opt.t_opt, t_end);
    Leakage l;
    int n = 0;
    for (std::size_t i = 0; i < times.size() && times[i] <= opt.t_opt; ++i, ++n) {
        l.peak = std::max(l.peak, 1.0 - tr.dicke[i]);
        l.mean += 1.0 - tr.dicke[i];
    }
    l.mean /= n;
    return l;
}
}  // namespace

TEST(DickePopulation, LeakageFollowsSecondOrderEstimate) {
    // Second order: leakage = N (B~/fU)^2 sin^2(fU t / 2) near the equator.
    const int N = 12;
    for (double r : {0.025, 0.05}) {
        auto l = leakage(N, r);
        const double scale = N * r * r;
        EXPECT_LT(l.peak, 1.2 * scale) << r;
        EXPECT_NEAR(l.mean, 0.5 * scale, 0.3 * 0.5 * scale) << r;
        if (r == 0.025) {
            EXPECT_LT(l.peak, 0.01);
        }
    }
}
