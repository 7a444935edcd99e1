#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <Eigen/Eigenvalues>

#include "sqz/dynamics/oat.hpp"
#include "sqz/fh/hubbard.hpp"
#include "sqz/spin/hamiltonian.hpp"

using namespace sqz;
using namespace sqz::fh;

namespace {

Eigen::MatrixXcd dense(const SparseH& H) { return Eigen::MatrixXcd(H); }

// exp(-i A t) for Hermitian A by eigendecomposition
Eigen::MatrixXcd dense_expm(const Eigen::MatrixXcd& A, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
    const Eigen::VectorXcd ph = (-kI * t * es.eigenvalues().cast<Complex>()).array().exp();
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

CVec random_state(long dim, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    CVec v(dim);
    for (auto& x : v) x = Complex(g(rng), g(rng));
    return v / v.norm();
}

// dense matrix of the collective operator S_axis^(theta), column by column
Eigen::MatrixXcd spin_matrix(const FockBasis& b, int axis, double theta = 0.0) {
    Eigen::MatrixXcd M(b.size(), b.size());
    CVec e, out;
    for (long i = 0; i < b.size(); ++i) {
        e = CVec::Zero(b.size());
        e[i] = 1.0;
        apply_spin(b, axis, theta, e, out);
        M.col(i) = out;
    }
    return M;
}

ModelParams params(int L, int N, double U, double phi, Boundary bc = Boundary::periodic) {
    ModelParams p;
    p.L = L;
    p.N = N;
    p.U = U;
    p.phi = phi;
    p.boundary = bc;
    return p;
}

}  // namespace

TEST(FockBasis, SortedWithRankLookup) {
    FockBasis b(5, 4);
    ASSERT_EQ(b.size(), 210);
    EXPECT_TRUE(std::is_sorted(b.states().begin(), b.states().end()));
    for (long i = 0; i < b.size(); ++i) {
        EXPECT_EQ(popcount(b.state(i)), 4);
        EXPECT_EQ(b.index(b.state(i)), i);
    }
    EXPECT_EQ(FockBasis(3, 0).size(), 1);
    EXPECT_THROW(FockBasis(9, 8), Error);
}

TEST(FhHamiltonian, SingleParticleSpectrum) {
    for (double phi : {0.0, 0.3}) {
        const auto p = params(4, 1, 0.0, phi);
        FockBasis b(4, 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense(build_hamiltonian(p, b)));
        std::vector<double> expect;
        for (int k = 0; k < 4; ++k) {
            const double q = 2 * kPi * k / 4;
            expect.push_back(-2 * std::cos(q + phi));
            expect.push_back(-2 * std::cos(q));
        }
        std::sort(expect.begin(), expect.end());
        for (int i = 0; i < 8; ++i) EXPECT_NEAR(es.eigenvalues()(i), expect[i], 1e-12);
    }
}

TEST(FhHamiltonian, ExactlyHermitian) {
    FockBasis b(4, 4);
    auto p = params(4, 4, 3.0, 0.7);
    p.trap_strength = 0.2;
    const SparseH H = build_hamiltonian(p, b);
    EXPECT_EQ((dense(H) - dense(H).adjoint()).norm(), 0.0);
}

TEST(FhHamiltonian, TwoSiteHubbardSpectrum) {
    const double U = 2.7, J = 1.0;
    FockBasis b(2, 2);
    const auto H = build_hamiltonian(params(2, 2, U, 0.0, Boundary::open), b);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense(H));
    const double r = std::sqrt(U * U + 16 * J * J);
    std::vector<double> expect{0, 0, 0, U, (U - r) / 2, (U + r) / 2};
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(es.eigenvalues()(i), expect[i], 1e-12);
}

TEST(FhHamiltonian, RejectsMismatchAndOversize) {
    FockBasis b(3, 2);
    EXPECT_THROW(build_hamiltonian(params(3, 3, 1.0, 0.0), b), Error);
    EXPECT_THROW(params(9, 8, 1.0, 0.0).validate(), Error);
    EXPECT_THROW(params(4, 2, 1.0, 2 * kPi).validate(), Error);
}

TEST(FhEvolve, MatchesDenseExponential) {
    FockBasis b(5, 4);
    auto p = params(5, 4, 4.0, 0.4, Boundary::open);
    p.trap_strength = 0.3;
    const SparseH H = build_hamiltonian(p, b);
    const CVec psi = random_state(b.size(), 1);
    for (double t : {0.0, 0.3, 2.5, -1.1}) {
        const CVec a = evolve(H, psi, t, 1e-11);
        const CVec ref = dense_expm(dense(H), t) * psi;
        EXPECT_LT((a - ref).norm(), 1e-8) << t;
    }
    EXPECT_EQ((evolve(H, psi, 0.0) - psi).norm(), 0.0);
}

TEST(FhEvolve, GroupPropertyAndConservation) {
    FockBasis b(6, 5);
    const auto p = params(6, 5, 6.0, kPi / 7);
    const SparseH H = build_hamiltonian(p, b);
    const CVec psi = random_state(b.size(), 2);
    const CVec a = evolve(H, evolve(H, psi, 0.7), 1.9);
    const CVec c = evolve(H, psi, 2.6);
    EXPECT_LT((a - c).norm(), 1e-8);
    EXPECT_NEAR(c.norm(), 1.0, 1e-9);
    const double e0 = psi.dot(H * psi).real(), e1 = c.dot(H * c).real();
    EXPECT_NEAR(e0, e1, 1e-9 * 20);
    double n = 0.0;
    for (double x : site_density(b, c, 2)) n += x;
    EXPECT_NEAR(n, 5.0, 1e-10);
}

TEST(FhPulse, FullTurnOnSingleAtom) {
    FockBasis b(3, 1);
    CVec psi = CVec::Zero(b.size());
    psi[b.index(Bits{1} << orbital(1, 0))] = 1.0;
    const CVec out = collective_pulse(b, psi, 2 * kPi, 0.3, 0.9);
    EXPECT_NEAR(std::abs(out.dot(psi)), 1.0, 1e-14);
}

TEST(FhPulse, HalfPiRotatesAllDownToX) {
    const auto p = params(6, 4, 5.0, 0.3);
    FockBasis b(6, 4);
    CVec psi = collective_pulse(b, all_down_ground_state(p, b), drive::PulseEvent{0.0, 'y', -kPi / 2, 0.0});
    const auto s = spin_snapshot(b, psi);
    EXPECT_NEAR(s.mean(0), 2.0, 1e-12);
    EXPECT_NEAR(s.mean(1), 0.0, 1e-12);
    EXPECT_NEAR(s.mean(2), 0.0, 1e-12);
    EXPECT_NEAR(dicke_population(b, psi), 1.0, 1e-12);
    // laser-phase form of the same pulse: rotation about -y
    CVec alt = collective_pulse(b, all_down_ground_state(p, b), kPi / 2, -kPi / 2, 0.0);
    EXPECT_NEAR(std::abs(alt.dot(psi)), 1.0, 1e-12);
}

TEST(FhPulse, PiPulseMatchesDenseRotation) {
    FockBasis b(4, 3);
    const Eigen::MatrixXcd Sx = spin_matrix(b, 0), Sz = spin_matrix(b, 2);
    const Eigen::MatrixXcd R = dense_expm(Sx, kPi);
    for (unsigned seed = 3; seed < 8; ++seed) {
        const CVec psi = random_state(b.size(), seed);
        const CVec out = collective_pulse(b, psi, drive::PulseEvent{0.0, 'x', kPi, 0.0});
        EXPECT_LT((out - R * psi).norm(), 1e-12);
        EXPECT_NEAR(out.dot(Sz * out).real(), -psi.dot(Sz * psi).real(), 1e-12);
    }
}

TEST(FhPulse, RotatedOperatorsAreHermitianSpins) {
    FockBasis b(3, 3);
    const double th = 0.8;
    const Eigen::MatrixXcd X = spin_matrix(b, 0, th), Y = spin_matrix(b, 1, th), Z = spin_matrix(b, 2, th);
    EXPECT_LT((X - X.adjoint()).norm(), 1e-14);
    EXPECT_LT((X * Y - Y * X - kI * Z).norm(), 1e-12);
}

TEST(FhGauge, CovarianceUnderLocalPhase) {
    // W = exp(i phi sum_j j n_{j up}) maps H(phi) to H(0) on an open chain and
    // S^(0) to S^(phi)
    const double phi = 0.9;
    FockBasis b(4, 4);
    auto p = params(4, 4, 3.0, phi, Boundary::open);
    p.trap_strength = 0.15;
    const SparseH Hphi = build_hamiltonian(p, b);
    p.phi = 0.0;
    const SparseH H0 = build_hamiltonian(p, b);
    for (unsigned seed = 11; seed < 14; ++seed) {
        const CVec psi = random_state(b.size(), seed);
        CVec w = psi;
        for (long i = 0; i < b.size(); ++i) {
            double a = 0.0;
            for (int j = 0; j < 4; ++j)
                if ((b.state(i) >> orbital(j, 0)) & 1u) a += phi * j;
            w[i] *= std::exp(Complex(0, a));
        }
        const auto s1 = spin_snapshot(b, evolve(Hphi, psi, 1.7), 0.0);
        const auto s2 = spin_snapshot(b, evolve(H0, w, 1.7), phi);
        EXPECT_LT((s1.mean - s2.mean).norm(), 1e-8);
        EXPECT_LT((s1.second_moments - s2.second_moments).norm(), 1e-8);
    }
}

TEST(FhGauge, SwitchingPulsesMapRotatedToHomogeneous) {
    const double theta = 1.3;
    FockBasis b(4, 4);
    const CVec psi = random_state(b.size(), 21);
    CVec g = psi;
    for (const auto& e : drive::gauge_switch_schedule(theta).events) g = collective_pulse(b, g, e);
    const auto rot = spin_snapshot(b, psi, theta), hom = spin_snapshot(b, g, 0.0);
    EXPECT_LT((rot.mean - hom.mean).norm(), 1e-12);
    EXPECT_LT((rot.second_moments - hom.second_moments).norm(), 1e-12);
}

TEST(FhGroundState, AllDownSlaterIsSectorGroundState) {
    auto p = params(6, 3, 4.0, 0.5, Boundary::open);
    p.trap_strength = 0.1;
    FockBasis b(6, 3);
    const SparseH H = build_hamiltonian(p, b);
    const CVec psi = all_down_ground_state(p, b);
    // restrict H to all-down states and compare with its lowest eigenvalue
    std::vector<long> idx;
    for (long i = 0; i < b.size(); ++i)
        if ((b.state(i) & 0x555u) == 0) idx.push_back(i);
    Eigen::MatrixXcd Hd = dense(H);
    Eigen::MatrixXcd sub(idx.size(), idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < idx.size(); ++c) sub(r, c) = Hd(idx[r], idx[c]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sub);
    EXPECT_NEAR(psi.dot(H * psi).real(), es.eigenvalues()(0), 1e-10);
    EXPECT_NEAR((H * psi - es.eigenvalues()(0) * psi).norm(), 0.0, 1e-10);
}

TEST(FhGroundState, OpenShellFillsPositiveMomentumFirst) {
    // L=6, N=2 periodic: q = 0 and q = +2 pi / 6, current carried to the right
    const auto p = params(6, 2, 0.0, 0.0);
    FockBasis b(6, 2);
    const CVec psi = all_down_ground_state(p, b);
    const SparseH H = build_hamiltonian(p, b);
    EXPECT_NEAR(psi.dot(H * psi).real(), -2.0 - 2.0 * std::cos(2 * kPi / 6), 1e-12);
    auto tp = params(6, 2, 0.0, 0.2);
    const SparseH Hp = build_hamiltonian(tp, b);
    const double dE = psi.dot(Hp * psi).real() - psi.dot(H * psi).real();
    EXPECT_NEAR(dE, 0.0, 1e-14);  // phi only couples spin up
}

TEST(FhRamsey, NoninteractingHomogeneousStaysCoherent) {
    RamseyOptions o;
    o.echo = false;
    const auto tr = ramsey_run(params(6, 4, 0.0, 0.0), {0.0, 0.5, 2.0, 7.0}, o);
    ASSERT_FALSE(tr.failed);
    for (double x : tr.squeezing.xi2) EXPECT_NEAR(x, 1.0, 1e-9);
    for (double n : tr.particle_number) EXPECT_NEAR(n, 4.0, 1e-10);
}

TEST(FhRamsey, UnitFillingStartsWithoutDoublons) {
    const auto tr = ramsey_run(params(6, 6, 8.0, kPi / 10), {0.0, 1.0});
    ASSERT_FALSE(tr.failed);
    EXPECT_NEAR(tr.doublons[0], 0.0, 1e-14);
    EXPECT_NEAR(tr.dicke[0], 1.0, 1e-12);
    EXPECT_GT(tr.doublons[1], 0.0);
}

TEST(FhRamsey, SpinConservedWithoutSoc) {
    RamseyOptions o;
    o.echo = false;
    const auto tr = ramsey_run(params(5, 4, 6.0, 0.0), {0.5, 1.5, 4.0}, o);
    for (double d : tr.dicke) EXPECT_NEAR(d, 1.0, 1e-8);
}

TEST(FhDensity, FrozenDynamicsHasNoFluctuations) {
    auto p = params(5, 3, 2.0, 0.4, Boundary::open);
    p.J = 0.0;
    p.trap_strength = 0.2;
    FockBasis b(5, 3);
    std::vector<double> t;
    for (int k = 0; k <= 20; ++k) t.push_back(0.5 * k);
    const auto tr = propagate(build_hamiltonian(p, b), b, random_state(b.size(), 5), t);
    for (double x : density_fluctuations(tr)) EXPECT_NEAR(x, 0.0, 1e-10);
    for (double x : density_fluctuations(tr, DensityChannel::total)) EXPECT_NEAR(x, 0.0, 1e-10);
}

TEST(FhDensity, LocalizedAtomInDeepTrapBarelyMoves) {
    // one spin-up atom off center, where neighbouring trap sites are detuned by
    // >> J (the two central sites of an even chain are degenerate, so avoid them)
    auto p = params(10, 1, 0.0, 0.3, Boundary::open);
    p.trap_strength = 4.0;
    FockBasis b(10, 1);
    const SparseH H = build_hamiltonian(p, b);
    CVec psi = CVec::Zero(b.size());
    psi[b.index(Bits{1} << orbital(8, 0))] = 1.0;
    std::vector<double> t;
    for (int k = 0; k <= 200; ++k) t.push_back(0.1 * k);
    const auto d = density_fluctuations(propagate(H, b, psi, t));
    EXPECT_LT(d[8], 0.01);
    for (double x : d) EXPECT_LT(x, 0.01);
}

TEST(FhSpinModel, HalfFillingTracesAgreePointwise) {
    // L = N = 6, U/J = 8, phi = pi/10, same echo protocol on both sides, up to
    // the spin-model optimal time
    const int L = 6;
    const double U = 8.0, phi = kPi / 10;
    const auto field = spin::axial_fields(1.0, phi, spin::lowest_modes_1d(L, L));
    const double chi = spin::oat_parameters(field, U, 1.0, L).chi;
    const double t_oat = oat_optimum(L, chi, 3.0 / (chi * std::pow(L, 2.0 / 3.0)), DecoherenceSpec{}).t_opt;
    std::vector<double> t;
    for (int k = 1; k <= 24; ++k) t.push_back(1.3 * t_oat * k / 24);
    ModelParams p = params(L, L, U, phi);
    const auto fr = ramsey_run(p, t);
    const auto sr = spin::spin_squeezing_trace(spin::SpinHamiltonian(field.B_q, U, L), t, {}, true);
    ASSERT_FALSE(fr.failed);
    const double t_opt = optimal_point(sr.squeezing).t_opt;
    for (std::size_t i = 0; i < t.size() && t[i] <= t_opt; ++i)
        EXPECT_LT(std::abs(fr.squeezing.db[i] - sr.squeezing.db[i]), 0.05 * std::abs(sr.squeezing.db[i])) << t[i];
}

TEST(FhSpinModel, EchoPulseFlipsEverySpin) {
    const int N = 5;
    const CVec psi = spin::coherent_state(N, 0.4, 1.1);
    const auto s0 = spin::snapshot(N, psi), s1 = spin::snapshot(N, spin::pi_pulse_x(N, psi));
    EXPECT_NEAR(s1.mean(0), s0.mean(0), 1e-12);
    EXPECT_NEAR(s1.mean(1), -s0.mean(1), 1e-12);
    EXPECT_NEAR(s1.mean(2), -s0.mean(2), 1e-12);
}
