#include <gtest/gtest.h>

#include <boost/math/tools/minima.hpp>
#include <cmath>

#include "sqz/cli/runner.hpp"

using namespace sqz;
using namespace sqz::cli;

namespace {

// Closed-form number squeezing of the twisted coherent state,
// converted to the Wineland parameter by the mean-spin contraction.
double twisted_xi2(int N, double chi, double t) {
    const double mu = 2 * chi * t, n = N;
    const double A = 1 - std::pow(std::cos(mu), n - 2);
    const double B = 4 * std::sin(mu / 2) * std::pow(std::cos(mu / 2), n - 2);
    const double ku = 1 + (n - 1) / 4 * (A - std::sqrt(A * A + B * B));
    return ku / std::pow(std::cos(mu / 2), 2 * (n - 1));
}

Json minimal() {
    return Json::parse(R"({"backend": "oat-analytic", "seed": 1, "system": {"N": 100, "chi": 1.0}})");
}

std::string config_error_path(const Json& c) {
    try {
        run_sweep(c);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "";
}

}  // namespace

TEST(CliRun, MinimalConfigMatchesClosedForm) {
    const auto r = run_sweep(minimal());
    ASSERT_EQ(r.points.size(), 1u);
    const auto& p = r.points[0].result;
    EXPECT_TRUE(p.valid);
    const auto best = boost::math::tools::brent_find_minima([](double t) { return twisted_xi2(100, 1.0, t); }, 0.01, 0.2, 50);
    EXPECT_NEAR(p.optimal_db, -10 * std::log10(best.second), 1e-6);
    EXPECT_NEAR(p.t_opt, best.first, 1e-4);
    const std::string csv = sweep_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "optimal_db,t_opt,validity,seed");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(CliConfig, EmptySweepGridIsRejected) {
    auto c = minimal();
    c["sweep"] = Json::parse(R"({"axes": [{"path": "system.N", "values": []}]})");
    EXPECT_EQ(config_error_path(c), "sweep.axes[0].values");
    c["sweep"] = Json::parse(R"({"axes": [{"path": "system.N", "start": 10, "stop": 20, "count": 0}]})");
    EXPECT_EQ(config_error_path(c), "sweep.axes[0].count");
    c["sweep"] = Json::parse(R"({"axes": []})");
    EXPECT_EQ(config_error_path(c), "sweep.axes");
}

TEST(CliConfig, DiagnosticsNameTheField) {
    auto c = minimal();
    c["system"].erase("N");
    try {
        evaluate_point(c);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "system.N");
        EXPECT_NE(std::string(e.what()).find("system.N"), std::string::npos);
    }
    c = minimal();
    c["backend"] = "dmrg";
    EXPECT_THROW(evaluate_point(c), ConfigError);
    c = minimal();
    c["system"]["chi"] = "fast";
    EXPECT_THROW(evaluate_point(c), ConfigError);
    c = Json::parse(R"({"backend": "spin-model", "system": {"N": 10, "L": 10, "U": 4, "phi": 7.0}})");
    EXPECT_EQ(config_error_path(c), "system.phi");
}

TEST(CliConfig, HashIgnoresKeyOrder) {
    const auto a = Json::parse(R"({"backend": "oat-analytic", "system": {"N": 100, "chi": 1.0}})");
    const auto b = Json::parse(R"({"system": {"chi": 1.0, "N": 100}, "backend": "oat-analytic"})");
    auto c = a;
    c["system"]["N"] = 101;
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(CliSweep, GridShapeAndOrder) {
    auto c = Json::parse(R"({"backend": "spin-model", "seed": 4,
        "system": {"N": 6, "L": 6, "U": 4.0, "phi": 0.3},
        "time": {"points": 40},
        "sweep": {"axes": [{"path": "system.U", "values": [2.0, 8.0]},
                           {"path": "system.phi", "start": 0.1, "stop": 0.4, "count": 3}]}})");
    const auto r = run_sweep(c);
    ASSERT_EQ(r.points.size(), 6u);
    EXPECT_EQ(r.axes, (std::vector<std::string>{"system.U", "system.phi"}));
    EXPECT_EQ(r.points[1].coords, (std::vector<double>{2.0, 0.25}));
    EXPECT_EQ(r.points[3].coords, (std::vector<double>{8.0, 0.1}));
    for (const auto& p : r.points) {
        EXPECT_TRUE(p.result.valid) << p.result.flag;
        EXPECT_GT(p.result.optimal_db, 0.0);
    }
    const std::string csv = sweep_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "system.U,system.phi,optimal_db,t_opt,validity,seed");
}

TEST(CliSweep, PointFailuresAreRecorded) {
    auto c = minimal();
    c["sweep"] = Json::parse(R"({"axes": [{"path": "system.N", "values": [1, 50]}]})");
    const auto r = run_sweep(c);
    ASSERT_EQ(r.points.size(), 2u);
    EXPECT_FALSE(r.points[0].result.valid);
    EXPECT_NE(r.points[0].result.flag.find("system.N"), std::string::npos);
    EXPECT_TRUE(r.points[1].result.valid);
    EXPECT_EQ(r.invalid(), 1);
    EXPECT_NE(sweep_csv(r).find("1,nan,nan,flagged,1"), std::string::npos);
}

TEST(CliSweep, IntegerAxesStayIntegers) {
    auto c = Json::parse(R"({"backend": "moment-tat", "system": {"N": 20, "chi": 1.0},
        "time": {"points": 30},
        "sweep": {"axes": [{"path": "drive.sign", "values": [1, -1]}]}})");
    const auto r = run_sweep(c);
    for (const auto& p : r.points) EXPECT_TRUE(p.result.valid) << p.result.flag;
}

TEST(CliSweep, RerunsAreByteIdentical) {
    auto c = Json::parse(R"({"backend": "twa", "seed": 11, "system": {"N": 30, "chi": 1.0},
        "twa": {"n_traj": 300, "gamma": 0.05, "bootstrap": 5}, "time": {"points": 12},
        "sweep": {"axes": [{"path": "twa.gamma", "values": [0.0, 0.05]}]}})");
    const auto a = sweep_csv(run_sweep(c)), b = sweep_csv(run_sweep(c));
    EXPECT_EQ(a, b);
    c["seed"] = 12;
    EXPECT_NE(a, sweep_csv(run_sweep(c)));
}

TEST(CliSweep, WorkersMatchSequential) {
    auto c = Json::parse(R"({"backend": "twa", "seed": 3, "system": {"N": 20, "chi": 1.0},
        "twa": {"n_traj": 200, "bootstrap": 5}, "time": {"points": 10},
        "sweep": {"axes": [{"path": "system.N", "values": [10, 20, 30, 40, 50]}]}})");
    EXPECT_EQ(sweep_csv(run_sweep(c, 1)), sweep_csv(run_sweep(c, 3)));
}

TEST(CliSaturation, HalvingTargetReducesPhi) {
    spin::ModeSet modes = spin::full_band(6, 2);
    const auto a = saturation_search(1.0, 20.0, modes, 0.05);
    const auto b = saturation_search(1.0, 20.0, modes, 0.025);
    ASSERT_TRUE(a.valid && b.valid);
    EXPECT_LT(b.phi, a.phi);
    EXPECT_LT(std::abs(a.ratio - 0.05), 1e-4);
    EXPECT_LT(std::abs(b.ratio - 0.025), 1e-4);
}

TEST(CliSaturation, ChiRoundTripsThroughForwardEvaluation) {
    const int ell = 8, N = ell * ell;
    const double J = 0.7, U = 9.0;
    const auto s = saturation_search(J, U, spin::full_band(ell, 2), 0.05, 1e-6);
    ASSERT_TRUE(s.valid);
    // B_q on the filled 2D band, straight from the dispersion of both axes
    double sum = 0, sum2 = 0;
    for (int mx = 0; mx < ell; ++mx)
        for (int my = 0; my < ell; ++my) {
            double b = 0;
            for (int m : {mx, my}) b += -4 * J * std::sin(2 * kPi * m / ell + s.phi / 2) * std::sin(s.phi / 2);
            sum += b;
            sum2 += b * b;
        }
    const double var = sum2 / N - (sum / N) * (sum / N);
    const double chi = var / ((N - 1) * U);
    EXPECT_NEAR(s.chi, chi, 1e-8 * chi);
    EXPECT_NEAR(std::sqrt(var) / U, s.ratio, 1e-12);
}

TEST(CliSaturation, UnreachableTargetIsFlagged) {
    const auto s = saturation_search(1.0, 1000.0, spin::full_band(4, 2), 0.05);
    EXPECT_FALSE(s.valid);
    EXPECT_FALSE(s.flag.empty());
    EXPECT_DOUBLE_EQ(s.phi, kPi);
}

TEST(CliSaturation, ScanRejectsEmptyGrids) {
    auto c = Json::parse(R"({"lattice": {"depths": [], "ells": [10], "scattering_length_a0": 69.1}})");
    EXPECT_THROW(run_saturation(c), ConfigError);
}
