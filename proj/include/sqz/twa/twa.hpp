#pragma once

// Truncated Wigner sampling of one-axis twisting with two-body losses of the
// up state. Each trajectory carries mean-field single-particle coherences
// rho_uu, rho_dd, rho_ud (rho_ud playing the role of <s+>) either summed over
// modes (collective form) or per mode with a loss matrix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "sqz/common.hpp"
#include "sqz/metrics.hpp"

namespace sqz::twa {

using State = std::vector<double>;

struct TwaConfig {
    int N = 100;
    int n_traj = 10000;
    double chi = 1.0;
    double f = 1.0;
    double gamma = 0.0;                    // averaged loss rate; the collective equations use f * gamma
    std::optional<Eigen::MatrixXd> loss;   // per-mode Gamma_kk' (N x N); selects the per-mode equations
    std::uint64_t seed = 1;
    double rtol = 1e-8, atol = 1e-10;
    int workers = 1;
    int bootstrap = 200;

    void validate() const {
        require(N >= 1, "N must be >= 1");
        require(n_traj >= 2, "n_traj must be >= 2");
        require(std::isfinite(chi), "chi must be finite");
        require(f > 0.0 && gamma >= 0.0, "need f > 0 and gamma >= 0");
        require(rtol > 0.0 && atol > 0.0, "integrator tolerances must be > 0");
        require(workers >= 1 && bootstrap >= 2, "need workers >= 1 and bootstrap >= 2");
        if (loss) {
            require(loss->rows() == N && loss->cols() == N, "loss matrix must be N x N");
            require((loss->array() >= 0.0).all() && (*loss - loss->transpose()).norm() == 0.0,
                    "loss matrix must be symmetric and nonnegative");
        }
    }
};

/// One discrete Wigner sample per spin: s_x = 1/2, s_y and s_z = +-1/2.
struct SpinSample {
    std::vector<double> sy, sz;
};

inline std::mt19937_64 trajectory_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

inline SpinSample sample_spins(int N, std::mt19937_64& rng) {
    SpinSample s;
    s.sy.resize(N);
    s.sz.resize(N);
    std::uint64_t bits = 0;
    int left = 0;
    auto coin = [&] {
        if (left == 0) {
            bits = rng();
            left = 64;
        }
        const double v = (bits & 1u) ? 0.5 : -0.5;
        bits >>= 1;
        --left;
        return v;
    };
    for (int j = 0; j < N; ++j) {
        s.sy[j] = coin();
        s.sz[j] = coin();
    }
    return s;
}

/// Ensemble of initial samples, trajectory k drawn from its own stream.
inline std::vector<SpinSample> sample_initial(int N, int n_traj, std::uint64_t seed) {
    require(N >= 1 && n_traj >= 1, "need N >= 1 and n_traj >= 1");
    std::vector<SpinSample> out;
    out.reserve(n_traj);
    for (int k = 0; k < n_traj; ++k) {
        auto rng = trajectory_rng(seed, k);
        out.push_back(sample_spins(N, rng));
    }
    return out;
}

/// Collective state [rho_uu, rho_dd, Re rho_ud, Im rho_ud] of a sample.
inline State collective_state(const SpinSample& s) {
    double sy = 0.0, sz = 0.0;
    for (std::size_t j = 0; j < s.sz.size(); ++j) {
        sy += s.sy[j];
        sz += s.sz[j];
    }
    const double n = static_cast<double>(s.sz.size());
    return {n / 2 + sz, n / 2 - sz, n / 2, sy};
}

/// Per-mode state [rho_uu(j)..., rho_dd(j)..., Re rho_ud(j)..., Im rho_ud(j)...].
inline State mode_state(const SpinSample& s) {
    const std::size_t n = s.sz.size();
    State x(4 * n);
    for (std::size_t j = 0; j < n; ++j) {
        x[j] = 0.5 + s.sz[j];
        x[n + j] = 0.5 - s.sz[j];
        x[2 * n + j] = 0.5;
        x[3 * n + j] = s.sy[j];
    }
    return x;
}

/// d rho_uu / dt = -g rho_uu^2, d rho_dd / dt = 0,
/// d rho_ud / dt = rho_ud [i chi (rho_uu - rho_dd) - g rho_uu / 2].
struct CollectiveRhs {
    double chi, g;
    void operator()(const State& x, State& dx, double) const {
        const double w = chi * (x[0] - x[1]), d = 0.5 * g * x[0];
        dx[0] = -g * x[0] * x[0];
        dx[1] = 0.0;
        dx[2] = -w * x[3] - d * x[2];
        dx[3] = w * x[2] - d * x[3];
    }
};

struct ModeRhs {
    double chi;
    const Eigen::MatrixXd* G;
    void operator()(const State& x, State& dx, double) const {
        const Eigen::Index n = G->rows();
        Eigen::Map<const Eigen::VectorXd> uu(x.data(), n), dd(x.data() + n, n);
        const Eigen::VectorXd loss = (*G) * uu;
        const double w = chi * (uu.sum() - dd.sum());
        for (Eigen::Index j = 0; j < n; ++j) {
            const double re = x[2 * n + j], im = x[3 * n + j], d = 0.5 * loss[j];
            dx[j] = -uu[j] * loss[j];
            dx[n + j] = 0.0;
            dx[2 * n + j] = -w * im - d * re;
            dx[3 * n + j] = w * re - d * im;
        }
    }
};

/// Collective spin (Sx, Sy, Sz) of a state in either layout.
inline Eigen::Vector3d collective_spin(const State& x) {
    if (x.size() == 4) return {x[2], x[3], 0.5 * (x[0] - x[1])};
    const std::size_t n = x.size() / 4;
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (std::size_t j = 0; j < n; ++j) {
        s(0) += x[2 * n + j];
        s(1) += x[3 * n + j];
        s(2) += 0.5 * (x[j] - x[n + j]);
    }
    return s;
}

inline double atom_number(const State& x) {
    if (x.size() == 4) return x[0] + x[1];
    double n = 0.0;
    for (std::size_t j = 0; j < x.size() / 2; ++j) n += x[j];
    return n;
}

inline double up_population(const State& x) {
    if (x.size() == 4) return x[0];
    double n = 0.0;
    for (std::size_t j = 0; j < x.size() / 4; ++j) n += x[j];
    return n;
}

struct TrajectoryRecord {
    std::vector<Eigen::Vector3d> spin;  // per time point
    std::vector<double> atoms;
    bool failed = false;
    std::string failure;
};

/// Integrate one trajectory with adaptive Dormand-Prince steps, recording at
/// the (nondecreasing) grid. rho_uu must not grow between recorded points.
inline TrajectoryRecord integrate_trajectory(State x, const TwaConfig& cfg, const std::vector<double>& t_grid) {
    namespace ode = boost::numeric::odeint;
    TrajectoryRecord rec;
    double last_up = up_population(x);
    double t = t_grid.empty() ? 0.0 : std::min(0.0, t_grid.front());
    auto stepper = ode::make_dense_output(cfg.atol, cfg.rtol, ode::runge_kutta_dopri5<State>());
    try {
        for (double tk : t_grid) {
            require(tk >= t, "time grid must be nondecreasing and start at or after 0");
            if (tk > t) {
                if (cfg.loss) {
                    ode::integrate_adaptive(stepper, ModeRhs{cfg.chi, &*cfg.loss}, x, t, tk, (tk - t) / 10);
                } else {
                    ode::integrate_adaptive(stepper, CollectiveRhs{cfg.chi, cfg.f * cfg.gamma}, x, t, tk, (tk - t) / 10);
                }
                t = tk;
            }
            const double up = up_population(x);
            if (!std::isfinite(up) || up > last_up * (1 + 1e-12) + 1e-14)
                throw Error("up-state population increased along a trajectory");
            last_up = up;
            rec.spin.push_back(collective_spin(x));
            rec.atoms.push_back(atom_number(x));
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.failure = e.what();
    }
    return rec;
}

struct TwaResult {
    SqueezingTrace trace;
    std::vector<double> xi2_err, db_err;  // bootstrap standard errors
    std::vector<double> atoms;            // ensemble-mean atom number
    int n_used = 0, n_failed = 0;
    std::uint64_t seed = 0;
};

namespace detail {
struct Accum {
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    Eigen::Matrix3d ss = Eigen::Matrix3d::Zero();
    double n = 0.0;
    int count = 0;
    void add(const Eigen::Vector3d& v, double atoms) {
        s += v;
        ss += v * v.transpose();
        n += atoms;
        ++count;
    }
    SpinSnapshot snapshot(double t) const {
        SpinSnapshot sn;
        sn.mean = s / count;
        sn.second_moments = ss / count;
        sn.n_spins = n / count;
        sn.time = t;
        return sn;
    }
};

inline double safe_xi2(const SpinSnapshot& s) {
    try {
        return squeezing_parameter(s).xi2;
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}
}  // namespace detail

/// Trajectory-averaged squeezing on t_grid. Trajectories run in `workers`
/// threads; the reduction is in trajectory order.
inline TwaResult twa_squeezing(const TwaConfig& cfg, const std::vector<double>& t_grid) {
    cfg.validate();
    require(!t_grid.empty(), "empty time grid");
    std::vector<TrajectoryRecord> recs(cfg.n_traj);
    auto run = [&](int begin, int end) {
        for (int k = begin; k < end; ++k) {
            auto rng = trajectory_rng(cfg.seed, k);
            const auto s = sample_spins(cfg.N, rng);
            recs[k] = integrate_trajectory(cfg.loss ? mode_state(s) : collective_state(s), cfg, t_grid);
        }
    };
    const int w = std::min(cfg.workers, cfg.n_traj);
    if (w == 1) {
        run(0, cfg.n_traj);
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < w; ++i) pool.emplace_back(run, cfg.n_traj * i / w, cfg.n_traj * (i + 1) / w);
        for (auto& th : pool) th.join();
    }

    TwaResult out;
    out.seed = cfg.seed;
    std::vector<int> good;
    for (int k = 0; k < cfg.n_traj; ++k) (recs[k].failed ? out.n_failed : out.n_used)++;
    if (out.n_failed > 0.01 * cfg.n_traj)
        throw Error("more than 1% of TWA trajectories failed (" + std::to_string(out.n_failed) + "): " +
                    std::find_if(recs.begin(), recs.end(), [](const auto& r) { return r.failed; })->failure);
    for (int k = 0; k < cfg.n_traj; ++k)
        if (!recs[k].failed) good.push_back(k);
    require(good.size() >= 2, "fewer than two usable trajectories");

    const std::size_t T = t_grid.size();
    for (std::size_t i = 0; i < T; ++i) {
        detail::Accum a;
        for (int k : good) a.add(recs[k].spin[i], recs[k].atoms[i]);
        out.trace.push(a.snapshot(t_grid[i]));
        out.atoms.push_back(a.n / a.count);
    }

    // bootstrap over trajectories, one resampling shared by all time points
    std::mt19937_64 rng = trajectory_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull, cfg.n_traj);
    std::uniform_int_distribution<std::size_t> pick(0, good.size() - 1);
    std::vector<std::vector<double>> xs(T), ds(T);
    std::vector<int> draw(good.size());
    for (int b = 0; b < cfg.bootstrap; ++b) {
        for (auto& d : draw) d = good[pick(rng)];
        for (std::size_t i = 0; i < T; ++i) {
            detail::Accum a;
            for (int k : draw) a.add(recs[k].spin[i], recs[k].atoms[i]);
            const double x = detail::safe_xi2(a.snapshot(t_grid[i]));
            if (std::isfinite(x) && x > 0) {
                xs[i].push_back(x);
                ds[i].push_back(to_db(x));
            }
        }
    }
    auto sd = [](const std::vector<double>& v) {
        if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
        double m = 0.0, q = 0.0;
        for (double x : v) m += x;
        m /= v.size();
        for (double x : v) q += (x - m) * (x - m);
        return std::sqrt(q / (v.size() - 1));
    };
    for (std::size_t i = 0; i < T; ++i) {
        out.xi2_err.push_back(sd(xs[i]));
        out.db_err.push_back(sd(ds[i]));
    }
    return out;
}

}  // namespace sqz::twa
