#pragma once

// Config-driven evaluation of single points, sweeps and lattice saturation
// scans. Configs are JSON objects (the command-line tool converts TOML).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqz/cli/saturation.hpp"
#include "sqz/drive/pulses.hpp"
#include "sqz/dynamics/moments.hpp"
#include "sqz/dynamics/oat.hpp"
#include "sqz/fh/hubbard.hpp"
#include "sqz/spin/hamiltonian.hpp"
#include "sqz/twa/twa.hpp"

namespace sqz::cli {

using Json = nlohmann::json;

/// Invalid configuration; `path` names the offending field.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what) : Error("config: " + path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

namespace detail {

inline const Json* find(const Json& root, const std::string& path) {
    const Json* node = &root;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const std::size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (!node->is_object() || !node->contains(key)) return nullptr;
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return node;
}

inline Json& slot(Json& root, const std::string& path) {
    Json* node = &root;
    std::size_t pos = 0;
    while (true) {
        const std::size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (key.empty()) throw ConfigError(path, "empty path component");
        if (!node->is_object() && !node->is_null()) throw ConfigError(path, "parent is not a table");
        node = &(*node)[key];
        if (dot == std::string::npos) return *node;
        pos = dot + 1;
    }
}

// Integral values stay integers so integer fields can be swept.
inline void assign(Json& root, const std::string& path, double x) {
    if (x == std::round(x) && std::abs(x) < 1e15)
        slot(root, path) = static_cast<long long>(x);
    else
        slot(root, path) = x;
}

inline double number(const Json& root, const std::string& path, std::optional<double> fallback = std::nullopt) {
    const Json* v = find(root, path);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(path, "missing required number");
    }
    if (!v->is_number()) throw ConfigError(path, "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    return x;
}

inline int integer(const Json& root, const std::string& path, std::optional<int> fallback = std::nullopt) {
    const Json* v = find(root, path);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(path, "missing required integer");
    }
    if (!v->is_number_integer()) throw ConfigError(path, "expected an integer");
    return v->get<int>();
}

inline std::string text(const Json& root, const std::string& path, std::optional<std::string> fallback = std::nullopt) {
    const Json* v = find(root, path);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(path, "missing required string");
    }
    if (!v->is_string()) throw ConfigError(path, "expected a string");
    return v->get<std::string>();
}

inline bool flag(const Json& root, const std::string& path, bool fallback) {
    const Json* v = find(root, path);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(path, "expected true or false");
    return v->get<bool>();
}

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

}  // namespace detail

inline std::uint64_t config_hash(const Json& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : cfg.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline const std::vector<std::string>& backends() {
    static const std::vector<std::string> b{"fh-exact", "spin-model", "oat-analytic", "moment-tat", "twa"};
    return b;
}

struct PointResult {
    double optimal_db = std::numeric_limits<double>::quiet_NaN();
    double t_opt = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
    std::string flag;
    SqueezingTrace trace;
};

/// Physical inputs shared by the backends, read from `system`.
struct SystemSpec {
    int N = 0, L = 0, dims = 1;
    double J = 1.0, U = 0.0, phi = 0.0, f = 1.0;
    std::optional<double> chi;
    spin::AxialField field;  // empty when chi is given directly

    static SystemSpec read(const Json& c, bool need_lattice) {
        SystemSpec s;
        s.N = detail::integer(c, "system.N");
        if (s.N < 2) throw ConfigError("system.N", "must be >= 2");
        s.dims = detail::integer(c, "system.dims", 1);
        if (s.dims != 1 && s.dims != 2) throw ConfigError("system.dims", "must be 1 or 2");
        if (detail::find(c, "system.chi") && !need_lattice) {
            s.chi = detail::number(c, "system.chi");
            if (*s.chi <= 0.0) throw ConfigError("system.chi", "must be > 0");
            return s;
        }
        s.L = detail::integer(c, "system.L", s.dims == 1 ? s.N : static_cast<int>(std::lround(std::sqrt(s.N))));
        s.J = detail::number(c, "system.J", 1.0);
        s.U = detail::number(c, "system.U");
        s.phi = detail::number(c, "system.phi");
        if (s.J <= 0.0) throw ConfigError("system.J", "must be > 0");
        if (s.U <= 0.0) throw ConfigError("system.U", "must be > 0");
        if (s.phi < 0.0 || s.phi >= 2 * kPi) throw ConfigError("system.phi", "must lie in [0, 2 pi)");
        const int modes = s.dims == 1 ? s.L : s.L * s.L;
        if (s.L < 2 || s.N > modes) throw ConfigError("system.L", "need L >= 2 and N <= number of modes");
        const auto set = s.dims == 1 ? spin::lowest_modes_1d(s.L, s.N) : spin::lowest_modes_2d(s.L, s.N);
        s.f = set.filling();
        s.field = spin::axial_fields(s.J, s.phi, set);
        if (!need_lattice) {
            if (s.field.var_root_B == 0.0) throw ConfigError("system.phi", "axial field has no spread; chi would vanish");
            s.chi = spin::oat_parameters(s.field, s.U, s.f, s.N).chi;
        }
        return s;
    }
};

namespace detail {

inline DecoherenceSpec decoherence(const Json& c) {
    DecoherenceSpec d;
    d.rate_decay = number(c, "decoherence.rate_decay", 0.0);
    d.rate_dephase = number(c, "decoherence.rate_dephase", 0.0);
    if (d.rate_decay < 0.0) throw ConfigError("decoherence.rate_decay", "must be >= 0");
    if (d.rate_dephase < 0.0) throw ConfigError("decoherence.rate_dephase", "must be >= 0");
    return d;
}

inline std::vector<double> time_grid(const Json& c, double default_t_max, bool include_zero = false) {
    const double t_max = number(c, "time.t_max", default_t_max);
    const int n = integer(c, "time.points", 60);
    if (!(t_max > 0.0)) throw ConfigError("time.t_max", "must be > 0");
    if (n < 3) throw ConfigError("time.points", "must be >= 3");
    std::vector<double> t;
    for (int k = include_zero ? 0 : 1; k <= n; ++k) t.push_back(t_max * k / n);
    return t;
}

inline void finish(PointResult& r, SqueezingTrace trace) {
    r.trace = std::move(trace);
    int n_valid = 0;
    for (bool v : r.trace.valid) n_valid += v;
    if (n_valid < 3) {
        r.flag = "fewer than 3 valid squeezing samples";
        return;
    }
    const auto o = optimal_point(r.trace);
    r.optimal_db = o.db_opt;
    r.t_opt = o.t_opt;
    r.valid = o.bracketed;
    if (!o.bracketed) r.flag = "optimum at the edge of the time window";
}

inline double oat_t_opt(int N, double chi) {
    return oat_optimum(N, chi, 3.0 / (chi * std::pow(N, 2.0 / 3.0))).t_opt;
}

}  // namespace detail

/// Validate a configuration without running it. Throws ConfigError.
inline void validate_config(const Json& c) {
    if (!c.is_object()) throw ConfigError("<root>", "expected a table");
    const std::string b = detail::text(c, "backend");
    if (std::find(backends().begin(), backends().end(), b) == backends().end())
        throw ConfigError("backend", "unknown backend '" + b + "'");
    detail::integer(c, "seed", 1);
    if (const Json* sw = detail::find(c, "sweep.axes")) {
        if (!sw->is_array() || sw->empty()) throw ConfigError("sweep.axes", "must be a nonempty array");
        for (std::size_t i = 0; i < sw->size(); ++i) {
            const std::string p = "sweep.axes[" + std::to_string(i) + "]";
            const Json& ax = (*sw)[i];
            if (!ax.is_object() || !ax.contains("path") || !ax["path"].is_string()) throw ConfigError(p + ".path", "missing axis path");
            if (ax.contains("values")) {
                if (!ax["values"].is_array() || ax["values"].empty()) throw ConfigError(p + ".values", "sweep grid is empty");
                for (const auto& v : ax["values"])
                    if (!v.is_number()) throw ConfigError(p + ".values", "values must be numbers");
            } else {
                const int n = detail::integer(ax, "count");
                if (n < 1) throw ConfigError(p + ".count", "sweep grid is empty");
                detail::number(ax, "start");
                detail::number(ax, "stop");
                const std::string sc = detail::text(ax, "scale", "linear");
                if (sc != "linear" && sc != "log") throw ConfigError(p + ".scale", "must be linear or log");
            }
        }
    }
}

/// Evaluate one configuration point. With `dry_run` every field is read and
/// checked but nothing is computed.
inline PointResult evaluate_point(const Json& c, bool dry_run = false) {
    validate_config(c);
    const std::string backend = detail::text(c, "backend");
    const auto seed = static_cast<std::uint64_t>(detail::integer(c, "seed", 1));
    PointResult r;
    if (backend == "oat-analytic") {
        const auto s = SystemSpec::read(c, false);
        const auto dec = detail::decoherence(c);
        const double t_max = detail::number(c, "time.t_max", 3.0 / (*s.chi * std::pow(s.N, 2.0 / 3.0)));
        const auto grid = detail::time_grid(c, t_max);
        if (dry_run) return r;
        const auto o = oat_optimum(s.N, *s.chi, t_max, dec);
        r.optimal_db = o.db_opt;
        r.t_opt = o.t_opt;
        r.valid = o.bracketed;
        if (!o.bracketed) r.flag = "optimum at the edge of the time window";
        for (double t : grid) r.trace.push(oat_correlators(s.N, *s.chi, t, dec).snapshot);
        return r;
    }
    if (backend == "moment-tat") {
        const auto s = SystemSpec::read(c, false);
        const int sign = detail::integer(c, "drive.sign", 1);
        if (sign != 1 && sign != -1) throw ConfigError("drive.sign", "must be +1 or -1");
        auto dec = detail::decoherence(c);
        const double beta = drive::solve_modulation_index(sign);
        if (detail::find(c, "drive.omega_over_Nchi")) {
            const double w = detail::number(c, "drive.omega_over_Nchi") * s.N * *s.chi;
            try {
                drive::DriveSpec::make(sign, w).validate(s.N, *s.chi);
            } catch (const Error& e) {
                throw ConfigError("drive.omega_over_Nchi", e.what());
            }
        }
        const auto t = detail::time_grid(c, 4.0 * std::log(2.0 * s.N) / (s.N * *s.chi));
        if (dry_run) return r;
        dec = drive::transform_jump_rates(dec, beta);
        const auto [th, ph] = drive::tat_initial_direction(sign);
        auto m = coherent_moments(s.N, th, ph);
        MomentGenerator T(m.basis, drive::tat_secular_hamiltonian(*s.chi, sign), dec.jumps());
        auto res = moment_trace(T, m, t, {}, {}, 5);
        detail::finish(r, std::move(res.trace));
        if (!res.valid) {
            r.valid = false;
            r.flag = "moment propagation invalid: " + res.reason;
        }
        return r;
    }
    if (backend == "twa") {
        const auto s = SystemSpec::read(c, false);
        twa::TwaConfig tc;
        tc.N = s.N;
        tc.chi = *s.chi;
        tc.f = s.f;
        tc.n_traj = detail::integer(c, "twa.n_traj", 10000);
        tc.gamma = detail::number(c, "twa.gamma", 0.0);
        tc.bootstrap = detail::integer(c, "twa.bootstrap", 200);
        tc.seed = seed;
        try {
            tc.validate();
        } catch (const Error& e) {
            throw ConfigError("twa", e.what());
        }
        const auto t = detail::time_grid(c, 1.5 * detail::oat_t_opt(s.N, *s.chi));
        if (dry_run) return r;
        detail::finish(r, twa::twa_squeezing(tc, t).trace);
        return r;
    }
    // spin-model and fh-exact need the lattice inputs
    const auto s = SystemSpec::read(c, true);
    if (s.dims != 1) throw ConfigError("system.dims", backend + " supports chains only");
    if (s.field.var_root_B == 0.0) throw ConfigError("system.phi", "axial field has no spread; no squeezing to find");
    const double chi = spin::oat_parameters(s.field, s.U, s.f, s.N).chi;
    const bool echo = detail::flag(c, "system.echo", true);
    const auto t = detail::time_grid(c, 1.5 * detail::oat_t_opt(s.N, chi));
    if (backend == "spin-model") {
        if (s.N > spin::kSpinCap) throw ConfigError("system.N", "spin-model supports N <= 20");
        if (dry_run) return r;
        const auto H = spin::spin_hamiltonian(s.field, s.U, s.L, s.N);
        detail::finish(r, spin::spin_squeezing_trace(H, t, {40, 1e-8}, echo).squeezing);
        return r;
    }
    fh::ModelParams p;
    p.J = s.J;
    p.U = s.U;
    p.phi = s.phi;
    p.L = s.L;
    p.N = s.N;
    p.trap_strength = detail::number(c, "system.trap_strength", 0.0);
    const std::string bc = detail::text(c, "system.boundary", "periodic");
    if (bc != "periodic" && bc != "open") throw ConfigError("system.boundary", "must be periodic or open");
    p.boundary = bc == "open" ? fh::Boundary::open : fh::Boundary::periodic;
    try {
        p.validate();
    } catch (const Error& e) {
        throw ConfigError("system", e.what());
    }
    if (dry_run) return r;
    fh::RamseyOptions o;
    o.echo = echo;
    o.tolerance = 1e-8;
    o.dicke = false;
    auto tr = fh::ramsey_run(p, t, o);
    detail::finish(r, std::move(tr.squeezing));
    if (tr.failed) {
        r.valid = false;
        r.flag = "propagation failed: " + tr.failure;
    }
    return r;
}

struct SweepAxis {
    std::string path;
    std::vector<double> values;
};

inline std::vector<SweepAxis> sweep_axes(const Json& c) {
    std::vector<SweepAxis> out;
    const Json* sw = detail::find(c, "sweep.axes");
    if (!sw) return out;
    for (const auto& ax : *sw) {
        SweepAxis a;
        a.path = ax["path"].get<std::string>();
        if (ax.contains("values")) {
            for (const auto& v : ax["values"]) a.values.push_back(v.get<double>());
        } else {
            const int n = ax["count"].get<int>();
            const double lo = ax["start"].get<double>(), hi = ax["stop"].get<double>();
            const bool log = ax.value("scale", std::string("linear")) == "log";
            if (log && (lo <= 0.0 || hi <= 0.0)) throw ConfigError("sweep.axes." + a.path, "log scale needs positive bounds");
            for (int k = 0; k < n; ++k) {
                const double u = n == 1 ? 0.0 : double(k) / (n - 1);
                a.values.push_back(log ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u);
            }
        }
        out.push_back(std::move(a));
    }
    return out;
}

struct SweepPoint {
    std::vector<double> coords;
    PointResult result;
};

struct SweepResult {
    std::vector<std::string> axes;
    std::vector<SweepPoint> points;
    std::uint64_t seed = 1;
    int invalid() const {
        int n = 0;
        for (const auto& p : points) n += !p.result.valid;
        return n;
    }
};

/// Run `n` independent jobs on up to `workers` threads; job i writes slot i.
inline void parallel_for(int n, int workers, const std::function<void(int)>& job) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) job(i);
        });
    for (auto& t : pool) t.join();
}

/// Cartesian product of the sweep axes (last axis fastest). A config without
/// axes is a single point. Point failures are recorded, not thrown.
inline SweepResult run_sweep(const Json& c, int workers = 1) {
    validate_config(c);
    SweepResult out;
    out.seed = static_cast<std::uint64_t>(detail::integer(c, "seed", 1));
    const auto axes = sweep_axes(c);
    std::size_t total = 1;
    for (const auto& a : axes) {
        out.axes.push_back(a.path);
        total *= a.values.size();
    }
    out.points.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t rem = i;
        out.points[i].coords.resize(axes.size());
        for (std::size_t k = axes.size(); k-- > 0;) {
            out.points[i].coords[k] = axes[k].values[rem % axes[k].values.size()];
            rem /= axes[k].values.size();
        }
    }
    parallel_for(static_cast<int>(total), workers, [&](int i) {
        Json pc = c;
        pc.erase("sweep");
        auto& pt = out.points[i];
        try {
            for (std::size_t k = 0; k < axes.size(); ++k) detail::assign(pc, axes[k].path, pt.coords[k]);
            pt.result = evaluate_point(pc);
        } catch (const std::exception& e) {
            // without axes the config itself is the point; single points run inline
            if (axes.empty() && dynamic_cast<const ConfigError*>(&e)) throw;
            pt.result = PointResult{};
            pt.result.flag = e.what();
        }
    });
    return out;
}

/// Read and check every grid point without computing anything. Throws the
/// first ConfigError, prefixed with the point's coordinates.
inline std::size_t check_sweep(const Json& c) {
    validate_config(c);
    const auto axes = sweep_axes(c);
    std::size_t total = 1;
    for (const auto& a : axes) total *= a.values.size();
    for (std::size_t i = 0; i < total; ++i) {
        Json pc = c;
        pc.erase("sweep");
        std::string where;
        std::size_t rem = i;
        for (std::size_t k = axes.size(); k-- > 0;) {
            const double x = axes[k].values[rem % axes[k].values.size()];
            rem /= axes[k].values.size();
            detail::assign(pc, axes[k].path, x);
            where = axes[k].path + "=" + detail::fmt(x) + (where.empty() ? "" : " ") + where;
        }
        try {
            evaluate_point(pc, true);
        } catch (const ConfigError& e) {
            if (axes.empty()) throw;
            throw ConfigError(e.path(), "at sweep point " + where + ": " + e.what());
        }
    }
    return total;
}

/// CSV: axis columns, optimal_db, t_opt, validity, seed.
inline std::string sweep_csv(const SweepResult& r) {
    std::ostringstream os;
    for (const auto& a : r.axes) os << a << ',';
    os << "optimal_db,t_opt,validity,seed\n";
    for (const auto& p : r.points) {
        for (double x : p.coords) os << detail::fmt(x) << ',';
        os << detail::fmt(p.result.optimal_db) << ',' << detail::fmt(p.result.t_opt) << ','
           << (p.result.valid ? "ok" : "flagged") << ',' << r.seed << '\n';
    }
    return os.str();
}

inline std::string trace_csv(const SqueezingTrace& t) {
    std::ostringstream os;
    os << "t,xi2,db,valid\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        os << detail::fmt(t.times[i]) << ',' << detail::fmt(t.xi2[i]) << ',' << detail::fmt(t.db[i]) << ',' << int(t.valid[i]) << '\n';
    return os.str();
}

// ---- lattice saturation scans ----------------------------------------------

struct SaturationRow {
    double V0 = 0.0;
    int ell = 0;
    SaturationResult sat;
    PointResult oat;  // with decoherence, when requested
};

struct SaturationScan {
    std::vector<SaturationRow> rows;
    std::uint64_t seed = 1;
    int invalid() const {
        int n = 0;
        for (const auto& r : rows) n += !(r.sat.valid && (r.oat.valid || std::isnan(r.oat.optimal_db)));
        return n;
    }
};

/// For every (V0, ell) in `lattice.depths` x `lattice.ells`: phi with
/// B~/U = target on a filled ell x ell layer, chi, and optionally the OAT
/// optimum propagated through the moment engine with `decoherence`.
inline SaturationScan run_saturation(const Json& c, int workers = 1) {
    const Json* d = detail::find(c, "lattice.depths");
    const Json* l = detail::find(c, "lattice.ells");
    if (!d || !d->is_array() || d->empty()) throw ConfigError("lattice.depths", "must be a nonempty array");
    if (!l || !l->is_array() || l->empty()) throw ConfigError("lattice.ells", "must be a nonempty array");
    lattice::LatticeSpec spec;
    spec.scattering_length_s = detail::number(c, "lattice.scattering_length_a0") * lattice::units::bohr;
    spec.transverse_depth = detail::number(c, "lattice.transverse_depth", 60.0);
    const double target = detail::number(c, "lattice.target", 0.05);
    const double tol = detail::number(c, "lattice.tolerance", 1e-4);
    const bool propagate = detail::flag(c, "lattice.propagate", true);
    const auto dec = detail::decoherence(c);
    SaturationScan out;
    out.seed = static_cast<std::uint64_t>(detail::integer(c, "seed", 1));
    for (const auto& v : *d) {
        if (!v.is_number()) throw ConfigError("lattice.depths", "values must be numbers");
        for (const auto& e : *l) {
            if (!e.is_number_integer() || e.get<int>() < 2) throw ConfigError("lattice.ells", "values must be integers >= 2");
            out.rows.push_back({v.get<double>(), e.get<int>(), {}, {}});
        }
    }
    parallel_for(static_cast<int>(out.rows.size()), workers, [&](int i) {
        auto& row = out.rows[i];
        lattice::LatticeSpec s = spec;
        s.depth_V0 = row.V0;
        try {
            row.sat = saturation_search(s, row.ell, target, tol);
        } catch (const std::exception& e) {
            row.sat.flag = e.what();
            return;
        }
        if (!propagate || !row.sat.valid) return;
        const int N = row.ell * row.ell;
        const double t_max = detail::number(c, "time.t_max", 2.0 * oat_optimum(N, row.sat.chi, 5.0 / (row.sat.chi * std::pow(N, 2.0 / 3.0)), dec).t_opt);
        std::vector<double> t;
        const int n = detail::integer(c, "time.points", 60);
        for (int k = 1; k <= n; ++k) t.push_back(t_max * k / n);
        auto m = coherent_moments(N, kPi / 2, 0.0);
        MomentGenerator T(m.basis, oat_hamiltonian(row.sat.chi), dec.jumps());
        auto res = moment_trace(T, m, t);
        detail::finish(row.oat, std::move(res.trace));
        if (!res.valid) {
            row.oat.valid = false;
            row.oat.flag = "moment propagation invalid: " + res.reason;
        }
    });
    return out;
}

inline std::string saturation_csv(const SaturationScan& s) {
    std::ostringstream os;
    os << "V0,ell,phi,chi,J,U,B_tilde_over_U,optimal_db,t_opt,validity,seed\n";
    for (const auto& r : s.rows) {
        const bool ok = r.sat.valid && (r.oat.valid || std::isnan(r.oat.optimal_db));
        os << detail::fmt(r.V0) << ',' << r.ell << ',' << detail::fmt(r.sat.phi) << ',' << detail::fmt(r.sat.chi) << ','
           << detail::fmt(r.sat.J) << ',' << detail::fmt(r.sat.U) << ',' << detail::fmt(r.sat.ratio) << ','
           << detail::fmt(r.oat.optimal_db) << ',' << detail::fmt(r.oat.t_opt) << ',' << (ok ? "ok" : "flagged") << ','
           << s.seed << '\n';
    }
    return os.str();
}

// ---- manifest ----------------------------------------------------------------

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string git_revision() {
    if (const char* env = std::getenv("SQZ_GIT_REVISION")) return env;
    std::string rev;
    if (FILE* p = popen("git rev-parse --short HEAD 2>/dev/null", "r")) {
        char buf[64];
        if (std::fgets(buf, sizeof buf, p)) rev = buf;
        pclose(p);
    }
    while (!rev.empty() && (rev.back() == '\n' || rev.back() == '\r')) rev.pop_back();
    return rev.empty() ? "unknown" : rev;
}

}  // namespace sqz::cli
