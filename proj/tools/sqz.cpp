// sqz: config-driven squeezing runs.
//
//   sqz validate --config c.toml
//   sqz run      --config c.toml --out results/
//   sqz sweep    --config c.toml --out results/ --workers 4
//   sqz saturate --config c.toml --out results/
//
// Every flag can also come from the environment: SQZ_CONFIG, SQZ_OUT,
// SQZ_WORKERS, SQZ_SEED, SQZ_STRICT.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include "sqz/cli/runner.hpp"

namespace fs = std::filesystem;
using sqz::cli::Json;

namespace {

struct Options {
    std::string config;
    std::string out = "sqz-out";
    int workers = 1;
    std::optional<long long> seed;
    bool strict = false;
};

Json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (fs::path(path).extension() == ".json") return Json::parse(text);
    toml::table tbl;
    try {
        tbl = toml::parse(text, path);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << path << ':' << e.source().begin.line << ':' << e.source().begin.column << ": " << e.description();
        throw std::runtime_error(os.str());
    }
    std::ostringstream js;
    js << toml::json_formatter{tbl};
    return Json::parse(js.str());
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << body;
}

std::string hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json manifest(const Json& cfg, const std::string& command, const std::string& started, int points, int flagged) {
    return Json{{"command", command},
                {"config_hash", hex(sqz::cli::config_hash(cfg))},
                {"config", cfg},
                {"git_revision", sqz::cli::git_revision()},
                {"seed", cfg.value("seed", 1)},
                {"started", started},
                {"finished", sqz::cli::utc_now()},
                {"points", points},
                {"flagged", flagged}};
}

// Gnuplot block layout: one block per value of the first axis.
std::string heatmap(const sqz::cli::SweepResult& r) {
    std::ostringstream os;
    os << "# " << r.axes[0] << ' ' << r.axes[1] << " optimal_db\n";
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& p = r.points[i];
        if (i && p.coords[0] != r.points[i - 1].coords[0]) os << '\n';
        os << sqz::cli::detail::fmt(p.coords[0]) << ' ' << sqz::cli::detail::fmt(p.coords[1]) << ' '
           << sqz::cli::detail::fmt(p.result.optimal_db) << '\n';
    }
    return os.str();
}

int run_points(const Options& o, Json cfg, const std::string& command) {
    const bool has_axes = sqz::cli::detail::find(cfg, "sweep.axes") != nullptr;
    if (command == "run" && has_axes) throw sqz::cli::ConfigError("sweep", "run evaluates a single point; use the sweep subcommand");
    if (command == "sweep" && !has_axes) throw sqz::cli::ConfigError("sweep.axes", "missing; sweep needs at least one axis");
    const std::string started = sqz::cli::utc_now();
    const auto r = sqz::cli::run_sweep(cfg, o.workers);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    write_file(dir / "results.csv", sqz::cli::sweep_csv(r));
    if (r.axes.size() == 2) write_file(dir / "heatmap.dat", heatmap(r));
    if (sqz::cli::detail::flag(cfg, "output.traces", false)) {
        fs::create_directories(dir / "traces");
        for (std::size_t i = 0; i < r.points.size(); ++i)
            write_file(dir / "traces" / ("point_" + std::to_string(i) + ".csv"), sqz::cli::trace_csv(r.points[i].result.trace));
    }
    Json m = manifest(cfg, command, started, static_cast<int>(r.points.size()), r.invalid());
    Json flags = Json::array();
    for (std::size_t i = 0; i < r.points.size(); ++i)
        if (!r.points[i].result.valid) flags.push_back({{"point", i}, {"reason", r.points[i].result.flag}});
    m["flags"] = flags;
    write_file(dir / "manifest.json", m.dump(2) + "\n");
    for (const auto& f : flags) std::cerr << "flagged point " << f["point"] << ": " << f["reason"].get<std::string>() << '\n';
    std::cout << r.points.size() << " point(s), " << r.invalid() << " flagged -> " << (dir / "results.csv").string() << '\n';
    return o.strict && r.invalid() ? 3 : 0;
}

int run_saturate(const Options& o, const Json& cfg) {
    const std::string started = sqz::cli::utc_now();
    const auto s = sqz::cli::run_saturation(cfg, o.workers);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    write_file(dir / "saturation.csv", sqz::cli::saturation_csv(s));
    Json m = manifest(cfg, "saturate", started, static_cast<int>(s.rows.size()), s.invalid());
    Json flags = Json::array();
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const auto& r = s.rows[i];
        const std::string why = !r.sat.flag.empty() ? r.sat.flag : r.oat.flag;
        if (!why.empty()) flags.push_back({{"point", i}, {"reason", why}});
    }
    m["flags"] = flags;
    write_file(dir / "manifest.json", m.dump(2) + "\n");
    std::cout << s.rows.size() << " lattice point(s), " << s.invalid() << " flagged -> " << (dir / "saturation.csv").string() << '\n';
    return o.strict && s.invalid() ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spin-squeezing simulations for spin-orbit-coupled lattice fermions"};
    app.require_subcommand(1, 1);
    Options o;
    long long seed = 0;
    auto add_common = [&](CLI::App* sub, bool outputs) {
        sub->add_option("--config", o.config, "TOML or JSON config file")->required()->envname("SQZ_CONFIG")->check(CLI::ExistingFile);
        if (!outputs) return;
        sub->add_option("--out", o.out, "output directory")->envname("SQZ_OUT")->capture_default_str();
        sub->add_option("--workers", o.workers, "worker threads")->envname("SQZ_WORKERS")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "override the config seed")->envname("SQZ_SEED")->check(CLI::NonNegativeNumber);
        sub->add_flag("--strict", o.strict, "nonzero exit when any point is flagged")->envname("SQZ_STRICT");
    };
    auto* validate = app.add_subcommand("validate", "check a config and print its hash");
    auto* run = app.add_subcommand("run", "evaluate a single point");
    auto* sweep = app.add_subcommand("sweep", "evaluate the Cartesian product of sweep.axes");
    auto* saturate = app.add_subcommand("saturate", "SOC angle and OAT squeezing per lattice depth and size");
    add_common(validate, false);
    for (auto* s : {run, sweep, saturate}) add_common(s, true);
    CLI11_PARSE(app, argc, argv);

    try {
        Json cfg = load_config(o.config);
        for (auto* s : {run, sweep, saturate})
            if (s->parsed() && s->count("--seed")) cfg["seed"] = seed;
        if (validate->parsed()) {
            std::size_t points = 0;
            if (cfg.contains("lattice")) {
                if (!cfg["lattice"].is_object()) throw sqz::cli::ConfigError("lattice", "expected a table");
            } else {
                points = sqz::cli::check_sweep(cfg);
            }
            std::cout << "ok " << hex(sqz::cli::config_hash(cfg)) << ' ' << points << " point(s)\n";
            return 0;
        }
        if (saturate->parsed()) return run_saturate(o, cfg);
        return run_points(o, cfg, run->parsed() ? "run" : "sweep");
    } catch (const sqz::cli::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
