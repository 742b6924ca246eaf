#pragma once

// Batch commands behind the orbicount executable. Each command is a thin
// deterministic wrapper: same inputs, byte-identical outputs. Timestamps go
// only to the run.log sidecar in the output directory.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orbicount/config.hpp"
#include "orbicount/counting.hpp"
#include "orbicount/error.hpp"
#include "orbicount/mcg.hpp"
#include "orbicount/orbifold.hpp"
#include "orbicount/verify.hpp"
#include "orbicount/words.hpp"

namespace orbicount::cli {

using nlohmann::json;

enum ExitCode { kOk = 0, kConfigError = 2, kModuleError = 3, kVerificationFail = 4 };

struct RunConfig {
    std::string signature = "g=1 cones=3 boundary=0";
    std::string seed = "a1";
    std::string grid = "12:1.2:14";
    std::optional<double> L;  // enumeration bound, defaults to the grid maximum
    double slack_cap = 4.0;
    std::string functional = "hyp";
    std::string out = ".";
    std::string resume;
    std::string checkpoint;  // count input, defaults to <out>/orbit.ckpt
    std::string window;      // fit window lo:hi, empty for the whole grid
    std::size_t max_expansions = 0;
    unsigned threads = 1;
    Tolerances tolerances{};
};

/// Line and column of a byte offset, both 1-based.
inline std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

/// Parses JSON text; syntax errors become ConfigError with line/column.
inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw Error(ErrorCode::ConfigError,
                    origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

namespace detail {

inline void set_tolerance(Tolerances& t, const std::string& key, double v) {
    struct Field {
        const char* name;
        double Tolerances::*ptr;
    };
    static const Field fields[] = {{"det_drift", &Tolerances::det_drift},
                                   {"parabolic_band", &Tolerances::parabolic_band},
                                   {"relator_residual", &Tolerances::relator_residual},
                                   {"elliptic_angle", &Tolerances::elliptic_angle},
                                   {"polygon_bisection", &Tolerances::polygon_bisection},
                                   {"identity_probe", &Tolerances::identity_probe},
                                   {"length_match", &Tolerances::length_match},
                                   {"clairaut_drift", &Tolerances::clairaut_drift},
                                   {"energy_drift", &Tolerances::energy_drift},
                                   {"metric_match", &Tolerances::metric_match},
                                   {"sinh_match", &Tolerances::sinh_match},
                                   {"quasi_resolution", &Tolerances::quasi_resolution},
                                   {"homogeneity", &Tolerances::homogeneity},
                                   {"exponent_band", &Tolerances::exponent_band}};
    for (const auto& f : fields)
        if (key == f.name) {
            t.*f.ptr = v;
            return;
        }
    throw Error(ErrorCode::ConfigError, "unknown tolerance '" + key + "'");
}

}  // namespace detail

/// Merges a JSON config object into cfg. Unknown keys are errors.
inline void apply_config(RunConfig& cfg, const json& j, const std::string& origin) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, origin + ": config must be a JSON object");
    try {
        for (const auto& [k, v] : j.items()) {
            if (k == "signature") cfg.signature = v.is_string() ? v.get<std::string>() : signature_from_json(v).text();
            else if (k == "seed") cfg.seed = v.get<std::string>();
            else if (k == "grid") cfg.grid = v.get<std::string>();
            else if (k == "L") cfg.L = v.get<double>();
            else if (k == "slack_cap") cfg.slack_cap = v.get<double>();
            else if (k == "functional") cfg.functional = v.get<std::string>();
            else if (k == "out") cfg.out = v.get<std::string>();
            else if (k == "resume") cfg.resume = v.get<std::string>();
            else if (k == "checkpoint") cfg.checkpoint = v.get<std::string>();
            else if (k == "window") cfg.window = v.get<std::string>();
            else if (k == "max_expansions") cfg.max_expansions = v.get<std::size_t>();
            else if (k == "threads") cfg.threads = v.get<unsigned>();
            else if (k == "tolerances") {
                if (!v.is_object()) throw Error(ErrorCode::ConfigError, origin + ": tolerances must be an object");
                for (const auto& [tk, tv] : v.items()) detail::set_tolerance(cfg.tolerances, tk, tv.get<double>());
            } else {
                throw Error(ErrorCode::ConfigError, origin + ": unknown key '" + k + "'");
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, origin + ": " + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, origin + ": " + e.what());
    }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    apply_config(cfg, parse_json_text(read_file(path), path), path);
}

/// Parsed and validated view of a RunConfig.
struct Resolved {
    Signature signature;
    std::vector<double> grid;
    counting::Functional functional = counting::Functional::HyperbolicLength;
    std::optional<std::pair<double, double>> window;
};

inline std::pair<double, double> parse_window(const std::string& s) {
    const auto colon = s.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument("no colon");
        std::size_t u1 = 0, u2 = 0;
        const std::string a = s.substr(0, colon), b = s.substr(colon + 1);
        const double lo = std::stod(a, &u1), hi = std::stod(b, &u2);
        if (u1 != a.size() || u2 != b.size() || !(lo < hi)) throw std::invalid_argument("bad");
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::ConfigError, "window must be lo:hi with lo < hi, got '" + s + "'");
    }
}

/// Turns every malformed field into a ConfigError (exit code 2).
inline Resolved resolve(const RunConfig& cfg) {
    Resolved r;
    try {
        r.signature = parse_signature(cfg.signature);
        r.grid = counting::parse_grid(cfg.grid);
        r.functional = counting::parse_functional(cfg.functional);
        if (!cfg.window.empty()) r.window = parse_window(cfg.window);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    if (cfg.slack_cap < 1.0) throw Error(ErrorCode::ConfigError, "slack_cap must be at least 1");
    if (cfg.L && !(*cfg.L > 0.0)) throw Error(ErrorCode::ConfigError, "L must be positive");
    return r;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + p.string());
}

/// Appends a timestamped line to <out>/run.log.
inline void log_run(const std::string& out, const std::string& what) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ofstream log(std::filesystem::path(out) / "run.log", std::ios::app);
    log << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << what << '\n';
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

inline int cmd_build(const RunConfig& cfg, std::ostream& out) {
    const Signature sig = resolve(cfg).signature;
    const FuchsianGroup g = build_group(sig, cfg.tolerances);
    out << dump(group_summary(g));
    return kOk;
}

inline nlohmann::json ball_summary(const mcg::OrbitBall& ball, const Signature& sig, const std::string& seed_text) {
    return {{"signature", sig.text()},
            {"signature_hash", ball.signature_hash},
            {"seed", seed_text},
            {"seed_canonical", ball.seed.key},
            {"seed_length", ball.seed.length},
            {"L", ball.L},
            {"slack", ball.slack},
            {"members", ball.members.size()},
            {"counts_per_slack", ball.counts_per_slack},
            {"visited", ball.visited},
            {"expanded", ball.expanded},
            {"max_frontier", ball.max_frontier},
            {"stabilized", ball.stabilized},
            {"interrupted", ball.interrupted}};
}

inline int cmd_enumerate(const RunConfig& cfg, std::ostream& out) {
    const Resolved r = resolve(cfg);
    const FuchsianGroup group = build_group(r.signature, cfg.tolerances);
    words::CurveClass seed;
    try {
        seed = words::make_curve_class(words::parse_word(cfg.seed, r.signature), group, cfg.tolerances);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    const double L = cfg.L ? *cfg.L : r.grid.back();
    std::filesystem::create_directories(cfg.out);
    mcg::OrbitOptions opt;
    opt.slack_cap = cfg.slack_cap;
    opt.checkpoint = (std::filesystem::path(cfg.out) / "orbit.ckpt").string();
    opt.resume = cfg.resume;
    opt.max_expansions = cfg.max_expansions;
    opt.threads = cfg.threads;
    log_run(cfg.out, "enumerate " + r.signature.text() + " seed=" + cfg.seed + " L=" + mcg::format_real(L));
    const auto autos = mcg::twist_generators(r.signature);
    const auto ball = mcg::orbit_ball(seed, L, group, autos, opt, cfg.tolerances);
    const json summary = ball_summary(ball, r.signature, cfg.seed);
    write_text(std::filesystem::path(cfg.out) / "ball.json", dump(summary));
    log_run(cfg.out, "enumerate done members=" + std::to_string(ball.members.size()));
    out << dump(summary);
    return kOk;
}

/// Members of a checkpoint, each length re-verified against the group.
inline std::vector<words::CurveClass> load_members(const mcg::CheckpointData& d, const FuchsianGroup& group,
                                                   const Tolerances& tol) {
    std::vector<words::CurveClass> members;
    for (const auto& [key, len] : d.entries) {
        auto cc = words::make_curve_class(words::parse_word(key, group.signature), group, tol);
        if (std::abs(cc.length - len) > tol.length_match * std::max(1.0, len))
            throw Error(ErrorCode::CheckpointMismatch, "length of " + key + " does not verify");
        members.push_back(std::move(cc));
    }
    return members;
}

inline int cmd_count(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Resolved r = resolve(cfg);
    const FuchsianGroup group = build_group(r.signature, cfg.tolerances);
    const std::filesystem::path dir(cfg.out);
    const std::string ckpt = cfg.checkpoint.empty() ? (dir / "orbit.ckpt").string() : cfg.checkpoint;
    const auto data = mcg::read_checkpoint(ckpt);
    if (data.signature_hash != mcg::signature_hash(r.signature))
        throw Error(ErrorCode::CheckpointMismatch, ckpt + " was written for another signature");
    bool stabilized = false;
    const auto side = std::filesystem::path(ckpt).parent_path() / "ball.json";
    if (std::filesystem::exists(side)) stabilized = parse_json_text(read_file(side.string()), side.string()).value("stabilized", false);

    const auto members = load_members(data, group, cfg.tolerances);
    const counting::Counter counter(counting::functional_values(members, r.functional));
    const auto curve = counting::count_values(counter, r.grid, counting::functional_limit(data.L, r.functional, group),
                                              r.functional);
    std::filesystem::create_directories(dir);
    write_text(dir / "counts.csv", counting::to_csv(curve));
    log_run(cfg.out, "count " + ckpt + " functional=" + cfg.functional);
    const auto [lo, hi] = r.window.value_or(std::pair<double, double>{0.0, HUGE_VAL});
    try {
        const auto fit = counting::fit_exponent(curve, lo, hi);
        json j = counting::to_json(fit, stabilized);
        j["functional"] = counting::functional_name(r.functional);
        j["seed"] = cfg.seed;
        j["expected_exponent"] = counting_exponent(r.signature);
        write_text(dir / "fit.json", dump(j));
        out << dump(j);
    } catch (const Error& e) {
        std::filesystem::remove(dir / "fit.json");
        err << "orbicount: " << e.what() << "\n";
        return kModuleError;
    }
    return kOk;
}

inline int cmd_fit(const std::string& csv_path, const RunConfig& cfg, std::ostream& out) {
    const Resolved r = resolve(cfg);
    const auto curve = counting::from_csv(read_file(csv_path));
    const auto [lo, hi] = r.window.value_or(std::pair<double, double>{0.0, HUGE_VAL});
    json j = counting::to_json(counting::fit_exponent(curve, lo, hi), false);
    j["functional"] = counting::functional_name(curve.functional);
    out << dump(j);
    return kOk;
}

inline int cmd_verify_geometry(const std::string& scenario_path, const RunConfig& cfg, std::ostream& out) {
    const std::string text = read_file(scenario_path);
    const verify::Scenario sc = verify::scenario_from_json(parse_json_text(text, scenario_path));
    const json report = verify::run_suite(sc, cfg.tolerances);
    std::filesystem::create_directories(cfg.out);
    write_text(std::filesystem::path(cfg.out) / (sc.name + ".report.json"), dump(report));
    log_run(cfg.out, "verify-geometry " + scenario_path + " pass=" + (report.at("pass").get<bool>() ? "true" : "false"));
    out << dump(report);
    return report.at("pass").get<bool>() ? kOk : kVerificationFail;
}

/// Exit code for an exception escaping a command.
inline int exit_code_for(const Error& e) {
    return e.code() == ErrorCode::ConfigError ? kConfigError : kModuleError;
}

}  // namespace orbicount::cli
