// orbicount: build groups, enumerate orbits, count and fit, verify geometry.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orbicount/orbicount.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> signature, seed, grid, functional, out, resume, checkpoint, window;
    std::optional<double> L, slack_cap;
    std::optional<std::size_t> max_expansions;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file; flags override it");
    cmd->add_option("--signature", f.signature, "signature, e.g. \"g=1 cones=3 boundary=0\"");
    cmd->add_option("--out", f.out, "output directory");
}

orbicount::cli::RunConfig merge(const Flags& f) {
    orbicount::cli::RunConfig cfg;
    if (!f.config.empty()) orbicount::cli::load_config_file(cfg, f.config);
    if (f.signature) cfg.signature = *f.signature;
    if (f.seed) cfg.seed = *f.seed;
    if (f.grid) cfg.grid = *f.grid;
    if (f.functional) cfg.functional = *f.functional;
    if (f.out) cfg.out = *f.out;
    if (f.resume) cfg.resume = *f.resume;
    if (f.checkpoint) cfg.checkpoint = *f.checkpoint;
    if (f.window) cfg.window = *f.window;
    if (f.L) cfg.L = *f.L;
    if (f.slack_cap) cfg.slack_cap = *f.slack_cap;
    if (f.max_expansions) cfg.max_expansions = *f.max_expansions;
    if (f.threads) cfg.threads = *f.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    namespace cli = orbicount::cli;
    CLI::App app{"Orbifold curve counting and geometry verification"};
    app.require_subcommand(1);
    Flags f;
    std::string csv, scenario;
    std::vector<std::string> positional;

    auto* build = app.add_subcommand("build", "build a Fuchsian group and print its summary");
    add_common(build, f);
    build->add_option("signature_text", positional, "signature as positional key=value tokens");

    auto* enumerate = app.add_subcommand("enumerate", "enumerate a mapping class group orbit ball");
    add_common(enumerate, f);
    enumerate->add_option("--seed", f.seed, "seed word, e.g. \"a1\"");
    enumerate->add_option("--grid", f.grid, "grid L0:q:n; its maximum is the length bound");
    enumerate->add_option("--L", f.L, "length bound overriding the grid maximum");
    enumerate->add_option("--slack-cap", f.slack_cap, "largest slack factor tried");
    enumerate->add_option("--resume", f.resume, "checkpoint file to resume from");
    enumerate->add_option("--max-expansions", f.max_expansions, "stop after this many expansions (checkpoint test)");
    enumerate->add_option("--threads", f.threads, "worker threads");

    auto* count = app.add_subcommand("count", "count checkpoint members on a grid and fit the exponent");
    add_common(count, f);
    count->add_option("--seed", f.seed, "seed word recorded in the report");
    count->add_option("--grid", f.grid, "grid L0:q:n");
    count->add_option("--functional", f.functional, "hyp or word")->check(CLI::IsMember({"hyp", "word"}));
    count->add_option("--checkpoint", f.checkpoint, "checkpoint file, default <out>/orbit.ckpt");
    count->add_option("--window", f.window, "fit window lo:hi");

    auto* fit = app.add_subcommand("fit", "fit the exponent of a counts CSV");
    fit->add_option("--config", f.config, "JSON config file");
    fit->add_option("csv", csv, "CSV with header L,count,functional")->required();
    fit->add_option("--window", f.window, "fit window lo:hi");

    auto* geometry = app.add_subcommand("verify-geometry", "run the geometry verification suite on a scenario");
    geometry->add_option("scenario", scenario, "scenario JSON file")->required();
    geometry->add_option("--config", f.config, "JSON config file");
    geometry->add_option("--out", f.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kConfigError;
    }

    if (!positional.empty()) {
        std::string joined;
        for (const auto& t : positional) joined += (joined.empty() ? "" : " ") + t;
        f.signature = joined;
    }

    try {
        const cli::RunConfig cfg = merge(f);
        if (build->parsed()) return cli::cmd_build(cfg, std::cout);
        if (enumerate->parsed()) return cli::cmd_enumerate(cfg, std::cout);
        if (count->parsed()) return cli::cmd_count(cfg, std::cout, std::cerr);
        if (fit->parsed()) return cli::cmd_fit(csv, cfg, std::cout);
        if (geometry->parsed()) return cli::cmd_verify_geometry(scenario, cfg, std::cout);
    } catch (const orbicount::Error& e) {
        std::cerr << "orbicount: " << e.what() << "\n";
        return cli::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "orbicount: " << e.what() << "\n";
        return cli::kModuleError;
    }
    return cli::kConfigError;
}
