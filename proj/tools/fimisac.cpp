// SPDX-License-Identifier: Apache-2.0
//
// fimisac run [config] [--preset NAME] [--seed N] [--out DIR] [--workers N] [--mode A,B] [--timing]
// fimisac validate <config> [--preset NAME]
// fimisac dump-sdr [config] [--preset NAME] [--draw N] [--out FILE]
// fimisac conic <file>
//
// exit: 0 ok, 2 config error, 3 nothing feasible / not solved, 4 I/O error

#include "fimisac/beamform.hpp"
#include "fimisac/experiment.hpp"
#include "fimisac/quadrature.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace ex = fimisac::experiment;

namespace {

ex::ExperimentConfig load(const std::string& path, const std::string& preset) {
    if (path.empty()) {
        if (preset.empty()) throw fimisac::ConfigError("config", "give a config file or --preset");
        return ex::preset_config(preset);
    }
    return ex::load_config(path, preset);
}

// First (penalty-free) SDR relaxation at the first sweep point with flat arrays.
int dump_sdr(const ex::ExperimentConfig& cfg, int draw, const std::string& path) {
    using namespace fimisac;
    const SystemConfig sc = ex::apply_sweep(cfg.base, cfg.sweep, cfg.values.front());
    auto tx = ArrayGeometry::transmit(sc, SurfaceShape::flat(sc.n_tx, sc.y_min));
    auto rx = ArrayGeometry::receive(sc, SurfaceShape::flat(sc.n_rx, sc.y_min));
    auto nodes = sensing_nodes(tx, rx, gh_rule(sc.quad_order), cfg.targets, sc.derivative);
    auto h = realize_all(generate_scenario(sc, ex::draw_seed(sc.seed, draw)).users, tx);
    SdrOptions opts;
    opts.per_column_sensing = cfg.per_column_sensing;
    const auto sdr = build_sdr(nodes, h, sc, opts);
    if (path == "-") {
        conic::write_problem(std::cout, sdr.problem);
        return 0;
    }
    std::ofstream f(path);
    if (f) conic::write_problem(f, sdr.problem);
    if (!f) {
        std::fprintf(stderr, "I/O error: cannot write %s\n", path.c_str());
        return 4;
    }
    return 0;
}

int solve_dump(const std::string& path) {
    using namespace fimisac::conic;
    std::ifstream f(path);
    if (!f) {
        std::fprintf(stderr, "I/O error: cannot read %s\n", path.c_str());
        return 4;
    }
    ConicProblem p;
    try {
        p = read_problem(f);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    }
    const auto sol = solve(p);
    std::printf("status %s\niterations %d\nprimal_objective %.17g\ndual_objective %.17g\nkkt_residual %.3e\n",
                to_string(sol.status), sol.iterations, sol.primal_objective, sol.dual_objective, sol.kkt_residual());
    return sol.status == SolveStatus::Optimal ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FIM-ISAC transceiver design experiments"};
    app.require_subcommand(1);

    std::string config, preset, out_dir = "out";
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<std::string> modes;
    bool timing = false;

    auto* run = app.add_subcommand("run", "run a sweep and write CSV results");
    run->add_option("config", config, "JSON config (merged over --preset)");
    run->add_option("--preset", preset, "fig2|fig3|fig4|fig4-morph|fig5");
    auto* seed_opt = run->add_option("--seed", seed, "master seed");
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    run->add_option("--workers", workers, "concurrent sweep points")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--mode", modes, "comma separated subset of RA,RXonly,TXonly,Joint")->delimiter(',');
    run->add_flag("--timing", timing, "record wall-clock runtime_s (breaks byte-identical output)");

    auto* val = app.add_subcommand("validate", "check a config and print derived quantities");
    val->add_option("config", config, "JSON config")->required();
    val->add_option("--preset", preset, "preset the config is merged over");

    int draw = 0;
    std::string dump_path = "-";
    auto* dump = app.add_subcommand("dump-sdr", "write the first beamforming relaxation as a conic text dump");
    dump->add_option("config", config, "JSON config (merged over --preset)");
    dump->add_option("--preset", preset, "preset the config is merged over");
    dump->add_option("--draw", draw, "channel draw")->check(CLI::NonNegativeNumber)->capture_default_str();
    dump->add_option("--out", dump_path, "output file, - for stdout")->capture_default_str();

    std::string conic_path;
    auto* con = app.add_subcommand("conic", "solve a conic text dump and print the result");
    con->add_option("file", conic_path, "dump file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (con->parsed()) return solve_dump(conic_path);

    ex::ExperimentConfig cfg;
    try {
        cfg = load(config, preset);
        if (*seed_opt) cfg.base.seed = seed;
        if (!modes.empty()) {
            cfg.modes.clear();
            for (const auto& m : modes) {
                const auto mode = fimisac::parse_mode(m);
                if (!mode) throw fimisac::ConfigError("--mode", "unknown mode '" + m + "'");
                cfg.modes.push_back(*mode);
            }
        }
        cfg.validate();
    } catch (const fimisac::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    if (val->parsed()) {
        std::cout << ex::validate_report(cfg);
        return 0;
    }
    if (dump->parsed()) {
        try {
            return dump_sdr(cfg, draw, dump_path);
        } catch (const fimisac::ConfigError& e) {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return 2;
        }
    }

    ex::RunOptions opts;
    opts.workers = workers;
    opts.timing = timing;
    ex::RunOutput out;
    try {
        out = ex::run(cfg, opts);
    } catch (const fimisac::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    try {
        ex::write_outputs(out_dir, cfg, out, opts);
    } catch (const ex::IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return 4;
    }
    std::fprintf(stderr, "%d of %zu runs feasible; results in %s\n", out.feasible_runs, out.rows.size(),
                 out_dir.c_str());
    if (out.feasible_runs == 0) {
        std::fprintf(stderr, "no feasible run: the QoS constraints cannot be met within P_max\n");
        return 3;
    }
    return 0;
}
