// SPDX-License-Identifier: Apache-2.0
#include "fimisac/experiment.hpp"

#include "common.hpp"

#include <filesystem>
#include <sstream>

using namespace fimisac;
using namespace testutil;
namespace ex = fimisac::experiment;

namespace {

std::string error_field(const std::string& json, const std::string& preset = "") {
    try {
        ex::parse_config(json, preset);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "none";
}

std::string csv_of(const ex::RunOutput& out) {
    std::ostringstream os;
    ex::write_results_csv(os, out.rows);
    return os.str();
}

}  // namespace

TEST_CASE("presets") {
    for (const auto& name : ex::preset_names()) CHECK_NOTHROW(ex::preset_config(name));
    auto fig2 = ex::preset_config("fig2");
    CHECK(fig2.values.size() == 7);
    CHECK(fig2.modes.size() == 4);
    CHECK(fig2.base.n_tx == 8);
    CHECK(fig2.base.p_max == doctest::Approx(dbm_to_watt(26)));
    CHECK(fig2.base.y_max == doctest::Approx(2 * fig2.base.wavelength));
    auto fig5 = ex::preset_config("fig5");
    CHECK(fig5.targets.size() == 2);
    CHECK(fig5.beampattern);
    CHECK(fig5.music);
    CHECK(ex::preset_config("fig4-morph").values.front() == 0.0);
    CHECK_THROWS_AS(ex::preset_config("fig9"), ConfigError);
}

TEST_CASE("config parsing") {
    auto c = ex::parse_config(R"({"system": {"p_max_dbm": 20, "n_users": 3}, "sweep": {"variable": "K", "values": [1, 2]},
                                 "modes": ["RA"], "seed": 9})", "");
    CHECK(c.base.p_max == doctest::Approx(0.1));
    CHECK(c.base.n_users == 3);
    CHECK(c.base.seed == 9);
    CHECK(c.sweep == ex::SweepVar::Users);
    CHECK(c.modes == std::vector<AoMode>{AoMode::RA});
    auto merged = ex::parse_config(R"({"n_channel_draws": 2})", "fig3");
    CHECK(merged.n_channel_draws == 2);
    CHECK(merged.sweep == ex::SweepVar::PMaxDbm);
    CHECK(ex::parse_config(R"({"system": {"derivative": "axial"}})", "fig2").base.derivative ==
          DerivativeConvention::Axial);
}

TEST_CASE("config errors name the field") {
    CHECK(error_field("{not json") == "config");
    CHECK(error_field(R"({"bogus": 1})") == "bogus");
    CHECK(error_field(R"({"system": {"nt": 8}})") == "system.nt");
    CHECK(error_field(R"({"system": {"y_min_m": 0.03, "y_max_m": 0.01}})") == "y_min");
    CHECK(error_field(R"({"system": {"quad_order": 0}})") == "quad_order");
    CHECK(error_field(R"({"system": {"n_tx": 2.5}})") == "system.n_tx");
    CHECK(error_field(R"({"sweep": {"variable": "R_th", "values": []}})") == "sweep.values");
    CHECK(error_field(R"({"sweep": {"variable": "SNR", "values": [1]}})") == "sweep.variable");
    CHECK(error_field(R"({"modes": ["Rigid"]})") == "modes");
    CHECK(error_field(R"({"n_channel_draws": 0})") == "n_channel_draws");
    CHECK(error_field(R"({"targets": [{"mean_deg": 30, "stddev_deg": 0}]})") == "targets[0]");
    CHECK(error_field(R"({"sweep": {"variable": "K", "values": [1.5]}})") == "sweep.values");
    CHECK(error_field(R"({"system": {"alpha_r": [1, 0], "target_range_m": 30}})") == "system.alpha_r");
}

TEST_CASE("validation report lists derived quantities") {
    auto rep = ex::validate_report(ex::preset_config("fig2"));
    CHECK(rep.find("0.0626496") != std::string::npos);
    CHECK(rep.find("628.318") != std::string::npos);
    CHECK(rep.find("r_th = 15") != std::string::npos);
}

TEST_CASE("sweep application") {
    SystemConfig b;
    CHECK(ex::apply_sweep(b, ex::SweepVar::RateThreshold, 6).rate_threshold == 6);
    CHECK(ex::apply_sweep(b, ex::SweepVar::PMaxDbm, 30).p_max == doctest::Approx(1.0));
    CHECK(ex::apply_sweep(b, ex::SweepVar::Users, 3).n_users == 3);
    CHECK(ex::apply_sweep(b, ex::SweepVar::MorphRange, 1.5).y_max == doctest::Approx(b.y_min + 0.015));
    CHECK(ex::draw_seed(1, 0) != ex::draw_seed(1, 1));
    CHECK(ex::draw_seed(1, 0) != ex::draw_seed(2, 0));
    CHECK(ex::crb_seed(1, 0, 0) != ex::crb_seed(1, 0, 1));
}

TEST_CASE("small sweep: row layout, determinism and worker independence") {
    auto cfg = ex::parse_config(R"({"sweep": {"variable": "R_th", "values": [1, 2, 3, 4, 5, 6, 7]},
                                    "modes": ["RA"], "n_channel_draws": 2, "n_mc_crb": 200})", "fig2");
    ex::RunOptions one;
    auto a = ex::run(cfg, one);
    CHECK(a.rows.size() == 7 * 1 * 2);
    auto b = ex::run(cfg, one);
    CHECK(csv_of(a) == csv_of(b));
    ex::RunOptions two;
    two.workers = 2;
    CHECK(csv_of(ex::run(cfg, two)) == csv_of(a));

    const auto text = csv_of(a);
    CHECK(text.rfind("sweep_var,sweep_value,mode,draw,avg_crb,crb_stderr,avg_fisher,outer_iters,feasible,runtime_s\n", 0) == 0);
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    int n = 0;
    while (std::getline(is, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 9);
        ++n;
    }
    CHECK(n == 14);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].draw == static_cast<int>(i % 2));
        CHECK(a.rows[i].runtime_s == 0.0);
        if (!a.rows[i].feasible) CHECK(std::isnan(a.rows[i].avg_crb));
    }
    // a harder rate can only lose feasibility
    for (std::size_t i = 2; i < a.rows.size(); ++i)
        if (a.rows[i].feasible) CHECK(a.rows[i - 2].feasible);
}

TEST_CASE("output files") {
    auto cfg = ex::parse_config(R"({"modes": ["RA"], "n_channel_draws": 1, "n_mc_crb": 100,
                                    "sweep": {"variable": "morph_range", "values": [2]}})", "fig5");
    auto out = ex::run(cfg, {});
    REQUIRE(out.music.has_value());
    REQUIRE(out.patterns.size() == 1);
    const auto dir = std::filesystem::temp_directory_path() / "fimisac_test_outputs";
    std::filesystem::remove_all(dir);
    ex::write_outputs(dir.string(), cfg, out, {});
    CHECK(std::filesystem::exists(dir / "results.csv"));
    CHECK(std::filesystem::exists(dir / "beampattern.csv"));
    CHECK(std::filesystem::exists(dir / "music.csv"));
    CHECK(std::filesystem::exists(dir / "run_metadata.json"));
    std::ostringstream m;
    ex::write_music_csv(m, *out.music);
    CHECK(m.str().rfind("angle_deg,pseudo_spectrum_db\n", 0) == 0);
    CHECK(m.str().find("# estimated_angle_deg,") != std::string::npos);
    CHECK_THROWS_AS(ex::write_outputs("/proc/fimisac_no_such_dir", cfg, out, {}), ex::IoError);
    std::filesystem::remove_all(dir);
}
