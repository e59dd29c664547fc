// SPDX-License-Identifier: Apache-2.0

#include "fimisac/experiment.hpp"

#include "fimisac/fisher.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fimisac::experiment {

using nlohmann::json;

const char* to_string(SweepVar v) {
    switch (v) {
        case SweepVar::RateThreshold: return "R_th";
        case SweepVar::PMaxDbm: return "P_max_dBm";
        case SweepVar::Users: return "K";
        case SweepVar::MorphRange: return "morph_range";
    }
    return "?";
}

std::optional<SweepVar> parse_sweep_var(const std::string& s) {
    for (SweepVar v : {SweepVar::RateThreshold, SweepVar::PMaxDbm, SweepVar::Users, SweepVar::MorphRange})
        if (s == to_string(v)) return v;
    return std::nullopt;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double deg(double rad) { return rad * 180.0 / kPi; }
double rad(double deg) { return deg * kPi / 180.0; }

const char* kPresetBase = R"({
  "sweep": {"variable": "R_th", "values": [1, 2, 3, 4, 5, 6, 7]},
  "modes": ["RA", "RXonly", "TXonly", "Joint"],
  "n_channel_draws": 20,
  "n_mc_crb": 2000,
  "seed": 1
})";

}  // namespace

std::uint64_t draw_seed(std::uint64_t seed, int draw) {
    return splitmix(splitmix(seed) ^ static_cast<std::uint64_t>(draw));
}

std::uint64_t crb_seed(std::uint64_t seed, int draw, int target) {
    return splitmix(draw_seed(seed, draw) ^ (0x5bd1e995ull + static_cast<std::uint64_t>(target)));
}

std::vector<std::string> preset_names() { return {"fig2", "fig3", "fig4", "fig4-morph", "fig5"}; }

std::string preset_json(const std::string& name) {
    json j = json::parse(kPresetBase);
    if (name == "fig2") {
    } else if (name == "fig3") {
        j["sweep"] = {{"variable", "P_max_dBm"}, {"values", {20, 22, 24, 26, 28, 30}}};
    } else if (name == "fig4") {
        j["sweep"] = {{"variable", "K"}, {"values", {1, 2, 3, 4}}};
    } else if (name == "fig4-morph") {
        j["sweep"] = {{"variable", "morph_range"}, {"values", {0, 0.5, 1, 1.5, 2, 2.5, 3}}};
    } else if (name == "fig5") {
        j["sweep"] = {{"variable", "morph_range"}, {"values", {2}}};
        j["modes"] = {"RA", "Joint"};
        j["n_channel_draws"] = 1;
        j["targets"] = json::array({{{"mean_deg", 35}}, {{"mean_deg", 55}}});
        j["outputs"] = {{"beampattern", true}, {"music", true}, {"grid_step_deg", 0.1}};
    } else {
        throw ConfigError("preset", "unknown preset '" + name + "'");
    }
    j["preset"] = name;
    return j.dump(2);
}

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& field, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(field, "wrong type");
    }
}

int get_int(const json& j, const char* key, const std::string& field, int fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
    return v.get<int>();
}

SystemConfig parse_system(const json& s) {
    check_keys(s, "system",
               {"n_tx", "n_rx", "n_users", "block_length", "wavelength_m", "spacing_m", "y_min_m", "y_max_m",
                "p_max_dbm", "sigma_r2_dbm", "sigma_k2_dbm", "rate_threshold", "target_range_m", "alpha_r",
                "quad_order", "derivative"});
    SystemConfig c;
    c.n_tx = get_int(s, "n_tx", "system.n_tx", c.n_tx);
    c.n_rx = get_int(s, "n_rx", "system.n_rx", c.n_rx);
    c.n_users = get_int(s, "n_users", "system.n_users", c.n_users);
    c.block_length = get_int(s, "block_length", "system.block_length", c.block_length);
    c.wavelength = get<double>(s, "wavelength_m", "system.wavelength_m", c.wavelength);
    c.spacing = get<double>(s, "spacing_m", "system.spacing_m", 0.5 * c.wavelength);
    c.y_min = get<double>(s, "y_min_m", "system.y_min_m", 0.0);
    c.y_max = get<double>(s, "y_max_m", "system.y_max_m", c.y_min + 2.0 * c.wavelength);
    c.p_max = dbm_to_watt(get<double>(s, "p_max_dbm", "system.p_max_dbm", 26.0));
    c.sigma_r2 = dbm_to_watt(get<double>(s, "sigma_r2_dbm", "system.sigma_r2_dbm", -80.0));
    c.sigma_k2 = dbm_to_watt(get<double>(s, "sigma_k2_dbm", "system.sigma_k2_dbm", -80.0));
    c.rate_threshold = get<double>(s, "rate_threshold", "system.rate_threshold", c.rate_threshold);
    c.quad_order = get_int(s, "quad_order", "system.quad_order", c.quad_order);
    if (s.contains("alpha_r") && s.contains("target_range_m"))
        throw ConfigError("system.alpha_r", "give either alpha_r or target_range_m, not both");
    if (s.contains("alpha_r")) {
        const auto& a = s.at("alpha_r");
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
            throw ConfigError("system.alpha_r", "expected [re, im]");
        c.alpha_r = cd(a[0].get<double>(), a[1].get<double>());
    } else {
        const double range = get<double>(s, "target_range_m", "system.target_range_m", 50.0);
        if (!(range > 0.0)) throw ConfigError("system.target_range_m", "must be positive");
        c.alpha_r = SystemConfig::default_reflection(range);
    }
    const auto d = get<std::string>(s, "derivative", "system.derivative", "exact");
    if (d == "exact") c.derivative = DerivativeConvention::Exact;
    else if (d == "axial") c.derivative = DerivativeConvention::Axial;
    else throw ConfigError("system.derivative", "expected \"exact\" or \"axial\"");
    return c;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (values.empty()) throw ConfigError("sweep.values", "must not be empty");
    if (modes.empty()) throw ConfigError("modes", "must not be empty");
    if (n_channel_draws < 1) throw ConfigError("n_channel_draws", "must be >= 1");
    if (n_mc_crb < 100) throw ConfigError("n_mc_crb", "must be >= 100");
    if (targets.empty()) throw ConfigError("targets", "need at least one target");
    if (!(grid_step_deg > 0.0)) throw ConfigError("outputs.grid_step_deg", "must be positive");
    for (std::size_t i = 0; i < targets.size(); ++i) {
        try {
            targets[i].validate();
        } catch (const ConfigError& e) {
            throw ConfigError("targets[" + std::to_string(i) + "]", e.what());
        }
    }
    base.validate();
    for (double v : values) {
        if (sweep == SweepVar::Users && (v < 0 || v != std::floor(v)))
            throw ConfigError("sweep.values", "K values must be non-negative integers");
        if (sweep == SweepVar::MorphRange && v < 0)
            throw ConfigError("sweep.values", "morph_range values must be >= 0");
        try {
            apply_sweep(base, sweep, v).validate();
        } catch (const ConfigError& e) {
            throw ConfigError("sweep.values", std::string("value ") + fmt(v) + ": " + e.what());
        }
    }
}

ExperimentConfig parse_config(const std::string& json_text, const std::string& preset) {
    json user;
    try {
        user = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    if (!user.is_object()) throw ConfigError("config", "top level must be an object");
    std::string preset_name = preset;
    if (preset_name.empty() && user.contains("preset")) {
        if (!user["preset"].is_string()) throw ConfigError("preset", "expected a string");
        preset_name = user["preset"].get<std::string>();
    }
    json j = preset_name.empty() ? json::parse(kPresetBase) : json::parse(preset_json(preset_name));
    j.merge_patch(user);
    if (!preset_name.empty()) j["preset"] = preset_name;

    check_keys(j, "", {"preset", "system", "targets", "sweep", "modes", "n_channel_draws", "n_mc_crb", "seed",
                       "outputs", "per_column_sensing"});
    ExperimentConfig c;
    c.preset = get<std::string>(j, "preset", "preset", "");
    c.base = parse_system(j.value("system", json::object()));
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            throw ConfigError("seed", "expected a non-negative integer");
        c.base.seed = j["seed"].get<std::uint64_t>();
    }

    const json targets = j.value("targets", json::array({{{"mean_deg", 45}}}));
    if (!targets.is_array()) throw ConfigError("targets", "expected an array");
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const std::string f = "targets[" + std::to_string(i) + "]";
        check_keys(targets[i], f, {"mean_deg", "stddev_deg"});
        TargetPrior t;
        t.mean = rad(get<double>(targets[i], "mean_deg", f + ".mean_deg", 45.0));
        t.stddev = targets[i].contains("stddev_deg") ? rad(get<double>(targets[i], "stddev_deg", f + ".stddev_deg", 0.0))
                                                     : default_prior_stddev(c.base.n_tx, t.mean);
        c.targets.push_back(t);
    }

    const json& sw = j.at("sweep");
    check_keys(sw, "sweep", {"variable", "values"});
    const auto var = parse_sweep_var(get<std::string>(sw, "variable", "sweep.variable", ""));
    if (!var) throw ConfigError("sweep.variable", "expected one of R_th, P_max_dBm, K, morph_range");
    c.sweep = *var;
    if (!sw.contains("values") || !sw["values"].is_array()) throw ConfigError("sweep.values", "expected an array");
    for (const auto& v : sw["values"]) {
        if (!v.is_number()) throw ConfigError("sweep.values", "expected numbers");
        c.values.push_back(v.get<double>());
    }

    if (!j["modes"].is_array()) throw ConfigError("modes", "expected an array");
    for (const auto& m : j["modes"]) {
        const auto mode = m.is_string() ? parse_mode(m.get<std::string>()) : std::nullopt;
        if (!mode) throw ConfigError("modes", "expected RA, RXonly, TXonly or Joint");
        c.modes.push_back(*mode);
    }
    c.n_channel_draws = get_int(j, "n_channel_draws", "n_channel_draws", c.n_channel_draws);
    c.n_mc_crb = get_int(j, "n_mc_crb", "n_mc_crb", c.n_mc_crb);
    c.per_column_sensing = get<bool>(j, "per_column_sensing", "per_column_sensing", false);
    if (j.contains("outputs")) {
        const json& o = j["outputs"];
        check_keys(o, "outputs", {"beampattern", "music", "grid_step_deg"});
        c.beampattern = get<bool>(o, "beampattern", "outputs.beampattern", false);
        c.music = get<bool>(o, "music", "outputs.music", false);
        c.grid_step_deg = get<double>(o, "grid_step_deg", "outputs.grid_step_deg", 0.1);
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& preset) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), preset);
}

ExperimentConfig preset_config(const std::string& name) { return parse_config("{}", name); }

SystemConfig apply_sweep(const SystemConfig& base, SweepVar var, double value) {
    SystemConfig c = base;
    switch (var) {
        case SweepVar::RateThreshold: c.rate_threshold = value; break;
        case SweepVar::PMaxDbm: c.p_max = dbm_to_watt(value); break;
        case SweepVar::Users: c.n_users = static_cast<int>(value); break;
        case SweepVar::MorphRange: c.y_max = c.y_min + value * c.wavelength; break;
    }
    return c;
}

std::string validate_report(const ExperimentConfig& cfg) {
    std::ostringstream os;
    const auto& b = cfg.base;
    os << "config ok" << (cfg.preset.empty() ? "" : " (preset " + cfg.preset + ")") << "\n";
    os << "  arrays            N_t = " << b.n_tx << ", N_r = " << b.n_rx << ", K = " << b.n_users
       << ", T = " << b.block_length << "\n";
    os << "  wavenumber        delta = " << fmt(b.wavenumber()) << " rad/m\n";
    os << "  SINR threshold    r_th = " << fmt(b.sinr_threshold()) << " (R_th = " << fmt(b.rate_threshold) << " bps/Hz)\n";
    os << "  power             P_max = " << fmt(b.p_max) << " W, sigma_r2 = " << fmt(b.sigma_r2)
       << " W, sigma_k2 = " << fmt(b.sigma_k2) << " W\n";
    os << "  morphing range    [" << fmt(b.y_min) << ", " << fmt(b.y_max) << "] m\n";
    os << "  |alpha_r|^2       " << fmt(std::norm(b.alpha_r)) << "\n";
    os << "  quadrature order  U = " << b.quad_order << "\n";
    for (std::size_t i = 0; i < cfg.targets.size(); ++i)
        os << "  target " << i << "          mean = " << fmt(deg(cfg.targets[i].mean))
           << " deg, sigma_theta = " << fmt(cfg.targets[i].stddev) << " rad\n";
    os << "  sweep             " << to_string(cfg.sweep) << " over " << cfg.values.size() << " values\n";
    os << "  runs              " << cfg.values.size() * cfg.modes.size() * cfg.n_channel_draws << " ("
       << cfg.n_channel_draws << " draws, " << cfg.n_mc_crb << " CRB samples each)\n";
    return os.str();
}

bool trace_non_decreasing(const std::vector<double>& trace, double rel_slack) {
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] < trace[i - 1] - rel_slack * std::abs(trace[i - 1])) return false;
    return true;
}

RunOutput run(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    const int n_points = static_cast<int>(cfg.values.size());
    const int n_tasks = n_points * cfg.n_channel_draws;
    const int n_modes = static_cast<int>(cfg.modes.size());
    RunOutput out;
    out.rows.resize(static_cast<std::size_t>(n_tasks) * n_modes);

    AoOptions ao_opts;
    ao_opts.sdr.per_column_sensing = cfg.per_column_sensing;

    std::vector<AoResult> first_results(n_modes);
    std::vector<SystemConfig> first_cfg(1);

    auto task = [&](int t) {
        const int point = t / cfg.n_channel_draws;
        const int draw = t % cfg.n_channel_draws;
        const double value = cfg.values[point];
        const SystemConfig sc = apply_sweep(cfg.base, cfg.sweep, value);
        const auto scenario = generate_scenario(sc, draw_seed(cfg.base.seed, draw));
        for (int m = 0; m < n_modes; ++m) {
            const auto t0 = std::chrono::steady_clock::now();
            auto res = optimize(sc, scenario.users, cfg.targets, cfg.modes[m], ao_opts);
            ResultRow row;
            row.sweep_var = to_string(cfg.sweep);
            row.sweep_value = value;
            row.mode = cfg.modes[m];
            row.draw = draw;
            row.feasible = res.feasible;
            row.outer_iters = res.iterations;
            if (res.feasible) {
                const auto tx = ArrayGeometry::transmit(sc, res.y_t);
                const auto rx = ArrayGeometry::receive(sc, res.y_r);
                double crb = 0.0, var = 0.0;
                for (std::size_t k = 0; k < cfg.targets.size(); ++k) {
                    const auto est = avg_crb_mc(res.w.w, tx, rx, cfg.targets[k], cfg.n_mc_crb,
                                                crb_seed(cfg.base.seed, draw, static_cast<int>(k)), sc);
                    crb += est.value;
                    var += est.std_error * est.std_error;
                }
                const double nt = static_cast<double>(cfg.targets.size());
                row.avg_crb = crb / nt;
                row.crb_stderr = std::sqrt(var) / nt;
                row.avg_fisher = res.trace.back();
                row.max_kkt = res.max_kkt;
                row.trace_monotone = trace_non_decreasing(res.stage_trace);
                row.rank_one = res.rank_one;
            } else {
                row.avg_crb = row.crb_stderr = row.avg_fisher = std::nan("");
            }
            if (opts.timing)
                row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            out.rows[static_cast<std::size_t>(t) * n_modes + m] = row;
            if (t == 0) first_results[m] = std::move(res);
        }
        if (t == 0) first_cfg[0] = sc;
    };

    const int workers = std::max(1, std::min(opts.workers, n_tasks));
    if (workers == 1) {
        for (int t = 0; t < n_tasks; ++t) task(t);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int t = next++; t < n_tasks; t = next++) {
                    try {
                        task(t);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
    }
    for (const auto& r : out.rows) out.feasible_runs += r.feasible ? 1 : 0;

    if (cfg.beampattern || cfg.music) {
        const SystemConfig& sc = first_cfg[0];
        const auto grid = angle_grid(0.0, kPi, rad(cfg.grid_step_deg));
        std::vector<std::pair<double, double>> regions;
        for (const auto& t : cfg.targets) regions.emplace_back(t.mean - 3 * t.stddev, t.mean + 3 * t.stddev);
        int music_idx = -1;
        for (int m = 0; m < n_modes; ++m) {
            const auto& res = first_results[m];
            if (!res.feasible) continue;
            if (cfg.beampattern) {
                ModePattern mp{cfg.modes[m], beampattern(res.w.w, ArrayGeometry::transmit(sc, res.y_t), grid), 0.0};
                mp.region_gain = integrated_gain(mp.pattern, regions);
                out.patterns.push_back(std::move(mp));
            }
            if (music_idx < 0 || cfg.modes[m] == AoMode::Joint) music_idx = m;
        }
        if (cfg.music && music_idx >= 0) {
            const auto& res = first_results[music_idx];
            std::vector<EchoTarget> echo_targets;
            for (const auto& t : cfg.targets) echo_targets.push_back({t.mean, sc.alpha_r});
            const auto echo = synthesize_echo(res.w, ArrayGeometry::transmit(sc, res.y_t),
                                              ArrayGeometry::receive(sc, res.y_r), echo_targets,
                                              sc.block_length, sc.sigma_r2, draw_seed(cfg.base.seed, 0) ^ 0xec40ull);
            out.music = music_estimate(echo.y, ArrayGeometry::receive(sc, res.y_r),
                                       static_cast<int>(cfg.targets.size()), grid);
            out.music_mode = cfg.modes[music_idx];
        }
    }
    return out;
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << "sweep_var,sweep_value,mode,draw,avg_crb,crb_stderr,avg_fisher,outer_iters,feasible,runtime_s\n";
    for (const auto& r : rows)
        os << r.sweep_var << ',' << fmt(r.sweep_value) << ',' << to_string(r.mode) << ',' << r.draw << ','
           << fmt(r.avg_crb) << ',' << fmt(r.crb_stderr) << ',' << fmt(r.avg_fisher) << ',' << r.outer_iters
           << ',' << (r.feasible ? 1 : 0) << ',' << fmt(r.runtime_s) << '\n';
}

void write_beampattern_csv(std::ostream& os, const std::vector<ModePattern>& patterns) {
    os << "angle_deg,mode,gain_db\n";
    for (const auto& p : patterns)
        for (std::size_t i = 0; i < p.pattern.angles.size(); ++i)
            os << fmt(deg(p.pattern.angles[i])) << ',' << to_string(p.mode) << ',' << fmt(p.pattern.gain_db[i]) << '\n';
}

void write_music_csv(std::ostream& os, const MusicResult& music) {
    os << "angle_deg,pseudo_spectrum_db\n";
    for (std::size_t i = 0; i < music.grid.size(); ++i)
        os << fmt(deg(music.grid[i])) << ',' << fmt(music.spectrum_db[i]) << '\n';
    for (double e : music.estimates) os << "# estimated_angle_deg," << fmt(deg(e)) << '\n';
}

std::string metadata_json(const ExperimentConfig& cfg, const RunOutput& out, const RunOptions& opts) {
    json j;
    j["preset"] = cfg.preset;
    j["seed"] = cfg.base.seed;
    j["sweep"] = {{"variable", to_string(cfg.sweep)}, {"values", cfg.values}};
    if (cfg.sweep == SweepVar::MorphRange) j["sweep"]["unit"] = "wavelengths";
    json modes = json::array();
    for (auto m : cfg.modes) modes.push_back(to_string(m));
    j["modes"] = modes;
    j["n_channel_draws"] = cfg.n_channel_draws;
    j["n_mc_crb"] = cfg.n_mc_crb;
    j["crb_prior_truncation_sigmas"] = 3.0;
    j["crb_note"] = "avg_crb is the sample mean of 1/F(theta) with theta drawn from the prior truncated to "
                    "+-3 sigma; with several targets it is the mean over targets";
    j["quad_order"] = cfg.base.quad_order;
    j["derivative"] = cfg.base.derivative == DerivativeConvention::Exact ? "exact" : "axial";
    j["per_column_sensing"] = cfg.per_column_sensing;
    j["scenario_rng"] = "users depend on (seed, draw) only, shared by every sweep point and mode";
    j["total_runs"] = out.rows.size();
    j["feasible_runs"] = out.feasible_runs;
    j["timing"] = opts.timing;
    json targets = json::array();
    for (const auto& t : cfg.targets) targets.push_back({{"mean_deg", deg(t.mean)}, {"stddev_rad", t.stddev}});
    j["targets"] = targets;
    if (!out.patterns.empty()) {
        json g = json::object();
        for (const auto& p : out.patterns) g[to_string(p.mode)] = p.region_gain;
        j["sensing_region_gain"] = g;
    }
    if (out.music) {
        j["music_mode"] = to_string(out.music_mode);
        json est = json::array();
        for (double e : out.music->estimates) est.push_back(deg(e));
        j["music_estimates_deg"] = est;
    }
    return j.dump(2) + "\n";
}

void write_outputs(const std::string& dir, const ExperimentConfig& cfg, const RunOutput& out,
                   const RunOptions& opts) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    auto write = [&](const std::string& name, auto&& body) {
        const auto path = std::filesystem::path(dir) / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
        body(f);
        f.flush();
        if (!f) throw IoError("write to '" + path.string() + "' failed");
    };
    write("results.csv", [&](std::ostream& os) { write_results_csv(os, out.rows); });
    if (!out.patterns.empty()) write("beampattern.csv", [&](std::ostream& os) { write_beampattern_csv(os, out.patterns); });
    if (out.music) write("music.csv", [&](std::ostream& os) { write_music_csv(os, *out.music); });
    write("run_metadata.json", [&](std::ostream& os) { os << metadata_json(cfg, out, opts); });
}

}  // namespace fimisac::experiment
