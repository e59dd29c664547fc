// SPDX-License-Identifier: Apache-2.0
//
// Sweep runner behind the command-line tool: configuration, presets, result
// rows and CSV/JSON writers.

#pragma once

#include "fimisac/ao.hpp"
#include "fimisac/model.hpp"
#include "fimisac/sensing.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fimisac::experiment {

enum class SweepVar { RateThreshold, PMaxDbm, Users, MorphRange };
const char* to_string(SweepVar v);  // R_th, P_max_dBm, K, morph_range
std::optional<SweepVar> parse_sweep_var(const std::string& s);

struct ExperimentConfig {
    SystemConfig base;
    std::vector<TargetPrior> targets;
    SweepVar sweep = SweepVar::RateThreshold;
    std::vector<double> values;  // morph_range values are in wavelengths
    std::vector<AoMode> modes;
    int n_channel_draws = 20;
    int n_mc_crb = 2000;
    bool per_column_sensing = false;
    bool beampattern = false;
    bool music = false;
    double grid_step_deg = 0.1;
    std::string preset;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

// Preset names: fig2, fig3, fig4, fig4-morph, fig5.
std::vector<std::string> preset_names();
std::string preset_json(const std::string& name);

// JSON text -> config. A "preset" key (or `preset` argument) supplies defaults that the
// remaining keys override. Throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text, const std::string& preset = "");
ExperimentConfig load_config(const std::string& path, const std::string& preset = "");
ExperimentConfig preset_config(const std::string& name);

// Base config with one sweep value applied.
SystemConfig apply_sweep(const SystemConfig& base, SweepVar var, double value);

// Human-readable summary with derived quantities.
std::string validate_report(const ExperimentConfig& cfg);

// Scenario of draw `draw`: depends on (seed, draw) only, so every sweep point sees the same users.
std::uint64_t draw_seed(std::uint64_t seed, int draw);
std::uint64_t crb_seed(std::uint64_t seed, int draw, int target);

struct ResultRow {
    std::string sweep_var;
    double sweep_value = 0.0;
    AoMode mode = AoMode::RA;
    int draw = 0;
    double avg_crb = 0.0;
    double crb_stderr = 0.0;
    double avg_fisher = 0.0;
    int outer_iters = 0;
    bool feasible = false;
    double runtime_s = 0.0;
    // Not written to CSV.
    double max_kkt = 0.0;
    bool trace_monotone = true;
    bool rank_one = true;
};

struct ModePattern {
    AoMode mode;
    Beampattern pattern;
    double region_gain = 0.0;
};

struct RunOutput {
    std::vector<ResultRow> rows;
    std::vector<ModePattern> patterns;  // first sweep value, draw 0
    std::optional<MusicResult> music;
    AoMode music_mode = AoMode::Joint;
    int feasible_runs = 0;
};

struct RunOptions {
    int workers = 1;
    bool timing = false;
};

RunOutput run(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Surrogate trace check used for outer_iters rows: non-decreasing within a relative slack.
bool trace_non_decreasing(const std::vector<double>& trace, double rel_slack = 1e-6);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_beampattern_csv(std::ostream& os, const std::vector<ModePattern>& patterns);
void write_music_csv(std::ostream& os, const MusicResult& music);
std::string metadata_json(const ExperimentConfig& cfg, const RunOutput& out, const RunOptions& opts);

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Writes results.csv, run_metadata.json and, when enabled, beampattern.csv / music.csv.
void write_outputs(const std::string& dir, const ExperimentConfig& cfg, const RunOutput& out,
                   const RunOptions& opts);

}  // namespace fimisac::experiment
