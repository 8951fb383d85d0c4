#pragma once

// Configuration ingestion, named presets, runs, sweeps, and calibration.
// Configurations are flat key = value documents with explicit unit
// suffixes so that printed-vs-angular frequency ambiguity is settled in
// the file, not in the code.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stirapsim/feasibility.hpp"
#include "stirapsim/model_builder.hpp"
#include "stirapsim/observables.hpp"
#include "stirapsim/propagator.hpp"
#include "stirapsim/units.hpp"

namespace stirapsim {

class ConfigParseError : public std::runtime_error {
  public:
    ConfigParseError(const std::string& what, int line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    int line;
};

class ValidationError : public std::runtime_error {
  public:
    ValidationError(const std::string& what, std::string key_name = "")
        : std::runtime_error(what), key(std::move(key_name)) {}
    std::string key;
};

enum class Unit { none, hz, khz, mhz, ghz, um, mm, m, m_per_s, us, ns };

enum class Provenance { preset, file, override_, defaulted };

struct ConfigEntry {
    bool numeric = false;
    double num = 0.0;
    Unit unit = Unit::none;
    std::string text;  // trimmed raw value for string-valued keys
    Provenance provenance = Provenance::file;

    bool operator==(const ConfigEntry& other) const {
        return numeric == other.numeric && num == other.num && unit == other.unit &&
               text == other.text;
    }
};

/// Flat, validated parameter document.  Keys are checked against a fixed
/// schema; unknown keys are rejected by name.
class ScenarioConfig {
  public:
    static ScenarioConfig from_file(const std::filesystem::path& path);
    static ScenarioConfig from_text(const std::string& text);
    /// Named presets: fig2_sodium_two_mode, fig3_sodium_cascade,
    /// cyanogen_sketch (aliases fig2/fig3/cyanogen).
    static ScenarioConfig preset(const std::string& name);
    static std::vector<std::pair<std::string, std::string>> preset_catalog();

    /// Parses "key = value" (value may carry a unit) and stores it.
    void set(const std::string& key, const std::string& value,
             Provenance prov = Provenance::override_);

    /// Fills defaults, derives dependent keys, and checks ranges; throws
    /// ValidationError.  Idempotent.
    void validate();

    std::string serialize() const;

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    bool defaulted(const std::string& key) const;

    // Typed access (validated keys only).
    double rad_us(const std::string& key) const;   // rates and angular frequencies
    double length_um(const std::string& key) const;
    double velocity(const std::string& key) const;  // um/us
    double time_us(const std::string& key) const;
    double number(const std::string& key) const;
    std::string token(const std::string& key) const;

    Scheme scheme() const;
    units::RateConvention convention() const;

    bool operator==(const ScenarioConfig& other) const;

    // Model-parameter assembly.
    TwoModeParams two_mode_params() const;
    OneModeParams one_mode_params() const;   // single-node runs
    CascadeParams cascade_params() const;
    FeasibilityInput feasibility_input() const;

    const std::map<std::string, ConfigEntry>& entries() const { return entries_; }

  private:
    std::map<std::string, ConfigEntry> entries_;
    bool validated_ = false;
    void parse_stream(const std::string& text);
    ConfigEntry& require(const std::string& key) ;
    const ConfigEntry& require(const std::string& key) const;
};

struct RunSummary {
    std::string scheme;
    std::string initial;
    std::vector<std::string> mode_names;
    std::vector<double> emission_probability;  // P_i per mode
    std::vector<double> peak_time;             // us
    std::vector<double> symmetry;
    double transfer_probability = 0.0;  // P of the driven branch, or cascaded fidelity
    double fidelity = std::numeric_limits<double>::quiet_NaN();  // cascaded only
    double dark_overlap_min = std::numeric_limits<double>::quiet_NaN();
    double bookkeeping = 0.0;  // emission accounting defect
    std::vector<ConditionReport> conditions;
    RepetitionRate repetition;
    std::optional<RecoilRatio> recoil;
    double calibrated_d_um = 0.0;
    double calibrated_omega0_rad_us = 0.0;
    double calibrated_sync_offset_us = 0.0;
    IntegratorStats stats;
    std::vector<std::string> defaulted_keys;
};

struct RunResult {
    StateSpace space;
    Trajectory trajectory;
    std::vector<EmissionRecord> emission;  // one per reported mode
    std::vector<double> dark_overlap;      // empty for cascaded runs
    RunSummary summary;
};

/// Executes one scenario.  Deterministic: identical configs give
/// identical trajectories and identical CSV bytes.
RunResult run(const ScenarioConfig& config);

void write_timeseries_csv(const std::filesystem::path& path, const RunResult& result);
void write_summary(const std::filesystem::path& path, const RunSummary& summary);
std::string summary_to_text(const RunSummary& summary);

struct SweepRow {
    double value = 0.0;
    RunSummary summary;
};

struct SweepTable {
    std::string parameter;
    std::vector<SweepRow> rows;
};

/// One run per grid value (grid values in the parameter's canonical
/// unit), parallel across rows, deterministic result order.
SweepTable sweep(const ScenarioConfig& config, const std::string& parameter,
                 const std::vector<double>& grid, int jobs = 1);

/// Built-in grids: eta_scale {1, 1/2, 1/4, 1/8}; kappa_prime
/// {0, k/4, k/2, k, 2k} in the kappa key's canonical unit.
std::vector<double> builtin_grid(const ScenarioConfig& config, const std::string& parameter);

void write_sweep_csv(const std::filesystem::path& path, const SweepTable& table);

struct CalibrationResult {
    ScenarioConfig config;
    double objective = 0.0;
    int evaluations = 0;
};

/// Deterministic coordinate-descent maximization of the target metric
/// ("p_min", "p1", "p2", "fidelity", or "auto") over any subset of
/// {d, omega0, sync_offset} within documented bounds.
CalibrationResult calibrate(const ScenarioConfig& config,
                            const std::vector<std::string>& free_params,
                            const std::string& target = "auto");

}  // namespace stirapsim
