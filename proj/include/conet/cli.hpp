#pragma once

// Configuration-driven front end: config parsing with presets, output
// writers, and the command dispatcher behind the `conet` executable.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conet/analysis.hpp"
#include "conet/dynamics.hpp"

namespace conet::cli {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "conet 1.0.0";

/// The configuration is malformed: bad JSON, unknown key, missing or mistyped field.
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct Preset {
    std::string name;
    std::string description;
    Json config;
};

const std::vector<Preset>& presets();
/// Throws ConfigError for unknown names.
const Preset& find_preset(std::string_view name);

/// Command-line overrides applied on top of the merged config.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<std::size_t> eta_stride;
};

struct OutputConfig {
    bool trajectory = true;
    bool audit = true;
    bool summary = true;
    /// Emit eta every eta_stride-th sample; 0 disables eta columns.
    std::size_t eta_stride = 10;
};

struct StudyGates {
    std::optional<std::pair<double, double>> slope;
    bool within_bounds = false;
    bool monotone = false;
    std::optional<double> mass_observable;
    /// A failing gate turns into exit status 1.
    bool required = false;
};

struct StudyConfig {
    std::vector<double> epsilons;
    bool well_prepared = true;
    std::vector<std::size_t> counts;
    GraphLimitRecipe recipe;
    StudyGates gates;
};

struct RunConfig {
    /// Fully resolved configuration (defaults applied), echoed into every output.
    Json resolved;
    SystemSpec spec;
    MassVector rho0;
    WeightMatrix eta0;
    IntegratorConfig integrator;
    bool use_picard = false;
    PicardConfig picard;
    OutputConfig output;
    std::uint64_t seed = 0;
    std::size_t probes = 64;
    /// Direct contraction constants; bypasses estimation in `constants`.
    std::optional<ContractionConstants> contraction;
    std::optional<StudyConfig> study;
};

/// Reads a JSON config file; parse errors name the line and column.
Json read_config_file(const std::filesystem::path& path);

/// Expands a "preset" key by merge-patching the config over the named preset.
Json expand_presets(const Json& config);

/// Validates and builds the run. `study_kind` ("slow", "fast", "graph-limit")
/// selects how the "study" section is read; empty means the section is ignored.
RunConfig parse_config(const Json& config, const Overrides& overrides, const std::string& study_kind = "");

/// Shortest round-trip decimal spelling.
std::string format_double(double value);

/// Columns t, rho_1..rho_n and, every eta_stride samples, eta_i_j row-major.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj, std::size_t eta_stride);
void write_json(const std::filesystem::path& path, const Json& doc);

/// Runs one command line; returns the process exit status (0, 1 or 2).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conet::cli
