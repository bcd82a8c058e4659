#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixlab/experiments.hpp"

namespace mixlab {

inline constexpr std::string_view kExperimentNames[] = {
    "static-cutoff", "double-cutoff", "joint",   "marginal",  "marginal-crosscheck",
    "annealed",      "weight-lln",    "diagnostics", "q-estimate",
};

/// Builds a degree sequence from generator text:
///   regular:d               every vertex has out-degree d (DCM: in-degree d too)
///   mix:d1xk1,d2xk2,...     k_i vertices of out-degree d_i; for DCM the
///                           in-degrees are an independent shuffle of the
///                           same multiset, drawn from `seed`
///   eulerian:d1xk1,...      as mix, with d_x^- = d_x^+
///   d1,d2,...               explicit out-degrees; DCM needs `in_degrees`
/// `n` is required for regular:d and must agree with the generator otherwise.
DegreeSequence generate_degrees(const std::string& text, ModelKind model, std::optional<std::size_t> n,
                                std::uint64_t seed, const std::optional<std::string>& in_degrees = std::nullopt);

/// Loads {model, out_degrees, in_degrees?}.
DegreeSequence load_degrees_file(const std::filesystem::path& path);

struct RunSpec {
    std::string experiment;
    ExperimentConfig config;
    std::filesystem::path output_dir = ".";
    /// 0 means auto.
    unsigned threads = 0;
    std::vector<std::size_t> t_grid;
    std::size_t traj_samples = 10000;
    std::size_t schedule_samples = 1000;
    std::size_t switch_time = 0;
    /// Trajectory length for weight-lln; 0 selects floor(T_ent).
    std::size_t walk_length = 0;
    double lln_epsilon = 0.1;
    /// Fully resolved values, echoed to stdout and the metadata file.
    nlohmann::json resolved;
};

/// Defaults, then the JSON config file (keys are the snake_case flag names),
/// then command-line flags. `args` excludes the program name. A `--config`
/// flag inside `args` takes precedence over `config_file`.
RunSpec parse_run_spec(const std::vector<std::string>& args,
                       const std::optional<std::filesystem::path>& config_file = std::nullopt);

struct RunOutcome {
    int exit_code = 0;
    std::filesystem::path csv_path;
    std::filesystem::path json_path;
    std::string summary;
};

/// Executes the experiment and writes <name>.csv and <name>.json atomically.
/// Exit code 0 on success, 2 when stationary solves failed to converge, 1 on
/// any other error.
RunOutcome run(const RunSpec& spec);

}  // namespace mixlab
