#pragma once

#include "seqctl/dd_filter.hpp"
#include "seqctl/noise.hpp"
#include "seqctl/quantum_core.hpp"
#include "seqctl/zeno.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

namespace seqctl {

enum class RunMode { Zeno, Sense, Reconstruct, End2End };

const char* to_string(RunMode mode) noexcept;

// Which decoherence estimate feeds the reconstruction.
enum class ChiSource { TimeDomain, FrequencyDomain, MonteCarlo };

const char* to_string(ChiSource source) noexcept;

// lambda(t) = amplitude * cos(omega * t + phase).
struct ControlConfig {
    CMatrix op;
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
};

struct SystemConfig {
    int dim = 2;
    CMatrix h0;
    CMatrix projector;
    CMatrix initial_state;
    std::optional<ControlConfig> control;
    std::optional<CMatrix> noise_coupling;  // requires a noise block
};

struct ScheduleConfig {
    IntervalDistribution intervals;
    std::size_t m = 1;
    std::size_t n_traj = 1;
    double dt = 1e-2;
    std::size_t ld_time_grid = 256;
    QMode q_mode = QMode::SecondOrder;
    std::size_t tau_resolution = 2048;
};

struct SensingConfig {
    int n = 20;
    double omega_max = 80.0;
    double omega_c = 160.0;
    double duration = 10.0;
    std::size_t grid_points = 2049;          // filter / reconstruction grid
    double normalization = kFilterNormalization;
    std::size_t freq_points = 2048;          // chi_frequency_domain base grid
    double truncation_factor = 8.0;
    bool monte_carlo = true;
    std::size_t n_traj = 10000;
    double dt = 1e-3;
};

struct ReconstructConfig {
    std::optional<std::filesystem::path> chi_csv;  // relative to the config file
    ChiSource source = ChiSource::TimeDomain;
    double rank_epsilon = 1e-10;
    std::pair<double, double> error_band{0.1, 0.9};
};

struct OutputConfig {
    std::filesystem::path directory = "out";
    bool csv = true;
    bool json = true;
};

struct ExperimentConfig {
    RunMode mode = RunMode::Zeno;
    std::uint64_t master_seed = 0;
    std::optional<SystemConfig> system;
    std::optional<NoiseModel> noise;
    std::optional<ScheduleConfig> schedule;
    std::optional<SensingConfig> sensing;
    std::optional<ReconstructConfig> reconstruct;
    OutputConfig output;
    std::string digest;  // SHA-256 of the config text
};

/// Parses and fully validates a JSON config. Every failure is collected and
/// reported together in a ValidationError; unknown keys are failures.
ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig parse_config(const std::filesystem::path& path);

// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

// Zeno run assembled from the system/noise/schedule blocks.
ZenoRun make_zeno_run(const ExperimentConfig& config);

}  // namespace seqctl
