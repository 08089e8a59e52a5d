#pragma once

#include "seqctl/config.hpp"
#include "seqctl/dd_filter.hpp"
#include "seqctl/fo_reconstruct.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace seqctl {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
    unsigned workers = 1;
};

struct EmittedFile {
    std::string name;  // relative to the output directory
    std::string sha256;
    std::size_t bytes;
};

struct RunManifest {
    std::string config_digest;
    std::string version;
    std::string timestamp;  // UTC, ISO 8601
    std::uint64_t master_seed;
    RunMode mode;
    std::filesystem::path directory;
    std::vector<EmittedFile> files;  // manifest.json itself excluded
};

/// Runs the configured pipeline and writes its artifacts plus manifest.json.
/// On failure nothing written by this call is left behind.
RunManifest run(const ExperimentConfig& config, const RunOptions& options = {});

// One row of chi.csv. chi_mc and its error are NaN when Monte Carlo was
// disabled or the sequence saturated.
struct ChiRow {
    int sequence_index;
    double chi_time;
    double chi_freq;
    double chi_mc;
    double stderr_mc;
};

struct SenseOutput {
    std::vector<PulseSequence> sequences;
    std::vector<FilterFunction> filters;
    std::vector<FrequencyDomainChi> frequency;
    std::vector<ChiRow> chis;
};

SenseOutput sense(const SensingConfig& sensing, const NoiseModel& model, std::uint64_t master_seed,
                  unsigned workers = 1);

// Filters only; reconstruct mode rebuilds them from the sensing block.
std::vector<FilterFunction> build_filters(const SensingConfig& sensing);

// Band overlaps for the reconstruction from chi rows, in filter order. The
// physical chi integrates S |Y|^2 over both half-axes, so the overlap with
// F = c |Y|^2 on [0, wc] is c * chi.
ReconstructionInput reconstruction_input(const std::vector<ChiRow>& rows, ChiSource source, double normalization);

// 17 significant digits, enough to round-trip any double; "nan" / "inf" for specials.
std::string format_double(double x);

std::string chi_csv(const std::vector<ChiRow>& rows);
std::vector<ChiRow> parse_chi_csv(const std::string& text);

}  // namespace seqctl
