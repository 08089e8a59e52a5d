#pragma once

#include "seqctl/noise.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

namespace seqctl {

// F = c_F |Y|^2. kFilterNormalization pairs with the library's Fourier
// convention so that the time- and frequency-domain decoherence agree;
// kFilterNormalizationAlt is the 4/pi prefactor quoted in the DD literature.
inline constexpr double kFilterNormalization = 0.5;
inline constexpr double kFilterNormalizationAlt = 4.0 / std::numbers::pi;

// chi_mc = -kRamseyInversion * ln W with W = <cos 2 phi>. For Gaussian phase
// W = exp(-2 <phi^2>) and <phi^2> = 2 chi, hence 1/4.
inline constexpr double kRamseyInversion = 0.25;

/// Ideal instantaneous pi-pulses on [0, T].
class PulseSequence {
public:
    PulseSequence(double duration, std::vector<double> pulse_times, int label = 0);

    double duration() const noexcept { return duration_; }
    const std::vector<double>& pulse_times() const noexcept { return pulse_times_; }
    std::size_t pulse_count() const noexcept { return pulse_times_.size(); }
    int label() const noexcept { return label_; }

private:
    double duration_;
    std::vector<double> pulse_times_;
    int label_;
};

/// Pulses at the zeros of cos(omega_n t), omega_n = omega_max (n - 1) / N,
/// strictly inside (0, T). n = 1 is free evolution.
PulseSequence make_equidistant_sequence(int n, int count, double omega_max, double duration);

/// Piecewise-constant y(t): signs[j] on [breakpoints[j], breakpoints[j+1]).
struct ModulationFunction {
    std::vector<double> breakpoints;
    std::vector<int> signs;

    double operator()(double t) const;
    std::size_t segments() const noexcept { return signs.size(); }
};

ModulationFunction modulation(const PulseSequence& seq);

// Y(w) = int_0^T y(t) exp(-i w t) dt in closed form.
std::complex<double> fourier_modulation(const ModulationFunction& y, double omega);

/// Uniform grid on [0, omega_c].
class FrequencyGrid {
public:
    FrequencyGrid(double omega_c, std::size_t points);

    double omega_c() const noexcept { return omega_c_; }
    std::size_t size() const noexcept { return points_; }
    double step() const noexcept { return omega_c_ / static_cast<double>(points_ - 1); }
    double omega(std::size_t i) const noexcept { return step() * static_cast<double>(i); }
    std::vector<double> nodes() const;

    bool operator==(const FrequencyGrid&) const = default;

private:
    double omega_c_;
    std::size_t points_;
};

struct FilterFunction {
    FrequencyGrid grid;
    std::vector<double> values;
    double normalization;
    int label;
};

FilterFunction filter_function(const PulseSequence& seq, const FrequencyGrid& grid,
                               double normalization = kFilterNormalization);

enum class ChiProvenance { TimeDomain, FrequencyDomain, MonteCarlo, ForwardModel };

struct DecoherenceValue {
    double chi;
    int label;
    ChiProvenance provenance;
    double standard_error = 0.0;
};

/// chi = 1/2 int int y(t') y(t'') g(t' - t'') dt' dt'', summed over segment
/// rectangles with the closed-form double antiderivative of g.
DecoherenceValue chi_time_domain(const PulseSequence& seq, const NoiseModel& model);

struct FrequencyIntegration {
    double omega_c;
    std::size_t grid_points = 2048;
    double truncation_factor = 8.0;  // omega_trunc = factor * omega_c
    double normalization = kFilterNormalization;
    // Tail bound must stay below rel_tol * chi + abs_tol.
    double rel_tol = 2e-2;
    double abs_tol = 1e-12;
};

struct FrequencyDomainChi {
    DecoherenceValue value;
    double omega_trunc;
    double tail_estimate;  // included in value.chi
    double tail_bound;     // declared bound on the truncated tail
};

/// chi = int S(w) F(w) dw over the real line, as twice the one-sided
/// integral: Simpson up to omega_trunc plus an analytic Lorentzian tail.
/// Line spectra are summed exactly.
FrequencyDomainChi chi_frequency_domain(const PulseSequence& seq, const NoiseModel& model,
                                        const FrequencyIntegration& opts);

struct RamseyOptions {
    std::size_t n_traj = 10000;
    double dt = 1e-3;
    std::uint64_t master_seed = 0;
    double inversion = kRamseyInversion;
    unsigned workers = 1;
};

struct RamseyEstimate {
    int label;
    double transition_probability;  // p = (1 - W) / 2
    double coherence;               // W = <cos 2 phi>
    double chi;
    double standard_error;          // jackknife
};

// Accumulated phase phi = int_0^T y(t) E(t) dt, trapezoid rule on the path
// grid with linear interpolation at pulse times.
double accumulated_phase(const ModulationFunction& y, const NoisePath& path);

/// Monte Carlo Ramsey/DD experiment. Throws SaturationError when W <= 0.
RamseyEstimate ramsey_mc(const PulseSequence& seq, const NoiseModel& model, const RamseyOptions& opts);

/// Same experiment for several sequences driven by common noise paths
/// (trajectory k uses path k for every sequence). All sequences must share
/// one duration. A saturated sequence (W <= 0) comes back with NaN chi and
/// standard error instead of throwing.
std::vector<RamseyEstimate> ramsey_mc_batch(const std::vector<PulseSequence>& seqs, const NoiseModel& model,
                                            const RamseyOptions& opts);

}  // namespace seqctl
