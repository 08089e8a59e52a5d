#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

namespace seqctl {

enum class NoiseKind { OrnsteinUhlenbeck, RandomTelegraph, HarmonicMixture };

const char* to_string(NoiseKind kind) noexcept;

struct OrnsteinUhlenbeckParams {
    double sigma;  // stationary standard deviation
    double tau_c;  // correlation time
};

struct RandomTelegraphParams {
    double amplitude;
    double rate;  // switching rate gamma
};

struct HarmonicComponent {
    double amplitude;
    double omega;
};

struct HarmonicMixtureParams {
    std::vector<HarmonicComponent> components;
};

// One pair of spectral lines: S contains weight * [delta(w - omega) + delta(w + omega)].
struct SpectralLine {
    double omega;
    double weight;
};

/// A zero-mean stationary classical field E(t).
///
/// Fourier pair used throughout the library:
///   S(w) = (1/2pi) int g(t) exp(-i w t) dt,   g(t) = int S(w) exp(i w t) dw.
/// OU and telegraph noise share the exponential kernel g = v exp(-|t|/tau)
/// and therefore a Lorentzian spectrum; the harmonic mixture has a pure line
/// spectrum and is flagged non-smooth.
class NoiseModel {
public:
    using Params = std::variant<OrnsteinUhlenbeckParams, RandomTelegraphParams, HarmonicMixtureParams>;

    static NoiseModel ornstein_uhlenbeck(double sigma, double tau_c);
    static NoiseModel random_telegraph(double amplitude, double rate);
    static NoiseModel harmonic_mixture(std::vector<HarmonicComponent> components);

    NoiseKind kind() const noexcept;
    const Params& params() const noexcept { return params_; }

    // g(0).
    double variance() const noexcept;
    double autocorrelation(double lag) const noexcept;
    // Continuous part of S(w); zero for the harmonic mixture (see spectral_lines).
    double spectral_density(double omega) const noexcept;
    bool has_smooth_spectrum() const noexcept;
    std::vector<SpectralLine> spectral_lines() const;

    // Decay time of g for the exponential kernels; infinite for harmonic noise.
    double correlation_time() const noexcept;

    // K(u) with K'' = g, K(0) = K'(0) = 0, K even. The integral of g(x - y)
    // over [a,b]x[c,d] is K(b-c) - K(a-c) - K(b-d) + K(a-d).
    double double_antiderivative(double u) const noexcept;

    // int_{omega0}^inf S(w) / w^2 dw, closed form for the Lorentzian kinds.
    // Zero for the harmonic mixture when every line sits below omega0.
    double tail_inverse_square_moment(double omega0) const;

private:
    explicit NoiseModel(Params p) : params_(std::move(p)) {}

    // (v, tau) of the exponential kernel; only valid for smooth kinds.
    std::pair<double, double> lorentzian() const noexcept;

    Params params_;
};

/// One realization of E on the uniform grid t_i = i * step, i = 0..n-1,
/// with (n-1) * step == duration.
class NoisePath {
public:
    NoisePath(double step, std::vector<double> values);

    double step() const noexcept { return step_; }
    double duration() const noexcept { return step_ * static_cast<double>(values_.size() - 1); }
    std::size_t size() const noexcept { return values_.size(); }
    double time(std::size_t i) const noexcept { return step_ * static_cast<double>(i); }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    // Linear interpolation between grid points; t must lie in [0, duration].
    double at(double t) const;

private:
    double step_;
    std::vector<double> values_;
};

// Uniform grid count for covering [0, duration] with spacing no larger than dt.
std::size_t grid_intervals(double duration, double dt);

/// Draws the path of trajectory `trajectory_index`. The result depends only
/// on the arguments, never on call order or thread.
NoisePath sample_path(const NoiseModel& model, double duration, double dt,
                      std::uint64_t trajectory_index, std::uint64_t master_seed);

// Same as sample_path with an explicit sub-seed; used for reserved streams.
NoisePath sample_path_seeded(const NoiseModel& model, double duration, double dt, std::uint64_t seed);

}  // namespace seqctl
