#include "seqctl/noise.hpp"

#include "seqctl/errors.hpp"
#include "seqctl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace seqctl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::InvalidInput, msg);
}

}  // namespace

const char* to_string(NoiseKind kind) noexcept {
    switch (kind) {
    case NoiseKind::OrnsteinUhlenbeck: return "ornstein_uhlenbeck";
    case NoiseKind::RandomTelegraph: return "random_telegraph";
    case NoiseKind::HarmonicMixture: return "harmonic_mixture";
    }
    return "unknown";
}

NoiseModel NoiseModel::ornstein_uhlenbeck(double sigma, double tau_c) {
    require(std::isfinite(sigma) && sigma >= 0.0, "ornstein_uhlenbeck: sigma must be >= 0");
    require(std::isfinite(tau_c) && tau_c > 0.0, "ornstein_uhlenbeck: tau_c must be > 0");
    return NoiseModel(OrnsteinUhlenbeckParams{sigma, tau_c});
}

NoiseModel NoiseModel::random_telegraph(double amplitude, double rate) {
    require(std::isfinite(amplitude) && amplitude >= 0.0, "random_telegraph: amplitude must be >= 0");
    require(std::isfinite(rate) && rate > 0.0, "random_telegraph: rate must be > 0");
    return NoiseModel(RandomTelegraphParams{amplitude, rate});
}

NoiseModel NoiseModel::harmonic_mixture(std::vector<HarmonicComponent> components) {
    require(!components.empty(), "harmonic_mixture: at least one component required");
    for (const auto& c : components) {
        require(std::isfinite(c.amplitude) && std::isfinite(c.omega) && c.omega >= 0.0,
                "harmonic_mixture: component amplitude must be finite and omega >= 0");
    }
    return NoiseModel(HarmonicMixtureParams{std::move(components)});
}

NoiseKind NoiseModel::kind() const noexcept {
    return std::visit(overloaded{
                          [](const OrnsteinUhlenbeckParams&) { return NoiseKind::OrnsteinUhlenbeck; },
                          [](const RandomTelegraphParams&) { return NoiseKind::RandomTelegraph; },
                          [](const HarmonicMixtureParams&) { return NoiseKind::HarmonicMixture; },
                      },
                      params_);
}

bool NoiseModel::has_smooth_spectrum() const noexcept { return kind() != NoiseKind::HarmonicMixture; }

std::pair<double, double> NoiseModel::lorentzian() const noexcept {
    if (const auto* ou = std::get_if<OrnsteinUhlenbeckParams>(&params_)) {
        return {ou->sigma * ou->sigma, ou->tau_c};
    }
    if (const auto* rtn = std::get_if<RandomTelegraphParams>(&params_)) {
        return {rtn->amplitude * rtn->amplitude, 1.0 / (2.0 * rtn->rate)};
    }
    return {0.0, 0.0};
}

double NoiseModel::variance() const noexcept { return autocorrelation(0.0); }

double NoiseModel::autocorrelation(double lag) const noexcept {
    if (const auto* mix = std::get_if<HarmonicMixtureParams>(&params_)) {
        double g = 0.0;
        for (const auto& c : mix->components) g += 0.5 * c.amplitude * c.amplitude * std::cos(c.omega * lag);
        return g;
    }
    const auto [v, tau] = lorentzian();
    return v * std::exp(-std::abs(lag) / tau);
}

double NoiseModel::spectral_density(double omega) const noexcept {
    if (!has_smooth_spectrum()) return 0.0;
    const auto [v, tau] = lorentzian();
    const double x = omega * tau;
    return v * tau / (std::numbers::pi * (1.0 + x * x));
}

std::vector<SpectralLine> NoiseModel::spectral_lines() const {
    std::vector<SpectralLine> lines;
    if (const auto* mix = std::get_if<HarmonicMixtureParams>(&params_)) {
        for (const auto& c : mix->components) lines.push_back({c.omega, 0.25 * c.amplitude * c.amplitude});
    }
    return lines;
}

double NoiseModel::correlation_time() const noexcept {
    if (!has_smooth_spectrum()) return std::numeric_limits<double>::infinity();
    return lorentzian().second;
}

double NoiseModel::double_antiderivative(double u) const noexcept {
    u = std::abs(u);
    if (const auto* mix = std::get_if<HarmonicMixtureParams>(&params_)) {
        double k = 0.0;
        for (const auto& c : mix->components) {
            const double a2 = 0.5 * c.amplitude * c.amplitude;
            if (c.omega == 0.0) {
                k += a2 * 0.5 * u * u;
            } else {
                const double s = std::sin(0.5 * c.omega * u);
                k += a2 * 2.0 * s * s / (c.omega * c.omega);
            }
        }
        return k;
    }
    const auto [v, tau] = lorentzian();
    const double x = u / tau;
    return v * tau * tau * (std::expm1(-x) + x);
}

double NoiseModel::tail_inverse_square_moment(double omega0) const {
    require(omega0 > 0.0, "tail_inverse_square_moment: omega0 must be > 0");
    if (!has_smooth_spectrum()) {
        double tail = 0.0;
        for (const auto& line : spectral_lines()) {
            if (line.omega >= omega0) tail += line.weight / (line.omega * line.omega);
        }
        return tail;
    }
    const auto [v, tau] = lorentzian();
    // int_{w0}^inf 1/(w^2 (1 + w^2 tau^2)) dw = tau * (x - atan x), x = 1/(tau w0)
    const double x = 1.0 / (tau * omega0);
    double diff;
    if (x < 1e-2) {
        const double x2 = x * x;
        diff = x * x2 * (1.0 / 3.0 - x2 * (1.0 / 5.0 - x2 / 7.0));
    } else {
        diff = x - std::atan(x);
    }
    return v * tau / std::numbers::pi * tau * diff;
}

NoisePath::NoisePath(double step, std::vector<double> values) : step_(step), values_(std::move(values)) {
    require(std::isfinite(step) && step > 0.0, "NoisePath: step must be > 0");
    require(values_.size() >= 2, "NoisePath: at least two samples required");
}

double NoisePath::at(double t) const {
    const double T = duration();
    const double tol = 1e-9 * std::max(1.0, T);
    if (!(t >= -tol && t <= T + tol)) {
        throw Error(ErrorCode::Coverage, "NoisePath: time " + std::to_string(t) + " outside [0, " +
                                             std::to_string(T) + "]");
    }
    const double x = std::clamp(t / step_, 0.0, static_cast<double>(values_.size() - 1));
    auto i = static_cast<std::size_t>(x);
    if (i >= values_.size() - 1) return values_.back();
    const double frac = x - static_cast<double>(i);
    return values_[i] + frac * (values_[i + 1] - values_[i]);
}

std::size_t grid_intervals(double duration, double dt) {
    require(std::isfinite(duration) && duration > 0.0, "time grid: duration must be > 0");
    require(std::isfinite(dt) && dt > 0.0, "time grid: dt must be > 0");
    const double ratio = duration / dt;
    auto n = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio));
    return std::max<std::size_t>(n, 1);
}

NoisePath sample_path_seeded(const NoiseModel& model, double duration, double dt, std::uint64_t seed) {
    require(std::isfinite(duration) && duration > 0.0, "sample_path: T must be > 0");
    require(std::isfinite(dt) && dt > 0.0, "sample_path: dt must be > 0");
    require(dt <= duration * (1.0 + 1e-12), "sample_path: dt must not exceed T");

    const std::size_t n = grid_intervals(duration, dt);
    const double step = duration / static_cast<double>(n);
    std::vector<double> values(n + 1, 0.0);
    std::mt19937_64 rng(seed);

    std::visit(overloaded{
                   [&](const OrnsteinUhlenbeckParams& p) {
                       if (p.sigma == 0.0) return;
                       std::normal_distribution<double> normal(0.0, 1.0);
                       const double decay = std::exp(-step / p.tau_c);
                       const double kick = p.sigma * std::sqrt(-std::expm1(-2.0 * step / p.tau_c));
                       values[0] = p.sigma * normal(rng);
                       for (std::size_t k = 0; k < n; ++k) values[k + 1] = values[k] * decay + kick * normal(rng);
                   },
                   [&](const RandomTelegraphParams& p) {
                       std::bernoulli_distribution coin(0.5);
                       std::exponential_distribution<double> wait(p.rate);
                       double sign = coin(rng) ? 1.0 : -1.0;
                       double next_flip = wait(rng);
                       for (std::size_t k = 0; k <= n; ++k) {
                           const double t = step * static_cast<double>(k);
                           while (next_flip <= t) {
                               sign = -sign;
                               next_flip += wait(rng);
                           }
                           values[k] = sign * p.amplitude;
                       }
                   },
                   [&](const HarmonicMixtureParams& p) {
                       std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
                       std::vector<double> phases;
                       phases.reserve(p.components.size());
                       for (std::size_t c = 0; c < p.components.size(); ++c) phases.push_back(phase(rng));
                       for (std::size_t k = 0; k <= n; ++k) {
                           const double t = step * static_cast<double>(k);
                           double e = 0.0;
                           for (std::size_t c = 0; c < p.components.size(); ++c) {
                               e += p.components[c].amplitude * std::cos(p.components[c].omega * t + phases[c]);
                           }
                           values[k] = e;
                       }
                   },
               },
               model.params());
    return NoisePath(step, std::move(values));
}

NoisePath sample_path(const NoiseModel& model, double duration, double dt, std::uint64_t trajectory_index,
                      std::uint64_t master_seed) {
    return sample_path_seeded(model, duration, dt, sub_seed(master_seed, Stream::NoisePath, trajectory_index));
}

}  // namespace seqctl
