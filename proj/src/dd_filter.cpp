#include "seqctl/dd_filter.hpp"

#include "seqctl/errors.hpp"
#include "seqctl/parallel.hpp"
#include "seqctl/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace seqctl {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::InvalidInput, msg);
}

double sinc(double x) {
    if (std::abs(x) < 1e-6) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

}  // namespace

PulseSequence::PulseSequence(double duration, std::vector<double> pulse_times, int label)
    : duration_(duration), pulse_times_(std::move(pulse_times)), label_(label) {
    require(std::isfinite(duration_) && duration_ > 0.0, "PulseSequence: duration must be > 0");
    for (std::size_t k = 0; k < pulse_times_.size(); ++k) {
        const double t = pulse_times_[k];
        require(std::isfinite(t) && t > 0.0 && t < duration_, "PulseSequence: pulse times must lie in (0, T)");
        require(k == 0 || t > pulse_times_[k - 1], "PulseSequence: pulse times must be strictly increasing");
    }
}

PulseSequence make_equidistant_sequence(int n, int count, double omega_max, double duration) {
    require(count >= 1 && n >= 1 && n <= count, "make_equidistant_sequence: need 1 <= n <= N");
    require(std::isfinite(omega_max) && omega_max > 0.0, "make_equidistant_sequence: omega_max must be > 0");
    require(std::isfinite(duration) && duration > 0.0, "make_equidistant_sequence: T must be > 0");
    std::vector<double> times;
    const double omega_n = omega_max * static_cast<double>(n - 1) / static_cast<double>(count);
    if (omega_n > 0.0) {
        for (long k = 1;; ++k) {
            const double t = static_cast<double>(2 * k - 1) * std::numbers::pi / (2.0 * omega_n);
            if (t >= duration) break;
            times.push_back(t);
        }
    }
    return PulseSequence(duration, std::move(times), n);
}

double ModulationFunction::operator()(double t) const {
    auto it = std::upper_bound(breakpoints.begin() + 1, breakpoints.end() - 1, t);
    const auto seg = static_cast<std::size_t>(it - (breakpoints.begin() + 1));
    return static_cast<double>(signs[std::min(seg, signs.size() - 1)]);
}

ModulationFunction modulation(const PulseSequence& seq) {
    ModulationFunction y;
    y.breakpoints.reserve(seq.pulse_count() + 2);
    y.breakpoints.push_back(0.0);
    for (double t : seq.pulse_times()) y.breakpoints.push_back(t);
    y.breakpoints.push_back(seq.duration());
    int sign = 1;
    for (std::size_t j = 0; j + 1 < y.breakpoints.size(); ++j) {
        y.signs.push_back(sign);
        sign = -sign;
    }
    return y;
}

std::complex<double> fourier_modulation(const ModulationFunction& y, double omega) {
    // Each segment [a, b] contributes s (b - a) sinc(w (b - a) / 2) exp(-i w (a + b) / 2).
    std::complex<double> total(0.0, 0.0);
    for (std::size_t j = 0; j < y.segments(); ++j) {
        const double a = y.breakpoints[j];
        const double b = y.breakpoints[j + 1];
        const double width = b - a;
        const double mid = 0.5 * (a + b);
        const double amp = static_cast<double>(y.signs[j]) * width * sinc(0.5 * omega * width);
        total += amp * std::complex<double>(std::cos(omega * mid), -std::sin(omega * mid));
    }
    return total;
}

FrequencyGrid::FrequencyGrid(double omega_c, std::size_t points) : omega_c_(omega_c), points_(points) {
    require(std::isfinite(omega_c) && omega_c > 0.0, "FrequencyGrid: omega_c must be > 0");
    require(points >= 3, "FrequencyGrid: at least three points required");
}

std::vector<double> FrequencyGrid::nodes() const {
    std::vector<double> w(points_);
    for (std::size_t i = 0; i < points_; ++i) w[i] = omega(i);
    return w;
}

FilterFunction filter_function(const PulseSequence& seq, const FrequencyGrid& grid, double normalization) {
    require(std::isfinite(normalization) && normalization > 0.0, "filter_function: normalization must be > 0");
    const ModulationFunction y = modulation(seq);
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = normalization * std::norm(fourier_modulation(y, grid.omega(i)));
    return FilterFunction{grid, std::move(values), normalization, seq.label()};
}

DecoherenceValue chi_time_domain(const PulseSequence& seq, const NoiseModel& model) {
    const ModulationFunction y = modulation(seq);
    const auto& b = y.breakpoints;
    auto rect = [&](std::size_t j, std::size_t k) {
        return model.double_antiderivative(b[j + 1] - b[k]) - model.double_antiderivative(b[j] - b[k]) -
               model.double_antiderivative(b[j + 1] - b[k + 1]) + model.double_antiderivative(b[j] - b[k + 1]);
    };
    double total = 0.0;
    for (std::size_t j = 0; j < y.segments(); ++j) {
        total += rect(j, j);
        for (std::size_t k = j + 1; k < y.segments(); ++k) {
            total += 2.0 * static_cast<double>(y.signs[j] * y.signs[k]) * rect(j, k);
        }
    }
    return DecoherenceValue{0.5 * total, seq.label(), ChiProvenance::TimeDomain};
}

FrequencyDomainChi chi_frequency_domain(const PulseSequence& seq, const NoiseModel& model,
                                        const FrequencyIntegration& opts) {
    require(std::isfinite(opts.omega_c) && opts.omega_c > 0.0, "chi_frequency_domain: omega_c must be > 0");
    require(opts.grid_points >= 3, "chi_frequency_domain: grid needs at least three points");
    require(opts.truncation_factor >= 1.0, "chi_frequency_domain: truncation factor must be >= 1");
    require(opts.normalization > 0.0, "chi_frequency_domain: normalization must be > 0");

    const ModulationFunction y = modulation(seq);
    const double c = opts.normalization;
    const double omega_trunc = opts.truncation_factor * opts.omega_c;
    const double k = static_cast<double>(seq.pulse_count());

    if (!model.has_smooth_spectrum()) {
        double chi = 0.0;
        for (const auto& line : model.spectral_lines()) {
            chi += 2.0 * line.weight * c * std::norm(fourier_modulation(y, line.omega));
        }
        return {{chi, seq.label(), ChiProvenance::FrequencyDomain}, omega_trunc, 0.0, 0.0};
    }

    // |Y|^2 oscillates in omega with period 2 pi / T; keep >= 16 nodes per period.
    const double grid_step = opts.omega_c / static_cast<double>(opts.grid_points - 1);
    const double step_cap = std::min(grid_step, std::numbers::pi / (8.0 * seq.duration()));
    const auto intervals = static_cast<std::size_t>(std::ceil(omega_trunc / step_cap));
    const double h = omega_trunc / static_cast<double>(intervals);
    const std::vector<double> w = simpson_weights(intervals + 1, h);

    double body = 0.0;
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double omega = h * static_cast<double>(i);
        body += w[i] * model.spectral_density(omega) * c * std::norm(fourier_modulation(y, omega));
    }
    body *= 2.0;

    // Beyond omega_trunc |Y|^2 averages (2 + 4k) / w^2 and never exceeds (2k + 2)^2 / w^2.
    const double moment = model.tail_inverse_square_moment(omega_trunc);
    const double tail_estimate = 2.0 * c * (2.0 + 4.0 * k) * moment;
    const double tail_bound = 2.0 * c * (2.0 * k + 2.0) * (2.0 * k + 2.0) * moment;
    const double chi = body + tail_estimate;
    if (tail_bound > opts.rel_tol * std::abs(chi) + opts.abs_tol) {
        throw AccuracyError("chi_frequency_domain: tail bound " + std::to_string(tail_bound) +
                                " exceeds tolerance for sequence " + std::to_string(seq.label()),
                            chi, tail_bound);
    }
    return {{chi, seq.label(), ChiProvenance::FrequencyDomain}, omega_trunc, tail_estimate, tail_bound};
}

double accumulated_phase(const ModulationFunction& y, const NoisePath& path) {
    const double T = y.breakpoints.back();
    if (std::abs(path.duration() - T) > 1e-9 * std::max(1.0, T)) {
        throw Error(ErrorCode::Coverage, "accumulated_phase: noise path duration differs from sequence duration");
    }
    const auto& e = path.values();
    const std::size_t last_segment = y.segments() - 1;
    std::size_t seg = 0;
    double phi = 0.0;
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
        const double a = path.time(i);
        const double b = path.time(i + 1);
        double left = a;
        double e_left = e[i];
        while (seg < last_segment && y.breakpoints[seg + 1] < b) {
            const double p = y.breakpoints[seg + 1];
            const double e_p = e[i] + (p - a) / (b - a) * (e[i + 1] - e[i]);
            phi += static_cast<double>(y.signs[seg]) * (p - left) * 0.5 * (e_left + e_p);
            left = p;
            e_left = e_p;
            ++seg;
        }
        phi += static_cast<double>(y.signs[seg]) * (b - left) * 0.5 * (e_left + e[i + 1]);
    }
    return phi;
}

std::vector<RamseyEstimate> ramsey_mc_batch(const std::vector<PulseSequence>& seqs, const NoiseModel& model,
                                            const RamseyOptions& opts) {
    require(!seqs.empty(), "ramsey_mc: no sequences");
    require(opts.n_traj >= 100, "ramsey_mc: n_traj must be >= 100");
    require(opts.inversion > 0.0, "ramsey_mc: inversion factor must be > 0");
    const double T = seqs.front().duration();
    for (const auto& s : seqs) require(s.duration() == T, "ramsey_mc: sequences must share one duration");

    std::vector<ModulationFunction> mods;
    mods.reserve(seqs.size());
    for (const auto& s : seqs) mods.push_back(modulation(s));

    const std::size_t n = opts.n_traj;
    const std::size_t m = seqs.size();
    std::vector<double> cos2phi(n * m);
    parallel_for(n, opts.workers, [&](std::size_t traj) {
        const NoisePath path = sample_path(model, T, opts.dt, traj, opts.master_seed);
        for (std::size_t s = 0; s < m; ++s) cos2phi[traj * m + s] = std::cos(2.0 * accumulated_phase(mods[s], path));
    });

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double nd = static_cast<double>(n);
    std::vector<RamseyEstimate> out;
    out.reserve(m);
    for (std::size_t s = 0; s < m; ++s) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += cos2phi[i * m + s];
        const double w = sum / nd;
        RamseyEstimate est{seqs[s].label(), 0.5 * (1.0 - w), w, nan, nan};
        if (w > 0.0) {
            std::vector<double> loo(n);
            bool saturated = false;
            for (std::size_t i = 0; i < n; ++i) {
                const double wi = (sum - cos2phi[i * m + s]) / (nd - 1.0);
                if (!(wi > 0.0)) {
                    saturated = true;
                    break;
                }
                loo[i] = -opts.inversion * std::log(wi);
            }
            if (!saturated) {
                double mean = 0.0;
                for (double v : loo) mean += v;
                mean /= nd;
                double ss = 0.0;
                for (double v : loo) ss += (v - mean) * (v - mean);
                est.chi = -opts.inversion * std::log(w);
                est.standard_error = std::sqrt((nd - 1.0) / nd * ss);
            }
        }
        out.push_back(est);
    }
    return out;
}

RamseyEstimate ramsey_mc(const PulseSequence& seq, const NoiseModel& model, const RamseyOptions& opts) {
    RamseyEstimate est = ramsey_mc_batch({seq}, model, opts).front();
    if (std::isnan(est.chi)) {
        throw SaturationError("ramsey_mc: coherence W = " + std::to_string(est.coherence) +
                                  " too small to invert (p = " + std::to_string(est.transition_probability) + ")",
                              est.transition_probability, est.coherence);
    }
    return est;
}

}  // namespace seqctl
