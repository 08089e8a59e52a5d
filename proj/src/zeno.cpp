#include "seqctl/zeno.hpp"

#include "seqctl/errors.hpp"
#include "seqctl/parallel.hpp"
#include "seqctl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>

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

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

std::uint64_t fnv1a(const std::vector<double>& xs) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : xs) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &x, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

const char* to_string(IntervalKind kind) noexcept {
    switch (kind) {
    case IntervalKind::Fixed: return "fixed";
    case IntervalKind::Uniform: return "uniform";
    case IntervalKind::Exponential: return "exponential";
    case IntervalKind::Bimodal: return "bimodal";
    case IntervalKind::Empirical: return "empirical";
    }
    return "unknown";
}

const char* to_string(QMode mode) noexcept {
    return mode == QMode::SecondOrder ? "second_order" : "exact_two_point";
}

// ---------------------------------------------------------------------------

IntervalDistribution IntervalDistribution::fixed(double tau) {
    require(positive(tau), "intervals.fixed: tau must be > 0");
    return IntervalDistribution(Fixed{tau});
}

IntervalDistribution IntervalDistribution::uniform(double tau_min, double tau_max) {
    require(positive(tau_min), "intervals.uniform: tau_min must be > 0");
    require(std::isfinite(tau_max) && tau_max > tau_min, "intervals.uniform: tau_max must exceed tau_min");
    return IntervalDistribution(Uniform{tau_min, tau_max});
}

IntervalDistribution IntervalDistribution::exponential(double mean) {
    require(positive(mean), "intervals.exponential: mean must be > 0");
    return IntervalDistribution(Exponential{mean});
}

IntervalDistribution IntervalDistribution::bimodal(double tau_a, double tau_b, double weight) {
    require(positive(tau_a) && positive(tau_b), "intervals.bimodal: tau_a and tau_b must be > 0");
    require(weight >= 0.0 && weight <= 1.0, "intervals.bimodal: weight must lie in [0, 1]");
    return IntervalDistribution(Bimodal{tau_a, tau_b, weight});
}

IntervalDistribution IntervalDistribution::empirical(std::vector<double> samples) {
    require(!samples.empty(), "intervals.empirical: sample list is empty");
    for (double s : samples) require(positive(s), "intervals.empirical: samples must be > 0");
    return IntervalDistribution(Empirical{std::move(samples)});
}

IntervalKind IntervalDistribution::kind() const noexcept {
    return static_cast<IntervalKind>(params_.index());
}

double IntervalDistribution::mean() const noexcept {
    return std::visit(overloaded{
                          [](const Fixed& p) { return p.tau; },
                          [](const Uniform& p) { return 0.5 * (p.tau_min + p.tau_max); },
                          [](const Exponential& p) { return p.mean; },
                          [](const Bimodal& p) { return p.weight * p.tau_a + (1.0 - p.weight) * p.tau_b; },
                          [](const Empirical& p) {
                              return std::accumulate(p.samples.begin(), p.samples.end(), 0.0) /
                                     static_cast<double>(p.samples.size());
                          },
                      },
                      params_);
}

double IntervalDistribution::sample(std::mt19937_64& rng) const {
    return std::visit(overloaded{
                          [](const Fixed& p) { return p.tau; },
                          [&](const Uniform& p) {
                              return std::uniform_real_distribution<double>(p.tau_min, p.tau_max)(rng);
                          },
                          [&](const Exponential& p) {
                              std::exponential_distribution<double> d(1.0 / p.mean);
                              double tau = 0.0;
                              while (!(tau > 0.0)) tau = d(rng);
                              return tau;
                          },
                          [&](const Bimodal& p) {
                              return std::bernoulli_distribution(p.weight)(rng) ? p.tau_a : p.tau_b;
                          },
                          [&](const Empirical& p) {
                              std::uniform_int_distribution<std::size_t> pick(0, p.samples.size() - 1);
                              return p.samples[pick(rng)];
                          },
                      },
                      params_);
}

std::vector<IntervalDistribution::Node> IntervalDistribution::quadrature(std::size_t resolution) const {
    require(resolution >= 1, "quadrature: resolution must be >= 1");
    const double k = static_cast<double>(resolution);
    std::vector<Node> nodes;
    std::visit(overloaded{
                   [&](const Fixed& p) { nodes.push_back({p.tau, 1.0}); },
                   [&](const Uniform& p) {
                       for (std::size_t i = 0; i < resolution; ++i) {
                           const double u = (static_cast<double>(i) + 0.5) / k;
                           nodes.push_back({p.tau_min + u * (p.tau_max - p.tau_min), 1.0 / k});
                       }
                   },
                   [&](const Exponential& p) {
                       for (std::size_t i = 0; i < resolution; ++i) {
                           const double u = (static_cast<double>(i) + 0.5) / k;
                           nodes.push_back({-p.mean * std::log1p(-u), 1.0 / k});
                       }
                   },
                   [&](const Bimodal& p) {
                       if (p.weight > 0.0) nodes.push_back({p.tau_a, p.weight});
                       if (p.weight < 1.0) nodes.push_back({p.tau_b, 1.0 - p.weight});
                   },
                   [&](const Empirical& p) {
                       const double w = 1.0 / static_cast<double>(p.samples.size());
                       for (double s : p.samples) nodes.push_back({s, w});
                   },
               },
               params_);
    return nodes;
}

// ---------------------------------------------------------------------------

void ZenoRun::validate() const {
    require(m >= 1, "zeno run: m must be >= 1");
    require(n_traj >= 1, "zeno run: n_traj must be >= 1");
    require(positive(dt), "zeno run: dt must be > 0");
    require(projector.is_projective(), "zeno run: projector must be projective");
    require(projector.dim() == ham.dim() && initial_state.dim() == ham.dim(), "zeno run: dimension mismatch");
    const double support = initial_state.expectation(projector.kraus());
    require(std::abs(support - 1.0) <= 1e-10, "zeno run: initial state must lie in the projector subspace");
}

TrajectoryResult simulate_trajectory(const ZenoRun& run, std::size_t index) {
    auto rng = make_rng(run.master_seed, Stream::Intervals, index);
    std::vector<double> taus(run.m);
    for (auto& tau : taus) tau = run.intervals.sample(rng);
    const double t_fin = std::accumulate(taus.begin(), taus.end(), 0.0);

    std::optional<NoisePath> path;
    if (run.ham.has_noise()) {
        path = sample_path(run.ham.noise()->model, t_fin, std::min(run.dt, t_fin), index, run.master_seed);
    }
    const NoisePath* path_ptr = path ? &*path : nullptr;

    TrajectoryResult result{0.0, true, {}, fnv1a(taus), t_fin};
    result.factors.reserve(run.m);
    DensityMatrix rho = run.initial_state;
    double t = 0.0;
    for (double tau : taus) {
        const double t_next = t + tau;
        rho = propagate(rho, run.ham, t, t_next, run.dt, path_ptr);
        try {
            auto outcome = apply_measurement(rho, run.projector);
            result.factors.push_back(outcome.probability);
            result.log_survival += std::log(outcome.probability);
            rho = std::move(outcome.state);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ZeroProbability) throw;
            result.factors.push_back(0.0);
            result.log_survival = -std::numeric_limits<double>::infinity();
            result.finite = false;
            break;
        }
        t = t_next;
    }
    return result;
}

SurvivalSummary summarize(const std::vector<TrajectoryResult>& trajectories) {
    SurvivalSummary s;
    std::vector<double> xs;
    xs.reserve(trajectories.size());
    for (const auto& tr : trajectories) {
        if (tr.finite) xs.push_back(tr.log_survival);
        else ++s.vanished_count;
    }
    s.finite_count = xs.size();
    if (xs.empty()) return s;

    // Sorting first makes every reduction independent of trajectory order.
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.variance = xs.size() > 1 ? ss / (n - 1.0) : 0.0;

    const double lo = xs.front();
    const double range = xs.back() - lo;
    if (range == 0.0) {
        // Degenerate ensemble: report it exactly rather than via rounded sums.
        s.mean = lo;
        s.variance = 0.0;
        s.mode = lo;
        s.histogram = Histogram{lo, 0.0, {xs.size()}};
        return s;
    }
    const double iqr = quantile(xs, 0.75) - quantile(xs, 0.25);
    double width = 2.0 * iqr / std::cbrt(n);
    if (!(width > 0.0)) width = range / std::ceil(std::sqrt(n));
    const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil(range / width)));
    Histogram h{lo, width, std::vector<std::size_t>(bins, 0)};
    for (double x : xs) {
        auto bin = static_cast<std::size_t>(std::floor((x - lo) / width));
        ++h.counts[std::min(bin, bins - 1)];
    }
    const auto densest = static_cast<std::size_t>(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
    s.mode = h.center(densest);
    s.histogram = std::move(h);
    return s;
}

SurvivalRecord run_zeno(const ZenoRun& run, unsigned workers) {
    run.validate();
    SurvivalRecord record;
    record.trajectories.resize(run.n_traj);
    parallel_for(run.n_traj, workers, [&](std::size_t k) { record.trajectories[k] = simulate_trajectory(run, k); });
    record.summary = summarize(record.trajectories);
    return record;
}

// ---------------------------------------------------------------------------

LdPrediction ld_predict(const ZenoRun& run, std::size_t time_grid_points, QMode mode, std::size_t tau_resolution) {
    run.validate();
    require(time_grid_points >= 1, "ld_predict: time_grid_points must be >= 1");

    const auto nodes = run.intervals.quadrature(tau_resolution);
    double tau_max = 0.0;
    for (const auto& node : nodes) tau_max = std::max(tau_max, node.tau);

    LdPrediction pred;
    pred.q_mode = mode;
    pred.t_fin = static_cast<double>(run.m) * run.intervals.mean();
    const double cell = pred.t_fin / static_cast<double>(time_grid_points);

    std::optional<NoisePath> path;
    if (run.ham.has_noise()) {
        const double horizon = pred.t_fin + (mode == QMode::ExactTwoPoint ? tau_max : 0.0);
        path = sample_path_seeded(run.ham.noise()->model, horizon, std::min(run.dt, horizon),
                                  sub_seed(run.master_seed, Stream::LdReference, 0));
    }
    const NoisePath* path_ptr = path ? &*path : nullptr;
    auto field_at = [&](double t) { return path_ptr ? path_ptr->at(t) : 0.0; };

    const CMatrix& proj = run.projector.kraus();
    const HamiltonianSpec zeno = run.ham.projected(proj);

    std::vector<DensityMatrix> states;
    states.reserve(time_grid_points);
    DensityMatrix rho = run.initial_state;
    double t_prev = 0.0;
    for (std::size_t i = 0; i < time_grid_points; ++i) {
        const double t = (static_cast<double>(i) + 0.5) * cell;
        rho = propagate(rho, zeno, t_prev, t, run.dt, path_ptr);
        pred.times.push_back(t);
        pred.eta_grid.push_back(eta(rho, run.ham.at(t, field_at(t)), run.projector));
        if (mode == QMode::ExactTwoPoint) states.push_back(rho);
        t_prev = t;
    }

    const double eta_weight = 1.0 / static_cast<double>(time_grid_points);
    double integral = 0.0;
    if (mode == QMode::SecondOrder) {
        for (const auto& node : nodes) {
            double inner = 0.0;
            for (double e : pred.eta_grid) {
                const double q = 1.0 - e * e * node.tau * node.tau;
                if (!(q > 0.0)) {
                    throw Error(ErrorCode::ExpansionDomain,
                                "ld_predict: second-order q = 1 - eta^2 tau^2 <= 0 at tau = " + std::to_string(node.tau) +
                                    ", eta = " + std::to_string(e) +
                                    "; shrink the tau support or use q_mode exact_two_point");
                }
                inner += std::log(q);
            }
            integral += node.weight * eta_weight * inner;
        }
    } else {
        for (const auto& node : nodes) {
            double inner = 0.0;
            CMatrix u_fixed;
            if (run.ham.is_time_independent()) u_fixed = propagator(run.ham, 0.0, node.tau, run.dt);
            for (std::size_t i = 0; i < states.size(); ++i) {
                const double t = pred.times[i];
                const CMatrix u = run.ham.is_time_independent() ? u_fixed
                                                                : propagator(run.ham, t, t + node.tau, run.dt, path_ptr);
                const CMatrix evolved = u * states[i].matrix() * u.adjoint();
                const double q = (proj * evolved).trace().real();
                if (!(q >= kZeroProbability)) {
                    throw Error(ErrorCode::ZeroProbability,
                                "ld_predict: two-point survival vanishes at tau = " + std::to_string(node.tau));
                }
                inner += std::log(std::min(q, 1.0));
            }
            integral += node.weight * eta_weight * inner;
        }
    }
    pred.log_p_star = static_cast<double>(run.m) * integral;
    pred.p_star = std::exp(pred.log_p_star);
    return pred;
}

LdComparison compare_ld(const SurvivalRecord& record, const LdPrediction& prediction) {
    const auto& s = record.summary;
    if (s.finite_count < 100) {
        throw Error(ErrorCode::InsufficientData,
                    "compare_ld: need >= 100 finite trajectories, have " + std::to_string(s.finite_count));
    }
    LdComparison c;
    c.empirical_mode = s.mode;
    c.log_p_star = prediction.log_p_star;
    c.difference = s.mode - prediction.log_p_star;
    const double sd = std::sqrt(s.variance);
    c.normalized_difference = sd > 0.0 ? c.difference / sd
                              : (c.difference == 0.0 ? 0.0 : std::copysign(INFINITY, c.difference));
    c.relative_difference = prediction.log_p_star != 0.0 ? std::abs(c.difference) / std::abs(prediction.log_p_star)
                            : (c.difference == 0.0 ? 0.0 : INFINITY);
    c.finite_trajectories = s.finite_count;
    return c;
}

std::string hex_digest(std::uint64_t digest) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

}  // namespace seqctl
