#pragma once

#include "seqctl/quantum_core.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace seqctl {

enum class IntervalKind { Fixed, Uniform, Exponential, Bimodal, Empirical };

const char* to_string(IntervalKind kind) noexcept;

/// i.i.d. law of the waiting time between two measurements.
class IntervalDistribution {
public:
    struct Fixed { double tau; };
    struct Uniform { double tau_min, tau_max; };
    struct Exponential { double mean; };
    // Two-point mixture: tau_a with probability weight, tau_b otherwise.
    struct Bimodal { double tau_a, tau_b, weight; };
    struct Empirical { std::vector<double> samples; };
    using Params = std::variant<Fixed, Uniform, Exponential, Bimodal, Empirical>;

    static IntervalDistribution fixed(double tau);
    static IntervalDistribution uniform(double tau_min, double tau_max);
    static IntervalDistribution exponential(double mean);
    static IntervalDistribution bimodal(double tau_a, double tau_b, double weight);
    static IntervalDistribution empirical(std::vector<double> samples);

    IntervalKind kind() const noexcept;
    const Params& params() const noexcept { return params_; }
    double mean() const noexcept;
    double sample(std::mt19937_64& rng) const;

    struct Node {
        double tau;
        double weight;
    };
    // Discrete law for integrals against p(tau): exact atoms for discrete
    // kinds, `resolution` quantile midpoints for continuous ones.
    std::vector<Node> quadrature(std::size_t resolution = 2048) const;

private:
    explicit IntervalDistribution(Params p) : params_(std::move(p)) {}
    Params params_;
};

struct ZenoRun {
    HamiltonianSpec ham;
    MeasurementOperator projector;
    DensityMatrix initial_state;
    IntervalDistribution intervals;
    std::size_t m = 1;
    std::size_t n_traj = 1;
    double dt = 1e-2;
    std::uint64_t master_seed = 0;

    // Throws ErrorCode::InvalidInput naming the violated field.
    void validate() const;
};

struct TrajectoryResult {
    double log_survival;         // sum_j ln p_j; -inf when a branch vanished
    bool finite;
    std::vector<double> factors; // conditional survival p_j, up to the failure
    std::uint64_t tau_digest;    // FNV-1a of the drawn interval sequence
    double duration;             // sum of the drawn intervals
};

struct Histogram {
    double lower = 0.0;
    double width = 0.0;
    std::vector<std::size_t> counts;

    double center(std::size_t bin) const { return lower + (static_cast<double>(bin) + 0.5) * width; }
};

struct SurvivalSummary {
    std::size_t finite_count = 0;
    std::size_t vanished_count = 0;
    double mean = 0.0;
    double variance = 0.0;
    double mode = 0.0;  // densest Freedman-Diaconis bin centre
    Histogram histogram;
};

struct SurvivalRecord {
    std::vector<TrajectoryResult> trajectories;
    SurvivalSummary summary;
};

TrajectoryResult simulate_trajectory(const ZenoRun& run, std::size_t index);

SurvivalRecord run_zeno(const ZenoRun& run, unsigned workers = 1);

// Order-independent statistics of the finite log-survival values.
SurvivalSummary summarize(const std::vector<TrajectoryResult>& trajectories);

enum class QMode { SecondOrder, ExactTwoPoint };

const char* to_string(QMode mode) noexcept;

struct LdPrediction {
    double p_star;
    double log_p_star;
    double t_fin;
    std::vector<double> times;  // eta sample times (cell midpoints on [0, t_fin])
    std::vector<double> eta_grid;
    QMode q_mode;
};

/// Large-deviation estimate of the most probable survival probability:
/// exp(m * sum_tau sum_eta p(tau) p(eta) ln q(tau, eta)), with p(eta) the
/// empirical law of eta(t) along the Zeno-propagated state.
LdPrediction ld_predict(const ZenoRun& run, std::size_t time_grid_points, QMode mode = QMode::SecondOrder,
                        std::size_t tau_resolution = 2048);

struct LdComparison {
    double empirical_mode;
    double log_p_star;
    double difference;             // mode - ln p*
    double normalized_difference;  // difference / empirical standard deviation
    double relative_difference;    // |difference| / |ln p*|
    std::size_t finite_trajectories;
};

LdComparison compare_ld(const SurvivalRecord& record, const LdPrediction& prediction);

std::string hex_digest(std::uint64_t digest);

}  // namespace seqctl
