#pragma once

#include "seqctl/dd_filter.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace seqctl {

/// N >= 2 filter functions on one shared frequency grid. All inner products
/// use the composite Simpson rule on that grid.
class FilterSet {
public:
    explicit FilterSet(std::vector<FilterFunction> filters);

    std::size_t size() const noexcept { return filters_.size(); }
    const FrequencyGrid& grid() const noexcept { return filters_.front().grid; }
    const std::vector<FilterFunction>& filters() const noexcept { return filters_; }
    // N x G matrix of filter values, row n = F_n on the grid.
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }

    // int_0^wc f g dw under the shared rule.
    double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;

private:
    std::vector<FilterFunction> filters_;
    Eigen::MatrixXd values_;
    Eigen::VectorXd weights_;
};

inline constexpr double kRankEpsilon = 1e-10;

struct OverlapSystem {
    Eigen::MatrixXd overlap;      // A_nl
    Eigen::VectorXd eigenvalues;  // descending
    Eigen::MatrixXd basis;        // V, row n is the eigenvector of eigenvalues(n)
    std::size_t retained;         // K: modes with lambda > rank_epsilon * lambda_max
    double rank_epsilon;

    double condition_number() const { return eigenvalues(0) / eigenvalues(static_cast<Eigen::Index>(retained) - 1); }
};

/// Overlap matrix and its symmetric eigensystem. Eigenvector signs are fixed
/// so that the largest-magnitude component of each row is positive.
OverlapSystem overlap_matrix(const FilterSet& set, double rank_epsilon = kRankEpsilon,
                             double absolute_floor = 1e-300);

/// Retained transformed filters, K x G; row n = lambda_n^{-1/2} sum_l V_nl F_l.
Eigen::MatrixXd transformed_filters(const OverlapSystem& sys, const FilterSet& set);

// A single mode; throws ErrorCode::Rank for a discarded (or absent) mode.
Eigen::VectorXd transformed_filter(const OverlapSystem& sys, const FilterSet& set, std::size_t mode);

/// chi~_n = lambda_n^{-1/2} sum_l V_nl chi_l over retained modes. The chis are
/// one-sided band overlaps int_0^wc S F_l dw, aligned with the filter order.
Eigen::VectorXd transformed_coeffs(const OverlapSystem& sys, const std::vector<double>& chis);
Eigen::VectorXd transformed_coeffs(const OverlapSystem& sys, const FilterSet& set,
                                   const std::vector<DecoherenceValue>& chis);

// Band overlaps int_0^wc S F_n dw of a spectrum sampled on the set's grid.
std::vector<double> forward_model_chis(const FilterSet& set, const Eigen::VectorXd& spectrum);

// A decoherence value integrates S F over the whole real line; the band
// overlap used by the reconstruction is the one-sided half of it.
inline double band_overlap_from_chi(double chi) { return 0.5 * chi; }

struct ReconstructionInput {
    std::vector<double> chis;                      // band overlaps, filter order
    std::optional<std::vector<double>> chi_errors; // standard errors of chis
    std::optional<Eigen::VectorXd> truth;          // ground-truth S on the grid
    std::pair<double, double> error_band{0.0, 1.0};  // fractions of omega_c
};

struct Reconstruction {
    Eigen::MatrixXd transformed_filters;  // K x G
    Eigen::VectorXd transformed_coeffs;   // K
    Eigen::VectorXd estimate;             // S~ on the grid
    Eigen::MatrixXd mode_contributions;   // K x G, row n = chi~_n F~_n
    std::size_t retained;
    double condition_number;
    std::optional<Eigen::VectorXd> coeff_errors;
    std::optional<Eigen::VectorXd> estimate_errors;
    std::optional<double> relative_l2_error;  // on error_band, when truth given
};

Reconstruction reconstruct(const OverlapSystem& sys, const FilterSet& set, const ReconstructionInput& input);

/// Relative discrete L2 distance of `estimate` from `truth` over the grid
/// nodes with omega in [lo * omega_c, hi * omega_c].
double relative_l2_error(const FrequencyGrid& grid, const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth,
                         std::pair<double, double> band);

}  // namespace seqctl
