#include "seqctl/fo_reconstruct.hpp"

#include "seqctl/errors.hpp"
#include "seqctl/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace seqctl {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::InvalidInput, msg);
}

}  // namespace

FilterSet::FilterSet(std::vector<FilterFunction> filters) : filters_(std::move(filters)) {
    require(filters_.size() >= 2, "FilterSet: at least two filters required");
    const FrequencyGrid& grid = filters_.front().grid;
    const auto g = static_cast<Eigen::Index>(grid.size());
    values_.resize(static_cast<Eigen::Index>(filters_.size()), g);
    for (std::size_t n = 0; n < filters_.size(); ++n) {
        const auto& f = filters_[n];
        require(f.grid == grid, "FilterSet: filters must share one frequency grid");
        require(f.values.size() == grid.size(), "FilterSet: filter length differs from grid size");
        for (Eigen::Index i = 0; i < g; ++i) {
            const double v = f.values[static_cast<std::size_t>(i)];
            require(std::isfinite(v) && v >= 0.0, "FilterSet: filter values must be finite and >= 0");
            values_(static_cast<Eigen::Index>(n), i) = v;
        }
    }
    const std::vector<double> w = simpson_weights(grid.size(), grid.step());
    weights_ = Eigen::Map<const Eigen::VectorXd>(w.data(), g);
}

double FilterSet::inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
    return (f.array() * g.array() * weights_.array()).sum();
}

OverlapSystem overlap_matrix(const FilterSet& set, double rank_epsilon, double absolute_floor) {
    require(rank_epsilon >= 0.0 && rank_epsilon < 1.0, "overlap_matrix: rank_epsilon must be in [0, 1)");
    const auto n = static_cast<Eigen::Index>(set.size());
    const Eigen::MatrixXd& f = set.values();
    const Eigen::VectorXd& w = set.weights();

    Eigen::MatrixXd a(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = r; c < n; ++c) {
            a(r, c) = (f.row(r).array() * f.row(c).array() * w.transpose().array()).sum();
            a(c, r) = a(r, c);
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::NumericalConsistency, "overlap_matrix: eigensolver failed");
    }
    OverlapSystem sys;
    sys.overlap = a;
    sys.rank_epsilon = rank_epsilon;
    sys.eigenvalues.resize(n);
    sys.basis.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = n - 1 - k;  // ascending -> descending
        sys.eigenvalues(k) = es.eigenvalues()(src);
        Eigen::VectorXd v = es.eigenvectors().col(src);
        Eigen::Index pivot = 0;
        v.cwiseAbs().maxCoeff(&pivot);
        if (v(pivot) < 0.0) v = -v;
        sys.basis.row(k) = v.transpose();
    }

    const double lambda_max = sys.eigenvalues(0);
    if (!(lambda_max > absolute_floor)) {
        throw Error(ErrorCode::DegenerateSet, "overlap_matrix: all eigenvalues below the absolute floor");
    }
    if (sys.eigenvalues(n - 1) < -1e-10 * lambda_max) {
        throw Error(ErrorCode::NumericalConsistency, "overlap_matrix: overlap matrix is not positive semidefinite");
    }
    std::size_t kept = 0;
    while (kept < static_cast<std::size_t>(n) && sys.eigenvalues(static_cast<Eigen::Index>(kept)) > rank_epsilon * lambda_max) ++kept;
    sys.retained = kept;
    return sys;
}

Eigen::MatrixXd transformed_filters(const OverlapSystem& sys, const FilterSet& set) {
    require(static_cast<Eigen::Index>(set.size()) == sys.basis.rows(), "transformed_filters: set/system size mismatch");
    const auto k = static_cast<Eigen::Index>(sys.retained);
    const Eigen::VectorXd scale = sys.eigenvalues.head(k).cwiseSqrt().cwiseInverse();
    return scale.asDiagonal() * (sys.basis.topRows(k) * set.values());
}

Eigen::VectorXd transformed_filter(const OverlapSystem& sys, const FilterSet& set, std::size_t mode) {
    if (mode >= sys.retained) {
        throw Error(ErrorCode::Rank, "transformed_filter: mode " + std::to_string(mode) + " is not retained (K = " +
                                         std::to_string(sys.retained) + ")");
    }
    const auto row = static_cast<Eigen::Index>(mode);
    return (sys.basis.row(row) * set.values()).transpose() / std::sqrt(sys.eigenvalues(row));
}

Eigen::VectorXd transformed_coeffs(const OverlapSystem& sys, const std::vector<double>& chis) {
    if (static_cast<Eigen::Index>(chis.size()) != sys.basis.cols()) {
        throw Error(ErrorCode::Alignment, "transformed_coeffs: expected " + std::to_string(sys.basis.cols()) +
                                              " chis, got " + std::to_string(chis.size()));
    }
    const auto k = static_cast<Eigen::Index>(sys.retained);
    const Eigen::Map<const Eigen::VectorXd> x(chis.data(), static_cast<Eigen::Index>(chis.size()));
    const Eigen::VectorXd scale = sys.eigenvalues.head(k).cwiseSqrt().cwiseInverse();
    return scale.asDiagonal() * (sys.basis.topRows(k) * x);
}

Eigen::VectorXd transformed_coeffs(const OverlapSystem& sys, const FilterSet& set,
                                   const std::vector<DecoherenceValue>& chis) {
    if (chis.size() != set.size()) {
        throw Error(ErrorCode::Alignment, "transformed_coeffs: one decoherence value per filter required");
    }
    std::vector<double> x;
    x.reserve(chis.size());
    for (std::size_t n = 0; n < chis.size(); ++n) {
        if (chis[n].label != set.filters()[n].label) {
            throw Error(ErrorCode::Alignment, "transformed_coeffs: decoherence value " + std::to_string(n) +
                                                  " belongs to sequence " + std::to_string(chis[n].label) +
                                                  ", filter is " + std::to_string(set.filters()[n].label));
        }
        x.push_back(chis[n].chi);
    }
    return transformed_coeffs(sys, x);
}

std::vector<double> forward_model_chis(const FilterSet& set, const Eigen::VectorXd& spectrum) {
    require(spectrum.size() == static_cast<Eigen::Index>(set.grid().size()), "forward_model_chis: spectrum length mismatch");
    const Eigen::VectorXd weighted = spectrum.cwiseProduct(set.weights());
    const Eigen::VectorXd chis = set.values() * weighted;
    return {chis.data(), chis.data() + chis.size()};
}

double relative_l2_error(const FrequencyGrid& grid, const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth,
                         std::pair<double, double> band) {
    require(estimate.size() == truth.size() && truth.size() == static_cast<Eigen::Index>(grid.size()),
            "relative_l2_error: length mismatch");
    require(band.first >= 0.0 && band.second <= 1.0 && band.first < band.second,
            "relative_l2_error: band must satisfy 0 <= lo < hi <= 1");
    const double lo = band.first * grid.omega_c();
    const double hi = band.second * grid.omega_c();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid.omega(i);
        if (w < lo || w > hi) continue;
        const auto j = static_cast<Eigen::Index>(i);
        num += (estimate(j) - truth(j)) * (estimate(j) - truth(j));
        den += truth(j) * truth(j);
    }
    require(den > 0.0, "relative_l2_error: ground truth vanishes on the band");
    return std::sqrt(num / den);
}

Reconstruction reconstruct(const OverlapSystem& sys, const FilterSet& set, const ReconstructionInput& input) {
    Reconstruction out;
    out.retained = sys.retained;
    out.condition_number = sys.condition_number();
    out.transformed_filters = transformed_filters(sys, set);
    out.transformed_coeffs = transformed_coeffs(sys, input.chis);
    out.mode_contributions = out.transformed_coeffs.asDiagonal() * out.transformed_filters;
    out.estimate = out.mode_contributions.colwise().sum().transpose();

    if (input.chi_errors) {
        const auto& err = *input.chi_errors;
        if (err.size() != input.chis.size()) throw Error(ErrorCode::Alignment, "reconstruct: one error per chi required");
        const auto k = static_cast<Eigen::Index>(sys.retained);
        const Eigen::Map<const Eigen::VectorXd> sigma(err.data(), static_cast<Eigen::Index>(err.size()));
        const Eigen::VectorXd inv_sqrt = sys.eigenvalues.head(k).cwiseSqrt().cwiseInverse();
        // d chi~ / d chi = diag(lambda^-1/2) V_K, d S~ / d chi = F~^T diag(lambda^-1/2) V_K
        const Eigen::MatrixXd jc = inv_sqrt.asDiagonal() * sys.basis.topRows(k);
        const Eigen::MatrixXd js = out.transformed_filters.transpose() * jc;
        out.coeff_errors = (jc.array().square().matrix() * sigma.array().square().matrix()).cwiseSqrt();
        out.estimate_errors = (js.array().square().matrix() * sigma.array().square().matrix()).cwiseSqrt();
    }
    if (input.truth) {
        out.relative_l2_error = relative_l2_error(set.grid(), out.estimate, *input.truth, input.error_band);
    }
    return out;
}

}  // namespace seqctl
