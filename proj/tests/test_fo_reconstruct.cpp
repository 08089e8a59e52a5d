#include "seqctl/fo_reconstruct.hpp"

#include "test_util.hpp"

#include <Eigen/QR>

#include <cmath>
#include <random>

using namespace seqctl;

namespace {

FilterFunction make_filter(const FrequencyGrid& grid, int label, const std::function<double(double)>& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid.omega(i));
    return FilterFunction{grid, v, kFilterNormalization, label};
}

// Independent composite Simpson weights (odd node count).
Eigen::VectorXd simpson(std::size_t points, double h) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(points));
    for (std::size_t i = 0; i < points; ++i) w(static_cast<Eigen::Index>(i)) = (i == 0 || i + 1 == points) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    return w * h / 3.0;
}

std::vector<FilterFunction> dd_filters(const FrequencyGrid& grid, int count, double omega_max, double T) {
    std::vector<FilterFunction> out;
    for (int n = 1; n <= count; ++n) out.push_back(filter_function(make_equidistant_sequence(n, count, omega_max, T), grid));
    return out;
}

std::vector<FilterFunction> gaussian_filters(const FrequencyGrid& grid, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> centre(0.2 * grid.omega_c(), 0.8 * grid.omega_c());
    std::uniform_real_distribution<double> width(0.03 * grid.omega_c(), 0.08 * grid.omega_c());
    std::vector<FilterFunction> out;
    for (int n = 1; n <= count; ++n) {
        const double c = centre(rng), s = width(rng);
        out.push_back(make_filter(grid, n, [=](double w) { return std::exp(-0.5 * (w - c) * (w - c) / (s * s)); }));
    }
    return out;
}

Eigen::VectorXd sampled(const FrequencyGrid& grid, const std::function<double(double)>& f) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) v(static_cast<Eigen::Index>(i)) = f(grid.omega(i));
    return v;
}

Eigen::VectorXd estimate_from_forward_model(const FilterSet& set, const Eigen::VectorXd& s) {
    const OverlapSystem sys = overlap_matrix(set);
    return reconstruct(sys, set, {forward_model_chis(set, s), std::nullopt, std::nullopt, {0.0, 1.0}}).estimate;
}

}  // namespace

TEST(FilterSet, Validation) {
    const FrequencyGrid g(10.0, 101), h(10.0, 201);
    const auto one = make_filter(g, 1, [](double) { return 1.0; });
    EXPECT_SEQCTL_ERROR(FilterSet({one}), ErrorCode::InvalidInput);
    EXPECT_SEQCTL_ERROR(FilterSet({one, make_filter(h, 2, [](double) { return 1.0; })}), ErrorCode::InvalidInput);
    EXPECT_SEQCTL_ERROR(FilterSet({one, make_filter(g, 2, [](double w) { return w - 5.0; })}), ErrorCode::InvalidInput);
    EXPECT_SEQCTL_ERROR(FilterSet({one, make_filter(g, 2, [](double) { return NAN; })}), ErrorCode::InvalidInput);
}

TEST(OverlapMatrix, DuplicateFiltersHaveRankOne) {
    const FrequencyGrid g(20.0, 401);
    const auto f = make_filter(g, 1, [](double w) { return std::exp(-w / 5.0); });
    auto f2 = f;
    f2.label = 2;
    const OverlapSystem sys = overlap_matrix(FilterSet({f, f2}));
    EXPECT_LT(std::abs(sys.eigenvalues(1)) / sys.eigenvalues(0), 1e-10);
    EXPECT_EQ(sys.retained, 1U);
    EXPECT_SEQCTL_ERROR(transformed_filter(sys, FilterSet({f, f2}), 1), ErrorCode::Rank);
}

TEST(OverlapMatrix, DisjointIndicatorsAreDiagonal) {
    const FrequencyGrid g(30.0, 301);
    const FilterSet set({make_filter(g, 1, [](double w) { return w >= 2.0 && w <= 8.0 ? 1.0 : 0.0; }),
                         make_filter(g, 2, [](double w) { return w >= 12.0 && w <= 14.0 ? 2.0 : 0.0; }),
                         make_filter(g, 3, [](double w) { return w >= 20.0 && w <= 29.0 ? 0.5 : 0.0; })});
    const OverlapSystem sys = overlap_matrix(set);
    const Eigen::VectorXd w = simpson(g.size(), g.step());
    for (Eigen::Index n = 0; n < 3; ++n) {
        const Eigen::VectorXd fn = set.values().row(n).transpose();
        EXPECT_NEAR(sys.overlap(n, n), (fn.array().square() * w.array()).sum(), 1e-14);
        for (Eigen::Index l = 0; l < 3; ++l)
            if (l != n) EXPECT_EQ(sys.overlap(n, l), 0.0);
    }

    // F~ = F / sqrt(A_nn) up to sign, and chi~ = chi / sqrt(A_nn); match modes by support.
    const Eigen::MatrixXd ft = transformed_filters(sys, set);
    const std::vector<double> chis{0.4, 1.1, 0.25};
    const Eigen::VectorXd ct = transformed_coeffs(sys, chis);
    for (Eigen::Index mode = 0; mode < 3; ++mode) {
        Eigen::Index src = 0;
        ft.row(mode).cwiseAbs().maxCoeff(&src);
        Eigen::Index n = 0;
        set.values().col(src).maxCoeff(&n);
        const double scale = std::sqrt(sys.overlap(n, n));
        EXPECT_LT((ft.row(mode).cwiseAbs() - set.values().row(n) / scale).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(std::abs(ct(mode)), chis[static_cast<std::size_t>(n)] / scale, 1e-12);
    }
}

// Gaussians vanish at both ends, so trapezoid on a doubled grid is spectrally accurate.
TEST(OverlapMatrix, SimpsonAgreesWithRefinedTrapezoid) {
    const FrequencyGrid coarse(160.0, 2049), fine(160.0, 4097);
    const auto a = overlap_matrix(FilterSet(gaussian_filters(coarse, 6, 8))).overlap;
    const FilterSet fine_set(gaussian_filters(fine, 6, 8));
    Eigen::VectorXd trap = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(fine.size()), fine.step());
    trap(0) *= 0.5;
    trap(trap.size() - 1) *= 0.5;
    const Eigen::MatrixXd b = fine_set.values() * trap.asDiagonal() * fine_set.values().transpose();
    EXPECT_LT((a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(OverlapMatrix, EigensystemInvariants) {
    const FrequencyGrid g(160.0, 2049);
    const FilterSet set(dd_filters(g, 20, 80.0, 10.0));
    const OverlapSystem sys = overlap_matrix(set);
    const double lmax = sys.eigenvalues(0);
    EXPECT_LT((sys.overlap - sys.overlap.transpose()).cwiseAbs().maxCoeff(), 1e-12 * lmax);
    EXPECT_GE(sys.eigenvalues.minCoeff(), -1e-10 * lmax);
    for (Eigen::Index k = 1; k < sys.eigenvalues.size(); ++k) EXPECT_GE(sys.eigenvalues(k - 1), sys.eigenvalues(k));
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(20, 20);
    EXPECT_LT((sys.basis * sys.basis.transpose() - eye).cwiseAbs().maxCoeff(), 1e-10);
    Eigen::MatrixXd d = sys.basis * sys.overlap * sys.basis.transpose();
    d.diagonal() -= sys.eigenvalues;
    EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-8 * lmax);
    EXPECT_GE(sys.condition_number(), 1.0);
}

TEST(OverlapMatrix, DegenerateSet) {
    const FrequencyGrid g(10.0, 11);
    const auto zero = make_filter(g, 1, [](double) { return 0.0; });
    EXPECT_SEQCTL_ERROR(overlap_matrix(FilterSet({zero, zero})), ErrorCode::DegenerateSet);
}

TEST(TransformedFilters, GramIsIdentityForRandomSets) {
    const FrequencyGrid g(60.0, 1201);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<FilterFunction> filters;
        for (int n = 1; n <= 8; ++n) {
            std::vector<double> times;
            for (double t = 0.05 + 0.2 * u(rng); t < 4.0; t += 0.05 + 0.6 * u(rng)) times.push_back(t);
            filters.push_back(filter_function(PulseSequence(4.0, times, n), g));
        }
        const FilterSet set(filters);
        const OverlapSystem sys = overlap_matrix(set);
        const Eigen::MatrixXd ft = transformed_filters(sys, set);
        const Eigen::MatrixXd gram = ft * set.weights().asDiagonal() * ft.transpose();
        const auto k = static_cast<Eigen::Index>(sys.retained);
        EXPECT_LT((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-8);
        for (std::size_t mode = 0; mode < sys.retained; ++mode) {
            EXPECT_LT((transformed_filter(sys, set, mode) - ft.row(static_cast<Eigen::Index>(mode)).transpose())
                          .cwiseAbs()
                          .maxCoeff(),
                      1e-12 * ft.cwiseAbs().maxCoeff());
        }
    }
}

TEST(TransformedCoeffs, ZeroAlignmentAndProjection) {
    const FrequencyGrid g(160.0, 2049);
    const FilterSet set(dd_filters(g, 10, 80.0, 10.0));
    const OverlapSystem sys = overlap_matrix(set);
    EXPECT_EQ(transformed_coeffs(sys, std::vector<double>(10, 0.0)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_SEQCTL_ERROR(transformed_coeffs(sys, std::vector<double>(9, 1.0)), ErrorCode::Alignment);

    std::vector<DecoherenceValue> chis;
    for (int n = 1; n <= 10; ++n) chis.push_back({0.1, n, ChiProvenance::ForwardModel});
    EXPECT_NO_THROW(transformed_coeffs(sys, set, chis));
    std::swap(chis[2], chis[3]);
    EXPECT_SEQCTL_ERROR(transformed_coeffs(sys, set, chis), ErrorCode::Alignment);

    // chi~_n = int S F~_n for forward-model chis
    const auto ou = NoiseModel::ornstein_uhlenbeck(1.0, 1.0);
    const Eigen::VectorXd s = sampled(g, [&](double w) { return ou.spectral_density(w); });
    const Eigen::VectorXd ct = transformed_coeffs(sys, forward_model_chis(set, s));
    const Eigen::MatrixXd ft = transformed_filters(sys, set);
    for (Eigen::Index n = 0; n < ct.size(); ++n) {
        EXPECT_NEAR(ct(n), set.inner(ft.row(n).transpose(), s), 1e-10 * std::max(1.0, std::abs(ct(n))));
    }
}

TEST(Reconstruct, InSpanRecovery) {
    const FrequencyGrid g(160.0, 2049);
    const FilterSet set(dd_filters(g, 20, 80.0, 10.0));
    const Eigen::VectorXd s = 0.3 * set.values().row(1).transpose() + 1.7 * set.values().row(4).transpose();
    const OverlapSystem sys = overlap_matrix(set);
    const Reconstruction rec = reconstruct(sys, set, {forward_model_chis(set, s), std::nullopt, s, {0.0, 1.0}});
    EXPECT_LT(*rec.relative_l2_error, 1e-6);
    // S~ is the sum of the mode contributions by construction
    EXPECT_LT((rec.mode_contributions.colwise().sum().transpose() - rec.estimate).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Reconstruct, OrthogonalSpectrumGivesZero) {
    const FrequencyGrid g(30.0, 301);
    const FilterSet set({make_filter(g, 1, [](double w) { return w < 10.0 ? 1.0 + w : 0.0; }),
                         make_filter(g, 2, [](double w) { return w < 12.0 ? std::exp(-w) : 0.0; })});
    const Eigen::VectorXd s = sampled(g, [](double w) { return w > 15.0 ? 3.0 : 0.0; });
    EXPECT_EQ(estimate_from_forward_model(set, s).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Reconstruct, ScalingInvariance) {
    const FrequencyGrid g(160.0, 2049);
    const auto filters = dd_filters(g, 20, 80.0, 10.0);
    auto scaled = filters;
    for (auto& f : scaled)
        for (auto& v : f.values) v *= 7.3;
    const auto ou = NoiseModel::ornstein_uhlenbeck(1.0, 1.0);
    const Eigen::VectorXd s = sampled(g, [&](double w) { return ou.spectral_density(w); });
    const Eigen::VectorXd a = estimate_from_forward_model(FilterSet(filters), s);
    const Eigen::VectorXd b = estimate_from_forward_model(FilterSet(scaled), s);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Reconstruct, PermutationEquivariance) {
    const FrequencyGrid g(160.0, 2049);
    auto filters = dd_filters(g, 12, 80.0, 10.0);
    const auto rtn = NoiseModel::random_telegraph(1.0, 2.0);
    const Eigen::VectorXd s = sampled(g, [&](double w) { return rtn.spectral_density(w); });
    const Eigen::VectorXd a = estimate_from_forward_model(FilterSet(filters), s);
    std::mt19937_64 rng(6);
    std::shuffle(filters.begin(), filters.end(), rng);
    const Eigen::VectorXd b = estimate_from_forward_model(FilterSet(filters), s);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

// Oracle: weighted least squares onto span{F_n} by Householder QR, independent
// of the eigen route. Adding filters never increases that projection's residual.
TEST(Reconstruct, MatchesProjectionAndImprovesMonotonically) {
    const FrequencyGrid g(160.0, 2049);
    const auto all = dd_filters(g, 20, 80.0, 10.0);
    const auto ou = NoiseModel::ornstein_uhlenbeck(1.0, 4.0);
    const Eigen::VectorXd s = sampled(g, [&](double w) { return ou.spectral_density(w); });
    const Eigen::VectorXd sw = simpson(g.size(), g.step()).cwiseSqrt();
    double prev = INFINITY;
    for (int n = 2; n <= 20; ++n) {
        const FilterSet set(std::vector<FilterFunction>(all.begin(), all.begin() + n));
        const Eigen::MatrixXd a = sw.asDiagonal() * set.values().transpose();
        const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(sw.cwiseProduct(s));
        const Eigen::VectorXd proj = set.values().transpose() * coef;
        const double residual = (sw.cwiseProduct(s - proj)).norm();
        EXPECT_LE(residual, prev * (1.0 + 1e-12));
        prev = residual;
        EXPECT_LT((estimate_from_forward_model(set, s) - proj).cwiseAbs().maxCoeff(), 1e-8 * s.maxCoeff());
    }
}

TEST(Reconstruct, ErrorPropagationIsLinear) {
    const FrequencyGrid g(160.0, 2049);
    const FilterSet set(dd_filters(g, 8, 80.0, 10.0));
    const OverlapSystem sys = overlap_matrix(set);
    const std::vector<double> chis{0.9, 0.3, 0.1, 0.05, 0.03, 0.02, 0.01, 0.01};
    std::vector<double> sigma(8, 0.0);
    sigma[3] = 0.002;
    const Reconstruction rec = reconstruct(sys, set, {chis, sigma, std::nullopt, {0.0, 1.0}});
    auto bumped = chis;
    bumped[3] += sigma[3];
    const Reconstruction shifted = reconstruct(sys, set, {bumped, std::nullopt, std::nullopt, {0.0, 1.0}});
    EXPECT_LT(((shifted.estimate - rec.estimate).cwiseAbs() - *rec.estimate_errors).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(((shifted.transformed_coeffs - rec.transformed_coeffs).cwiseAbs() - *rec.coeff_errors).cwiseAbs().maxCoeff(),
              1e-12);
    EXPECT_SEQCTL_ERROR(reconstruct(sys, set, {chis, std::vector<double>(3, 0.1), std::nullopt, {0.0, 1.0}}),
                        ErrorCode::Alignment);
}

TEST(Reconstruct, RelativeErrorBand) {
    const FrequencyGrid g(10.0, 11);
    Eigen::VectorXd truth = Eigen::VectorXd::Ones(11), est = Eigen::VectorXd::Ones(11);
    est(0) = 5.0;  // outside [0.1, 0.9] * omega_c
    est(5) = 2.0;
    EXPECT_NEAR(relative_l2_error(g, est, truth, {0.1, 0.9}), std::sqrt(1.0 / 9.0), 1e-15);
    EXPECT_SEQCTL_ERROR(relative_l2_error(g, est, truth, {0.5, 0.4}), ErrorCode::InvalidInput);
}
