// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is non-zero when any criterion fails.

#include "seqctl/config.hpp"
#include "seqctl/dd_filter.hpp"
#include "seqctl/fo_reconstruct.hpp"
#include "seqctl/orchestrator.hpp"
#include "seqctl/zeno.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

using namespace seqctl;
namespace fs = std::filesystem;

namespace {

// Criterion tolerances and runtime budgets (seconds).
constexpr double kZenoClosedFormTol = 1e-6;
constexpr double kLdExactTol = 2e-3;  // m * tau^4
constexpr double kLdModeRelTol = 0.05;
constexpr double kParsevalRelTol = 5e-3;
constexpr double kGaussianBridgeSe = 3.0;
constexpr int kGaussianBridgeMinPass = 19;
constexpr double kGramTol = 1e-8;
constexpr double kInSpanTol = 1e-6;
constexpr double kOptimumSlack = 1.01;
constexpr double kScalingTol = 1e-10;

// Band [0.1, 0.9] wc relative L2 error of the weighted least-squares
// projection of the OU spectrum onto span{F_n}; calibrated once with the
// QR oracle below and frozen. The live oracle must still reproduce it.
constexpr double kLorentzianOptimumError = 0.8427915031771418;
constexpr double kOptimumReproTol = 1e-9;

// Acceptance-scale sensing setup.
constexpr int kN = 20;
constexpr double kOmegaMax = 80.0;
constexpr double kOmegaC = 160.0;
constexpr double kDuration = 10.0;
constexpr std::size_t kGridPoints = 2049;

int failures = 0;

void report(int id, const char* name, bool pass, double seconds, double budget, const std::string& detail) {
    const bool ok = pass && seconds < budget;
    if (!ok) ++failures;
    std::printf("%s criterion %d (%s): %s; %.2f s (budget %.0f s)\n", ok ? "PASS" : "FAIL", id, name, detail.c_str(),
                seconds, budget);
    std::fflush(stdout);
}

// Runs `body` and reports; exceptions count as failures.
void criterion(int id, const char* name, double budget, const std::function<bool(std::string&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(id, name, pass, s, budget, detail);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

ZenoRun rabi_run(IntervalDistribution intervals, std::size_t m, std::size_t n_traj) {
    return ZenoRun{HamiltonianSpec(ops::pauli_x()),
                   MeasurementOperator::projector(ops::basis_projector(2, 0), "P0"),
                   DensityMatrix::basis(2, 0),
                   std::move(intervals),
                   m,
                   n_traj,
                   1e-2,
                   20240101};
}

std::vector<PulseSequence> sequences() {
    std::vector<PulseSequence> out;
    for (int n = 1; n <= kN; ++n) out.push_back(make_equidistant_sequence(n, kN, kOmegaMax, kDuration));
    return out;
}

std::vector<FilterFunction> filters(double scale = 1.0) {
    const FrequencyGrid grid(kOmegaC, kGridPoints);
    std::vector<FilterFunction> out;
    for (const auto& s : sequences()) {
        auto f = filter_function(s, grid);
        for (auto& v : f.values) v *= scale;
        out.push_back(std::move(f));
    }
    return out;
}

Eigen::VectorXd sampled_spectrum(const FrequencyGrid& grid, const NoiseModel& model) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) s(static_cast<Eigen::Index>(i)) = model.spectral_density(grid.omega(i));
    return s;
}

Eigen::VectorXd fo_estimate(const FilterSet& set, const Eigen::VectorXd& s) {
    return reconstruct(overlap_matrix(set), set, {forward_model_chis(set, s), std::nullopt, std::nullopt, {0.0, 1.0}})
        .estimate;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

int main() {
    const unsigned workers = std::max(1U, std::thread::hardware_concurrency());
    const auto ou = NoiseModel::ornstein_uhlenbeck(1.0, 1.0);

    criterion(1, "zeno closed form", 1.0, [](std::string& d) {
        const auto r = simulate_trajectory(rabi_run(IntervalDistribution::fixed(0.1), 20, 1), 0);
        const double expect = std::pow(std::cos(0.1), 40);
        const double err = std::abs(std::exp(r.log_survival) - expect);
        d = fmt("survival %.10f vs cos^40(0.1) %.10f, |diff| %.2e", std::exp(r.log_survival), expect, err);
        return err < kZenoClosedFormTol;
    });

    criterion(2, "ld predictor vs exact", 1.0, [](std::string& d) {
        const auto p = ld_predict(rabi_run(IntervalDistribution::fixed(0.1), 20, 1), 256);
        const double exact = 40.0 * std::log(std::cos(0.1));
        const double err = std::abs(p.log_p_star - exact);
        d = fmt("P* %.10f, ln P* %.6f, |ln P* - ln P_exact| %.2e", p.p_star, p.log_p_star, err);
        return err < kLdExactTol;
    });

    criterion(3, "ld vs monte carlo mode", 60.0, [&](std::string& d) {
        const auto run = rabi_run(IntervalDistribution::uniform(0.05, 0.15), 100, 1000);
        const auto cmp = compare_ld(run_zeno(run, workers), ld_predict(run, 256));
        d = fmt("mode %.6f, ln P* %.6f, relative %.4f", cmp.empirical_mode, cmp.log_p_star, cmp.relative_difference);
        return cmp.relative_difference < kLdModeRelTol;
    });

    criterion(4, "parseval bridge", 60.0, [&](std::string& d) {
        const FrequencyIntegration integ{kOmegaC};
        double worst = 0.0;
        for (const auto& seq : sequences()) {
            const double a = chi_time_domain(seq, ou).chi;
            const double b = chi_frequency_domain(seq, ou, integ).value.chi;
            worst = std::max(worst, std::abs(a - b) / std::abs(a));
        }
        d = fmt("max relative |chi_time - chi_freq| over 20 sequences %.2e", worst);
        return worst < kParsevalRelTol;
    });

    criterion(5, "gaussian bridge", 300.0, [&](std::string& d) {
        const auto seqs = sequences();
        RamseyOptions opts;
        opts.n_traj = 10000;
        opts.dt = 2e-3;
        opts.master_seed = 5;
        opts.workers = workers;
        const auto mc = ramsey_mc_batch(seqs, ou, opts);
        int pass = 0;
        std::string misses;
        for (std::size_t k = 0; k < seqs.size(); ++k) {
            const double ref = chi_time_domain(seqs[k], ou).chi;
            // a saturated sequence has NaN chi and counts as a miss
            const double z = std::abs(mc[k].chi - ref) / mc[k].standard_error;
            if (z <= kGaussianBridgeSe) ++pass;
            else misses += " n=" + std::to_string(seqs[k].label()) + (std::isnan(z) ? "(saturated)" : fmt("(%.2f SE)", z));
        }
        d = std::to_string(pass) + "/20 within 3 SE" + (misses.empty() ? "" : ";" + misses);
        return pass >= kGaussianBridgeMinPass;
    });

    criterion(6, "orthonormality", 10.0, [](std::string& d) {
        const FilterSet set(filters());
        const OverlapSystem sys = overlap_matrix(set);
        const Eigen::MatrixXd ft = transformed_filters(sys, set);
        const Eigen::MatrixXd gram = ft * set.weights().asDiagonal() * ft.transpose();
        const auto k = static_cast<Eigen::Index>(sys.retained);
        const double err = (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
        d = fmt("max |G - I| %.2e over %.0f retained modes", err, static_cast<double>(k));
        return err < kGramTol;
    });

    criterion(7, "in-span recovery", 10.0, [](std::string& d) {
        const FilterSet set(filters());
        const Eigen::VectorXd s = 0.3 * set.values().row(1).transpose() + 1.7 * set.values().row(4).transpose();
        const double err = relative_l2_error(set.grid(), fo_estimate(set, s), s, {0.0, 1.0});
        d = fmt("relative L2 error %.2e", err);
        return err < kInSpanTol;
    });

    criterion(8, "lorentzian end-to-end", 60.0, [&](std::string& d) {
        const FilterSet set(filters());
        const Eigen::VectorXd s = sampled_spectrum(set.grid(), ou);
        const double err = relative_l2_error(set.grid(), fo_estimate(set, s), s, {0.1, 0.9});

        // projection oracle: weighted QR least squares, independent of the eigen route
        const Eigen::VectorXd sw = set.weights().cwiseSqrt();
        const Eigen::MatrixXd a = sw.asDiagonal() * set.values().transpose();
        const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(sw.cwiseProduct(s));
        const Eigen::VectorXd proj = set.values().transpose() * coef;
        const double optimum = relative_l2_error(set.grid(), proj, s, {0.1, 0.9});
        d = fmt("error %.10f, projection optimum %.10f (frozen %.10f)", err, optimum, kLorentzianOptimumError);
        return std::abs(optimum - kLorentzianOptimumError) < kOptimumReproTol &&
               err <= kOptimumSlack * kLorentzianOptimumError;
    });

    criterion(9, "scaling invariance", 10.0, [&](std::string& d) {
        const FilterSet base(filters()), scaled(filters(7.3));
        const Eigen::VectorXd s = sampled_spectrum(base.grid(), ou);
        const double err = (fo_estimate(base, s) - fo_estimate(scaled, s)).cwiseAbs().maxCoeff();
        d = fmt("max |S~(F) - S~(7.3 F)| %.2e", err);
        return err < kScalingTol;
    });

    criterion(10, "determinism", 120.0, [](std::string& d) {
        const fs::path cfg_path = fs::path(SEQCTL_SOURCE_DIR) / "configs" / "end2end_ou.json";
        const fs::path root = fs::temp_directory_path() / "seqctl_acceptance_determinism";
        fs::remove_all(root);
        ExperimentConfig cfg = parse_config(cfg_path);
        std::vector<RunManifest> runs;
        for (unsigned w : {1U, 8U}) {
            cfg.output.directory = root / ("workers_" + std::to_string(w));
            runs.push_back(run(cfg, {w}));
        }
        int compared = 0;
        bool same = runs[0].files.size() == runs[1].files.size();
        for (const auto& f : runs[0].files) {
            if (fs::path(f.name).extension() != ".csv") continue;
            ++compared;
            same = same && slurp(runs[0].directory / f.name) == slurp(runs[1].directory / f.name);
        }
        fs::remove_all(root);
        d = std::to_string(compared) + " CSV files " + (same ? "byte-identical" : "differ") + " at workers 1 and 8";
        return same && compared > 0;
    });

    std::printf("%s: %d criterion failure(s)\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
