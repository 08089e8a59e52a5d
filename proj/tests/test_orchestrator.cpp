#include "seqctl/orchestrator.hpp"

#include "test_util.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace seqctl;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("seqctl_orchestrator_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

ExperimentConfig load(const json& doc, const fs::path& dir) {
    return parse_config_text(doc.dump(), dir);
}

json small_end2end() {
    return json::parse(R"({
      "mode": "end2end",
      "master_seed": 11,
      "noise": {"kind": "ornstein_uhlenbeck", "sigma": 1.0, "tau_c": 0.5},
      "sensing": {"n": 4, "omega_max": 20.0, "duration": 5.0, "grid_points": 257,
                  "freq_points": 512, "n_traj": 200, "dt": 0.005},
      "reconstruct": {"chi_source": "time_domain"},
      "output": {"directory": "out"}
    })");
}

}  // namespace

TEST(Run, ZenoFixedIntervalWritesZeroVarianceSummary) {
    const auto dir = scratch("zeno");
    const auto doc = json::parse(R"({
      "mode": "zeno", "master_seed": 3,
      "system": {"dim": 2, "h0": "pauli_x", "projector": "projector_0", "initial_state": "projector_0"},
      "schedule": {"intervals": {"kind": "fixed", "tau": 0.05}, "m": 20, "n_traj": 120, "dt": 0.01},
      "output": {"directory": "z"}
    })");
    const RunManifest m = run(load(doc, dir), {2});
    const json summary = json::parse(slurp(dir / "z" / "summary.json"));
    EXPECT_EQ(summary["log_survival_variance"].get<double>(), 0.0);
    const std::string traj = slurp(dir / "z" / "trajectories.csv");
    EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 121);
    EXPECT_EQ(traj.substr(0, traj.find('\n')), "trajectory,log_survival,survival,finite,duration,tau_digest");

    // every emitted file is listed with the hash of its bytes
    const json manifest = json::parse(slurp(dir / "z" / "manifest.json"));
    EXPECT_EQ(manifest["files"].size(), m.files.size());
    for (const auto& f : m.files) EXPECT_EQ(sha256_hex(slurp(dir / "z" / f.name)), f.sha256) << f.name;
    EXPECT_EQ(manifest["config_digest"], sha256_hex(doc.dump()));
    EXPECT_EQ(manifest["master_seed"], 3);
}

TEST(Run, EndToEndEmitsTruthEstimateAndError) {
    const auto dir = scratch("e2e");
    const RunManifest m = run(load(small_end2end(), dir));
    std::vector<std::string> names;
    for (const auto& f : m.files) names.push_back(f.name);
    for (const char* want : {"filters.csv", "chi.csv", "reconstruction.csv", "diagnostics.json"}) {
        EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
    }
    const std::string rec = slurp(dir / "out" / "reconstruction.csv");
    EXPECT_EQ(rec.substr(0, rec.find('\n')), "omega,S_true,S_hat");
    const json diag = json::parse(slurp(dir / "out" / "diagnostics.json"));
    EXPECT_TRUE(diag.contains("relative_l2_error"));
    EXPECT_GE(diag["relative_l2_error"].get<double>(), 0.0);
    // the estimate can never beat the best fit in the filter span
    EXPECT_GE(diag["relative_l2_error"].get<double>(), diag["forward_model_relative_l2_error"].get<double>() - 1e-9);

    const std::string chi = slurp(dir / "out" / "chi.csv");
    EXPECT_EQ(chi.substr(0, chi.find('\n')), "sequence_index,chi_time,chi_freq,chi_mc,stderr");
}

TEST(Run, SameSeedSameBytesAcrossWorkers) {
    const auto a = scratch("det_a"), b = scratch("det_b");
    const auto ma = run(load(small_end2end(), a), {1});
    const auto mb = run(load(small_end2end(), b), {3});
    ASSERT_EQ(ma.files.size(), mb.files.size());
    for (std::size_t k = 0; k < ma.files.size(); ++k) {
        EXPECT_EQ(ma.files[k].name, mb.files[k].name);
        EXPECT_EQ(ma.files[k].sha256, mb.files[k].sha256) << ma.files[k].name;
    }
    auto doc = small_end2end();
    doc["master_seed"] = 12;
    const auto mc = run(load(doc, scratch("det_c")));
    const auto chi_hash = [](const RunManifest& m) {
        for (const auto& f : m.files)
            if (f.name == "chi.csv") return f.sha256;
        return std::string();
    };
    EXPECT_NE(chi_hash(ma), chi_hash(mc));
}

TEST(Run, SenseThenReconstructMatchesEndToEnd) {
    const auto dir = scratch("roundtrip");
    auto sense_doc = small_end2end();
    sense_doc["mode"] = "sense";
    sense_doc.erase("reconstruct");
    sense_doc["output"]["directory"] = "sense";
    run(load(sense_doc, dir));

    auto rec_doc = small_end2end();
    rec_doc["mode"] = "reconstruct";
    rec_doc.erase("noise");
    rec_doc["reconstruct"]["chi_csv"] = "sense/chi.csv";
    rec_doc["output"]["directory"] = "rec";
    run(load(rec_doc, dir));

    auto e2e_doc = small_end2end();
    e2e_doc["output"]["directory"] = "e2e";
    run(load(e2e_doc, dir));

    // no noise block, so no S_true column; S_hat must agree to the last digit
    const std::string via_csv = slurp(dir / "rec" / "reconstruction.csv");
    const std::string direct = slurp(dir / "e2e" / "reconstruction.csv");
    EXPECT_EQ(via_csv.substr(0, via_csv.find('\n')), "omega,S_hat");
    std::istringstream a(via_csv), b(direct);
    std::string la, lb;
    std::getline(a, la);
    std::getline(b, lb);
    while (std::getline(a, la) && std::getline(b, lb)) {
        const auto omega_a = la.substr(0, la.find(',')), omega_b = lb.substr(0, lb.find(','));
        EXPECT_EQ(omega_a, omega_b);
        EXPECT_EQ(la.substr(la.rfind(',') + 1), lb.substr(lb.rfind(',') + 1));
    }
}

TEST(Run, MisalignedChiCsvIsRejected) {
    const auto dir = scratch("misaligned");
    std::vector<ChiRow> rows{{1, 0.1, 0.1, NAN, NAN}, {2, 0.05, 0.05, NAN, NAN}, {3, 0.02, 0.02, NAN, NAN}};
    std::ofstream(dir / "chi.csv") << chi_csv(rows);
    auto doc = small_end2end();
    doc["mode"] = "reconstruct";
    doc.erase("noise");
    doc["reconstruct"]["chi_csv"] = "chi.csv";
    EXPECT_SEQCTL_ERROR(run(load(doc, dir)), ErrorCode::Alignment);
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Run, FailureLeavesNoPartialOutput) {
    const auto dir = scratch("failure");
    // strong noise drives the free-evolution Ramsey coherence to zero
    auto doc = small_end2end();
    doc["noise"]["sigma"] = 3.0;
    doc["reconstruct"]["chi_source"] = "monte_carlo";
    EXPECT_SEQCTL_ERROR(run(load(doc, dir)), ErrorCode::Saturation);
    EXPECT_FALSE(fs::exists(dir / "out") && !fs::is_empty(dir / "out"));

    // output path blocked by a regular file
    std::ofstream(dir / "blocked") << "x";
    doc = small_end2end();
    doc["output"]["directory"] = "blocked/out";
    EXPECT_SEQCTL_ERROR(run(load(doc, dir)), ErrorCode::Io);
}

TEST(ChiCsv, RoundTripAndMalformed) {
    const std::vector<ChiRow> rows{{1, 0.123456789012345678, 1e-300, NAN, NAN}, {2, 3.0, 2.5, 2.75, 0.01}};
    const auto back = parse_chi_csv(chi_csv(rows));
    ASSERT_EQ(back.size(), 2U);
    EXPECT_EQ(back[0].chi_time, rows[0].chi_time);
    EXPECT_EQ(back[0].chi_freq, rows[0].chi_freq);
    EXPECT_TRUE(std::isnan(back[0].chi_mc));
    EXPECT_EQ(back[1].chi_mc, 2.75);
    EXPECT_EQ(back[1].sequence_index, 2);
    EXPECT_THROW(parse_chi_csv("sequence_index,chi_time\n1,abc\n"), Error);
}

TEST(ReconstructionInput, ScaleAndSource) {
    const std::vector<ChiRow> rows{{1, 0.4, 0.41, 0.39, 0.02}, {2, 0.2, 0.21, 0.19, 0.01}};
    const auto half = reconstruction_input(rows, ChiSource::TimeDomain, kFilterNormalization);
    const auto unit = reconstruction_input(rows, ChiSource::TimeDomain, 1.0);
    EXPECT_DOUBLE_EQ(half.chis[0], 0.2);
    EXPECT_DOUBLE_EQ(unit.chis[0], 0.4);
    EXPECT_FALSE(half.chi_errors.has_value());
    const auto mc = reconstruction_input(rows, ChiSource::MonteCarlo, kFilterNormalization);
    ASSERT_TRUE(mc.chi_errors.has_value());
    EXPECT_DOUBLE_EQ((*mc.chi_errors)[1], 0.005);
    EXPECT_DOUBLE_EQ(reconstruction_input(rows, ChiSource::FrequencyDomain, kFilterNormalization).chis[1], 0.105);
}

TEST(FormatDouble, RoundTripsAndSpecials) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> exponent(-300.0, 300.0);
    for (int k = 0; k < 10000; ++k) {
        const double x = (k % 2 ? -1.0 : 1.0) * std::pow(10.0, exponent(rng)) * std::generate_canonical<double, 53>(rng);
        const std::string s = format_double(x);
        double y = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), y);
        EXPECT_EQ(x, y) << s;
    }
    EXPECT_EQ(format_double(NAN), "nan");
    EXPECT_EQ(format_double(INFINITY), "inf");
    EXPECT_EQ(format_double(-INFINITY), "-inf");
}
