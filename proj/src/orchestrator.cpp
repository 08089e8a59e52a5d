#include "seqctl/orchestrator.hpp"

#include "seqctl/errors.hpp"
#include "seqctl/parallel.hpp"
#include "seqctl/zeno.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

namespace seqctl {

using json = nlohmann::json;

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// JSON cannot carry NaN; absent values become null.
json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
    return a;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& cell, const std::string& where) {
    double x = 0.0;
    const char* end = cell.data() + cell.size();
    const auto res = std::from_chars(cell.data(), end, x);
    if (res.ec != std::errc() || res.ptr != end) {
        throw Error(ErrorCode::Validation, where + ": cannot parse number '" + cell + "'");
    }
    return x;
}

// Artifacts are assembled in memory and written at the end, so a failing
// pipeline never leaves half a result set on disk.
struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;
    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

void append_sense(Artifacts& out, const OutputConfig& fmt, const SenseOutput& s) {
    if (fmt.csv) {
        std::string csv = "omega";
        for (const auto& f : s.filters) csv += ",F_" + std::to_string(f.label);
        csv += "\n";
        const FrequencyGrid& grid = s.filters.front().grid;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv += format_double(grid.omega(i));
            for (const auto& f : s.filters) csv += "," + format_double(f.values[i]);
            csv += "\n";
        }
        out.add("filters.csv", std::move(csv));
        out.add("chi.csv", chi_csv(s.chis));
    }
    if (fmt.json) {
        json seqs = json::array();
        for (std::size_t k = 0; k < s.chis.size(); ++k) {
            const auto& r = s.chis[k];
            const auto& f = s.frequency[k];
            seqs.push_back({{"sequence_index", r.sequence_index},
                            {"pulses", s.sequences[k].pulse_count()},
                            {"chi_time", r.chi_time},
                            {"chi_freq", r.chi_freq},
                            {"chi_freq_omega_trunc", f.omega_trunc},
                            {"chi_freq_tail_estimate", f.tail_estimate},
                            {"chi_freq_tail_bound", f.tail_bound},
                            {"chi_mc", number_or_null(r.chi_mc)},
                            {"chi_mc_stderr", number_or_null(r.stderr_mc)}});
        }
        out.add("sense.json", json{{"sequences", seqs}}.dump(2) + "\n");
    }
}

json reconstruct_and_append(Artifacts& out, const OutputConfig& fmt, const ExperimentConfig& cfg,
                            const std::vector<FilterFunction>& filters, const std::vector<ChiRow>& rows) {
    const SensingConfig& sensing = *cfg.sensing;
    const ReconstructConfig& rc = *cfg.reconstruct;
    const FilterSet set(filters);
    const OverlapSystem sys = overlap_matrix(set, rc.rank_epsilon);
    ReconstructionInput input = reconstruction_input(rows, rc.source, sensing.normalization);
    input.error_band = rc.error_band;

    std::optional<Eigen::VectorXd> truth;
    if (cfg.noise) {
        const FrequencyGrid& grid = set.grid();
        truth = Eigen::VectorXd(static_cast<Eigen::Index>(grid.size()));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            (*truth)(static_cast<Eigen::Index>(i)) = cfg.noise->spectral_density(grid.omega(i));
        }
        input.truth = truth;
    }
    const Reconstruction rec = reconstruct(sys, set, input);

    json diag{{"chi_source", to_string(rc.source)},
              {"filters", set.size()},
              {"retained_modes", rec.retained},
              {"rank_epsilon", rc.rank_epsilon},
              {"condition_number", rec.condition_number},
              {"eigenvalues", vector_json(sys.eigenvalues)},
              {"transformed_coeffs", vector_json(rec.transformed_coeffs)},
              {"error_band", {rc.error_band.first, rc.error_band.second}}};
    if (rec.coeff_errors) diag["transformed_coeff_errors"] = vector_json(*rec.coeff_errors);
    if (truth) {
        diag["relative_l2_error"] = *rec.relative_l2_error;
        // Same expansion fed with noiseless band overlaps of the true S: the
        // best this filter set can do.
        ReconstructionInput ideal{forward_model_chis(set, *truth), std::nullopt, truth, rc.error_band};
        diag["forward_model_relative_l2_error"] = *reconstruct(sys, set, ideal).relative_l2_error;
    }

    if (fmt.csv) {
        std::string csv = "omega";
        if (truth) csv += ",S_true";
        csv += ",S_hat";
        if (rec.estimate_errors) csv += ",S_hat_stderr";
        csv += "\n";
        for (std::size_t i = 0; i < set.grid().size(); ++i) {
            const auto j = static_cast<Eigen::Index>(i);
            csv += format_double(set.grid().omega(i));
            if (truth) csv += "," + format_double((*truth)(j));
            csv += "," + format_double(rec.estimate(j));
            if (rec.estimate_errors) csv += "," + format_double((*rec.estimate_errors)(j));
            csv += "\n";
        }
        out.add("reconstruction.csv", std::move(csv));
    }
    if (fmt.json) out.add("diagnostics.json", diag.dump(2) + "\n");
    return diag;
}

void run_zeno_mode(Artifacts& out, const ExperimentConfig& cfg, unsigned workers) {
    const ZenoRun zr = make_zeno_run(cfg);
    const ScheduleConfig& sch = *cfg.schedule;
    const SurvivalRecord record = run_zeno(zr, workers);
    const LdPrediction pred = ld_predict(zr, sch.ld_time_grid, sch.q_mode, sch.tau_resolution);

    if (cfg.output.csv) {
        std::string csv = "trajectory,log_survival,survival,finite,duration,tau_digest\n";
        for (std::size_t k = 0; k < record.trajectories.size(); ++k) {
            const auto& t = record.trajectories[k];
            csv += std::to_string(k) + "," + format_double(t.log_survival) + "," + format_double(std::exp(t.log_survival)) +
                   "," + (t.finite ? "1" : "0") + "," + format_double(t.duration) + "," + hex_digest(t.tau_digest) + "\n";
        }
        out.add("trajectories.csv", std::move(csv));
        std::string eta_csv = "t,eta\n";
        for (std::size_t i = 0; i < pred.times.size(); ++i) {
            eta_csv += format_double(pred.times[i]) + "," + format_double(pred.eta_grid[i]) + "\n";
        }
        out.add("eta.csv", std::move(eta_csv));
    }
    if (cfg.output.json) {
        const auto& s = record.summary;
        json hist{{"lower", s.histogram.lower}, {"width", s.histogram.width}, {"counts", s.histogram.counts}};
        json summary{{"trajectories", record.trajectories.size()},
                     {"finite", s.finite_count},
                     {"vanished", s.vanished_count},
                     {"log_survival_mean", s.mean},
                     {"log_survival_variance", s.variance},
                     {"log_survival_mode", s.mode},
                     {"histogram", hist},
                     {"ld",
                      {{"p_star", pred.p_star},
                       {"log_p_star", pred.log_p_star},
                       {"t_fin", pred.t_fin},
                       {"q_mode", to_string(pred.q_mode)},
                       {"time_grid", pred.times.size()}}}};
        try {
            const LdComparison c = compare_ld(record, pred);
            summary["comparison"] = {{"empirical_mode", c.empirical_mode},
                                     {"log_p_star", c.log_p_star},
                                     {"difference", c.difference},
                                     {"normalized_difference", number_or_null(c.normalized_difference)},
                                     {"relative_difference", number_or_null(c.relative_difference)}};
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsufficientData) throw;
            summary["comparison"] = nullptr;
            summary["comparison_skipped"] = e.what();
        }
        out.add("summary.json", summary.dump(2) + "\n");
    }
}

std::vector<ChiRow> load_chi_rows(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open chi table " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_chi_csv(ss.str());
}

// A chi table must describe exactly the sequences the sensing block builds.
void check_alignment(const std::vector<ChiRow>& rows, const SensingConfig& sensing) {
    if (rows.size() != static_cast<std::size_t>(sensing.n)) {
        throw Error(ErrorCode::Alignment, "chi table has " + std::to_string(rows.size()) + " rows, sensing.n = " +
                                              std::to_string(sensing.n));
    }
    for (int n = 1; n <= sensing.n; ++n) {
        if (rows[static_cast<std::size_t>(n - 1)].sequence_index != n) {
            throw Error(ErrorCode::Alignment, "chi table row " + std::to_string(n) + " carries sequence_index " +
                                                  std::to_string(rows[static_cast<std::size_t>(n - 1)].sequence_index));
        }
    }
}

}  // namespace

std::string chi_csv(const std::vector<ChiRow>& rows) {
    std::string csv = "sequence_index,chi_time,chi_freq,chi_mc,stderr\n";
    for (const auto& r : rows) {
        csv += std::to_string(r.sequence_index) + "," + format_double(r.chi_time) + "," + format_double(r.chi_freq) +
               "," + format_double(r.chi_mc) + "," + format_double(r.stderr_mc) + "\n";
    }
    return csv;
}

std::vector<ChiRow> parse_chi_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Validation, "chi table: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> expected{"sequence_index", "chi_time", "chi_freq", "chi_mc", "stderr"};
    if (split(line, ',') != expected) throw Error(ErrorCode::Validation, "chi table: unexpected header '" + line + "'");
    std::vector<ChiRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        const std::string where = "chi table line " + std::to_string(lineno);
        if (cells.size() != expected.size()) throw Error(ErrorCode::Validation, where + ": expected 5 columns");
        ChiRow r{};
        const double idx = parse_double(cells[0], where);
        if (idx != std::floor(idx) || idx < 1 || idx > 1e9) {
            throw Error(ErrorCode::Validation, where + ": sequence_index must be a positive integer");
        }
        r.sequence_index = static_cast<int>(idx);
        r.chi_time = parse_double(cells[1], where);
        r.chi_freq = parse_double(cells[2], where);
        r.chi_mc = parse_double(cells[3], where);
        r.stderr_mc = parse_double(cells[4], where);
        rows.push_back(r);
    }
    return rows;
}

std::vector<FilterFunction> build_filters(const SensingConfig& sensing) {
    const FrequencyGrid grid(sensing.omega_c, sensing.grid_points);
    std::vector<FilterFunction> filters;
    for (int n = 1; n <= sensing.n; ++n) {
        filters.push_back(filter_function(make_equidistant_sequence(n, sensing.n, sensing.omega_max, sensing.duration),
                                          grid, sensing.normalization));
    }
    return filters;
}

SenseOutput sense(const SensingConfig& sensing, const NoiseModel& model, std::uint64_t master_seed, unsigned workers) {
    SenseOutput out;
    for (int n = 1; n <= sensing.n; ++n) {
        out.sequences.push_back(make_equidistant_sequence(n, sensing.n, sensing.omega_max, sensing.duration));
    }
    const std::size_t count = out.sequences.size();
    const FrequencyGrid grid(sensing.omega_c, sensing.grid_points);
    // chi_freq is the physical decoherence, so it always uses the library's
    // own normalization; the configured one only shapes the exported filters.
    const FrequencyIntegration integ{sensing.omega_c, sensing.freq_points, sensing.truncation_factor,
                                     kFilterNormalization};

    out.filters.resize(count, FilterFunction{grid, {}, sensing.normalization, 0});
    std::vector<DecoherenceValue> time(count, DecoherenceValue{0.0, 0, ChiProvenance::TimeDomain});
    out.frequency.resize(count);
    parallel_for(count, workers, [&](std::size_t k) {
        out.filters[k] = filter_function(out.sequences[k], grid, sensing.normalization);
        time[k] = chi_time_domain(out.sequences[k], model);
        out.frequency[k] = chi_frequency_domain(out.sequences[k], model, integ);
    });

    std::vector<RamseyEstimate> mc;
    if (sensing.monte_carlo) {
        RamseyOptions opts;
        opts.n_traj = sensing.n_traj;
        opts.dt = sensing.dt;
        opts.master_seed = master_seed;
        opts.workers = workers;
        mc = ramsey_mc_batch(out.sequences, model, opts);
    }
    for (std::size_t k = 0; k < count; ++k) {
        const PulseSequence& seq = out.sequences[k];
        out.chis.push_back(ChiRow{seq.label(), time[k].chi, out.frequency[k].value.chi, mc.empty() ? kNaN : mc[k].chi,
                                  mc.empty() ? kNaN : mc[k].standard_error});
    }
    return out;
}

ReconstructionInput reconstruction_input(const std::vector<ChiRow>& rows, ChiSource source, double normalization) {
    const double scale = normalization / kFilterNormalization;
    ReconstructionInput input;
    std::vector<double> errors;
    for (const auto& r : rows) {
        double chi = r.chi_time;
        if (source == ChiSource::FrequencyDomain) chi = r.chi_freq;
        if (source == ChiSource::MonteCarlo) {
            if (!std::isfinite(r.chi_mc) || !std::isfinite(r.stderr_mc)) {
                throw Error(ErrorCode::Saturation, "reconstruct: no Monte Carlo chi for sequence " +
                                                       std::to_string(r.sequence_index) +
                                                       " (saturated or not computed); choose another chi_source");
            }
            chi = r.chi_mc;
            errors.push_back(scale * band_overlap_from_chi(r.stderr_mc));
        }
        if (!std::isfinite(chi)) {
            throw Error(ErrorCode::Validation, "reconstruct: chi of sequence " + std::to_string(r.sequence_index) +
                                                   " is not finite");
        }
        input.chis.push_back(scale * band_overlap_from_chi(chi));
    }
    if (source == ChiSource::MonteCarlo) input.chi_errors = std::move(errors);
    return input;
}

RunManifest run(const ExperimentConfig& config, const RunOptions& options) {
    const unsigned workers = std::max(1U, options.workers);
    Artifacts out;

    auto context = [](const char* stage, auto&& body) {
        try {
            body();
        } catch (const AccuracyError& e) {
            throw AccuracyError(std::string(stage) + ": " + e.what(), e.estimate, e.bound);
        } catch (const SaturationError& e) {
            throw SaturationError(std::string(stage) + ": " + e.what(), e.probability, e.coherence);
        } catch (const ValidationError&) {
            throw;
        } catch (const Error& e) {
            throw Error(e.code(), std::string(stage) + ": " + e.what());
        }
    };

    switch (config.mode) {
    case RunMode::Zeno:
        context("zeno", [&] { run_zeno_mode(out, config, workers); });
        break;
    case RunMode::Sense:
        context("sense", [&] { append_sense(out, config.output, sense(*config.sensing, *config.noise, config.master_seed, workers)); });
        break;
    case RunMode::Reconstruct:
        context("reconstruct", [&] {
            std::vector<ChiRow> rows;
            if (config.reconstruct->chi_csv) {
                rows = load_chi_rows(*config.reconstruct->chi_csv);
                check_alignment(rows, *config.sensing);
            } else {
                rows = sense(*config.sensing, *config.noise, config.master_seed, workers).chis;
            }
            reconstruct_and_append(out, config.output, config, build_filters(*config.sensing), rows);
        });
        break;
    case RunMode::End2End:
        context("end2end", [&] {
            const SenseOutput s = sense(*config.sensing, *config.noise, config.master_seed, workers);
            append_sense(out, config.output, s);
            reconstruct_and_append(out, config.output, config, s.filters, s.chis);
        });
        break;
    }

    RunManifest manifest{config.digest, kVersion, utc_timestamp(), config.master_seed, config.mode,
                         config.output.directory, {}};
    std::vector<std::filesystem::path> written;
    try {
        std::filesystem::create_directories(config.output.directory);
        auto write = [&](const std::string& name, const std::string& content) {
            const auto path = config.output.directory / name;
            std::ofstream f(path, std::ios::binary | std::ios::trunc);
            if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
            written.push_back(path);
            f << content;
            f.close();
            if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
        };
        for (const auto& [name, content] : out.files) {
            write(name, content);
            manifest.files.push_back({name, sha256_hex(content), content.size()});
        }
        json files = json::array();
        for (const auto& f : manifest.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
        const json m{{"tool", "seqctl"},
                     {"version", manifest.version},
                     {"mode", to_string(manifest.mode)},
                     {"config_digest", manifest.config_digest},
                     {"master_seed", manifest.master_seed},
                     {"timestamp", manifest.timestamp},
                     {"files", files}};
        write("manifest.json", m.dump(2) + "\n");
    } catch (const std::filesystem::filesystem_error& e) {
        std::error_code ec;
        for (const auto& p : written) std::filesystem::remove(p, ec);
        throw Error(ErrorCode::Io, e.what());
    } catch (...) {
        std::error_code ec;
        for (const auto& p : written) std::filesystem::remove(p, ec);
        throw;
    }
    return manifest;
}

}  // namespace seqctl
