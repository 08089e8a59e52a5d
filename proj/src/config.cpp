#include "seqctl/config.hpp"

#include "seqctl/errors.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

namespace seqctl {

using json = nlohmann::json;

const char* to_string(RunMode mode) noexcept {
    switch (mode) {
    case RunMode::Zeno: return "zeno";
    case RunMode::Sense: return "sense";
    case RunMode::Reconstruct: return "reconstruct";
    case RunMode::End2End: return "end2end";
    }
    return "unknown";
}

const char* to_string(ChiSource source) noexcept {
    switch (source) {
    case ChiSource::TimeDomain: return "time_domain";
    case ChiSource::FrequencyDomain: return "frequency_domain";
    case ChiSource::MonteCarlo: return "monte_carlo";
    }
    return "unknown";
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::Io, "sha256: digest computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

namespace {

using Failures = std::vector<std::string>;

// A JSON object plus its dotted path. Keys are marked as they are read so
// that leftovers can be reported as unknown.
class Node {
public:
    Node(const json& j, std::string path, Failures& failures) : j_(j), path_(std::move(path)), failures_(failures) {
        if (!j_.is_object()) fail("", "expected an object");
    }
    ~Node() {
        if (!j_.is_object()) return;
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.count(key)) failures_.push_back(sub(key) + ": unknown key");
        }
    }
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    bool has(const std::string& key) {
        return j_.is_object() && j_.contains(key);
    }
    const json* get(const std::string& key, bool required) {
        seen_.insert(key);
        if (j_.is_object() && j_.contains(key)) return &j_.at(key);
        if (required) fail(key, "missing");
        return nullptr;
    }
    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    void fail(const std::string& key, const std::string& msg) {
        failures_.push_back((key.empty() ? (path_.empty() ? std::string("<root>") : path_) : sub(key)) + ": " + msg);
    }
    Failures& failures() { return failures_; }

    template <class T>
    std::optional<T> number(const std::string& key, bool required);
    std::optional<std::string> string(const std::string& key, bool required);
    std::optional<bool> boolean(const std::string& key, bool required);

private:
    const json& j_;
    std::string path_;
    Failures& failures_;
    std::set<std::string> seen_;
};

template <class T>
std::optional<T> Node::number(const std::string& key, bool required) {
    const json* v = get(key, required);
    if (!v) return std::nullopt;
    if constexpr (std::is_integral_v<T>) {
        if (v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
            return v->get<T>();
        }
        if (v->is_number_integer()) {
            if constexpr (std::is_signed_v<T>) return v->get<T>();
        }
        fail(key, std::is_signed_v<T> ? "expected an integer" : "expected a non-negative integer");
        return std::nullopt;
    } else {
        if (!v->is_number()) {
            fail(key, "expected a number");
            return std::nullopt;
        }
        const double x = v->get<double>();
        if (!std::isfinite(x)) {
            fail(key, "must be finite");
            return std::nullopt;
        }
        return static_cast<T>(x);
    }
}

std::optional<std::string> Node::string(const std::string& key, bool required) {
    const json* v = get(key, required);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
        fail(key, "expected a string");
        return std::nullopt;
    }
    return v->get<std::string>();
}

std::optional<bool> Node::boolean(const std::string& key, bool required) {
    const json* v = get(key, required);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) {
        fail(key, "expected true or false");
        return std::nullopt;
    }
    return v->get<bool>();
}

// Named matrices: identity, zero, pauli_x/y/z, projector_<k>.
std::optional<CMatrix> preset(const std::string& name, int dim, std::string& why) {
    if (name == "identity") return ops::identity(dim);
    if (name == "zero") return ops::zero(dim);
    if (name == "pauli_x" || name == "pauli_y" || name == "pauli_z") {
        if (dim != 2) {
            why = "Pauli presets need dim = 2";
            return std::nullopt;
        }
        return name == "pauli_x" ? ops::pauli_x() : name == "pauli_y" ? ops::pauli_y() : ops::pauli_z();
    }
    static const std::regex proj_re("projector_([0-9]+)");
    std::smatch m;
    if (std::regex_match(name, m, proj_re)) {
        const int k = std::stoi(m[1].str());
        if (k >= dim) {
            why = "basis index out of range for dim " + std::to_string(dim);
            return std::nullopt;
        }
        return ops::basis_projector(dim, k);
    }
    why = "unknown preset '" + name + "'";
    return std::nullopt;
}

std::optional<Complex> parse_entry(const json& e) {
    if (e.is_number()) return Complex(e.get<double>(), 0.0);
    if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        return Complex(e[0].get<double>(), e[1].get<double>());
    }
    return std::nullopt;
}

// "preset" | {"preset": name, "scale": s} | [[row], ...] with entries x or [re, im].
std::optional<CMatrix> matrix(Node& parent, const std::string& key, int dim, bool required) {
    const json* v = parent.get(key, required);
    if (!v) return std::nullopt;
    std::string why;
    if (v->is_string()) {
        auto m = preset(v->get<std::string>(), dim, why);
        if (!m) parent.fail(key, why);
        return m;
    }
    if (v->is_object()) {
        Node node(*v, parent.sub(key), parent.failures());
        const auto name = node.string("preset", true);
        const auto scale = node.number<double>("scale", false).value_or(1.0);
        if (!name) return std::nullopt;
        auto m = preset(*name, dim, why);
        if (!m) {
            node.fail("preset", why);
            return std::nullopt;
        }
        return CMatrix(*m * scale);
    }
    if (v->is_array()) {
        if (static_cast<int>(v->size()) != dim) {
            parent.fail(key, "expected " + std::to_string(dim) + " rows");
            return std::nullopt;
        }
        CMatrix m(dim, dim);
        for (int r = 0; r < dim; ++r) {
            const json& row = (*v)[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<int>(row.size()) != dim) {
                parent.fail(key, "row " + std::to_string(r) + " must have " + std::to_string(dim) + " entries");
                return std::nullopt;
            }
            for (int c = 0; c < dim; ++c) {
                auto z = parse_entry(row[static_cast<std::size_t>(c)]);
                if (!z) {
                    parent.fail(key, "entry (" + std::to_string(r) + "," + std::to_string(c) +
                                         ") must be a number or [re, im]");
                    return std::nullopt;
                }
                m(r, c) = *z;
            }
        }
        return m;
    }
    parent.fail(key, "expected a preset name, {preset, scale} or a row-major array");
    return std::nullopt;
}

// Runs a constructor that validates by throwing; turns the throw into a failure.
template <class F>
auto attempt(Node& node, const std::string& key, F&& make) -> std::optional<decltype(make())> {
    try {
        return make();
    } catch (const Error& e) {
        node.fail(key, e.what());
        return std::nullopt;
    }
}

std::optional<SystemConfig> parse_system(Node& root, bool needs_noise_block_for_coupling, bool have_noise) {
    const json* v = root.get("system", true);
    if (!v) return std::nullopt;
    Node node(*v, "system", root.failures());
    SystemConfig s;
    const auto dim = node.number<int>("dim", true);
    if (!dim) return std::nullopt;
    if (*dim < 2 || *dim > kMaxDim) {
        node.fail("dim", "must lie in [2, " + std::to_string(kMaxDim) + "]");
        return std::nullopt;
    }
    s.dim = *dim;
    bool ok = true;

    auto h0 = matrix(node, "h0", s.dim, true);
    if (h0 && hermiticity_defect(*h0) > 1e-12) {
        node.fail("h0", "must be Hermitian");
        h0.reset();
    }
    auto proj = matrix(node, "projector", s.dim, true);
    if (proj) {
        if (!attempt(node, "projector", [&] { return MeasurementOperator::projector(*proj, "P"); })) proj.reset();
    }
    auto rho = matrix(node, "initial_state", s.dim, true);
    if (rho) {
        auto dm = attempt(node, "initial_state", [&] { return DensityMatrix(*rho); });
        if (!dm) rho.reset();
        else if (proj && std::abs(dm->expectation(*proj) - 1.0) > 1e-10) {
            node.fail("initial_state", "must lie inside the projector subspace");
            rho.reset();
        }
    }
    ok = h0 && proj && rho;

    if (const json* c = node.get("control", false)) {
        Node cn(*c, node.sub("control"), node.failures());
        ControlConfig control;
        auto op = matrix(cn, "op", s.dim, true);
        if (op && hermiticity_defect(*op) > 1e-12) {
            cn.fail("op", "must be Hermitian");
            op.reset();
        }
        const auto a = cn.number<double>("amplitude", true);
        control.omega = cn.number<double>("omega", false).value_or(0.0);
        control.phase = cn.number<double>("phase", false).value_or(0.0);
        if (op && a) {
            control.op = *op;
            control.amplitude = *a;
            s.control = control;
        } else {
            ok = false;
        }
    }
    if (node.has("noise_coupling")) {
        auto b = matrix(node, "noise_coupling", s.dim, false);
        if (b && hermiticity_defect(*b) > 1e-12) {
            node.fail("noise_coupling", "must be Hermitian");
            b.reset();
        }
        if (needs_noise_block_for_coupling && !have_noise) node.fail("noise_coupling", "requires a noise block");
        if (b) s.noise_coupling = *b;
        else ok = false;
    }
    if (!ok) return std::nullopt;
    s.h0 = *h0;
    s.projector = *proj;
    s.initial_state = *rho;
    return s;
}

std::optional<NoiseModel> parse_noise(Node& root, bool required) {
    const json* v = root.get("noise", required);
    if (!v) return std::nullopt;
    Node node(*v, "noise", root.failures());
    const auto kind = node.string("kind", true);
    if (!kind) return std::nullopt;
    if (*kind == "ornstein_uhlenbeck") {
        const auto sigma = node.number<double>("sigma", true);
        const auto tau = node.number<double>("tau_c", true);
        if (!sigma || !tau) return std::nullopt;
        return attempt(node, "", [&] { return NoiseModel::ornstein_uhlenbeck(*sigma, *tau); });
    }
    if (*kind == "random_telegraph") {
        const auto a = node.number<double>("amplitude", true);
        const auto rate = node.number<double>("rate", true);
        if (!a || !rate) return std::nullopt;
        return attempt(node, "", [&] { return NoiseModel::random_telegraph(*a, *rate); });
    }
    if (*kind == "harmonic_mixture") {
        const json* comps = node.get("components", true);
        if (!comps) return std::nullopt;
        if (!comps->is_array()) {
            node.fail("components", "expected an array");
            return std::nullopt;
        }
        std::vector<HarmonicComponent> list;
        bool ok = true;
        for (std::size_t i = 0; i < comps->size(); ++i) {
            Node cn((*comps)[i], node.sub("components[" + std::to_string(i) + "]"), node.failures());
            const auto a = cn.number<double>("amplitude", true);
            const auto w = cn.number<double>("omega", true);
            if (a && w) list.push_back({*a, *w});
            else ok = false;
        }
        if (!ok) return std::nullopt;
        return attempt(node, "components", [&] { return NoiseModel::harmonic_mixture(list); });
    }
    node.fail("kind", "expected ornstein_uhlenbeck, random_telegraph or harmonic_mixture");
    return std::nullopt;
}

std::optional<IntervalDistribution> parse_intervals(Node& parent) {
    const json* v = parent.get("intervals", true);
    if (!v) return std::nullopt;
    Node node(*v, parent.sub("intervals"), parent.failures());
    const auto kind = node.string("kind", true);
    if (!kind) return std::nullopt;
    if (*kind == "fixed") {
        const auto tau = node.number<double>("tau", true);
        if (!tau) return std::nullopt;
        return attempt(node, "tau", [&] { return IntervalDistribution::fixed(*tau); });
    }
    if (*kind == "uniform") {
        const auto lo = node.number<double>("tau_min", true);
        const auto hi = node.number<double>("tau_max", true);
        if (!lo || !hi) return std::nullopt;
        return attempt(node, "", [&] { return IntervalDistribution::uniform(*lo, *hi); });
    }
    if (*kind == "exponential") {
        const auto mean = node.number<double>("mean", true);
        if (!mean) return std::nullopt;
        return attempt(node, "mean", [&] { return IntervalDistribution::exponential(*mean); });
    }
    if (*kind == "bimodal") {
        const auto a = node.number<double>("tau_a", true);
        const auto b = node.number<double>("tau_b", true);
        const auto w = node.number<double>("weight", true);
        if (!a || !b || !w) return std::nullopt;
        return attempt(node, "", [&] { return IntervalDistribution::bimodal(*a, *b, *w); });
    }
    if (*kind == "empirical") {
        const json* s = node.get("samples", true);
        if (!s) return std::nullopt;
        if (!s->is_array()) {
            node.fail("samples", "expected an array of numbers");
            return std::nullopt;
        }
        std::vector<double> samples;
        for (const auto& x : *s) {
            if (!x.is_number()) {
                node.fail("samples", "expected an array of numbers");
                return std::nullopt;
            }
            samples.push_back(x.get<double>());
        }
        return attempt(node, "samples", [&] { return IntervalDistribution::empirical(samples); });
    }
    node.fail("kind", "expected fixed, uniform, exponential, bimodal or empirical");
    return std::nullopt;
}

std::optional<ScheduleConfig> parse_schedule(Node& root) {
    const json* v = root.get("schedule", true);
    if (!v) return std::nullopt;
    Node node(*v, "schedule", root.failures());
    auto intervals = parse_intervals(node);
    const auto m = node.number<std::size_t>("m", true);
    const auto n_traj = node.number<std::size_t>("n_traj", true);
    const auto dt = node.number<double>("dt", true);
    bool ok = intervals && m && n_traj && dt;
    if (m && *m < 1) { node.fail("m", "must be >= 1"); ok = false; }
    if (n_traj && *n_traj < 1) { node.fail("n_traj", "must be >= 1"); ok = false; }
    if (dt && !(*dt > 0.0)) { node.fail("dt", "must be > 0"); ok = false; }

    ScheduleConfig s{IntervalDistribution::fixed(1.0)};
    if (const json* ld = node.get("ld", false)) {
        Node ln(*ld, node.sub("ld"), node.failures());
        if (auto g = ln.number<std::size_t>("time_grid", false)) {
            if (*g < 1) { ln.fail("time_grid", "must be >= 1"); ok = false; }
            s.ld_time_grid = *g;
        }
        if (auto r = ln.number<std::size_t>("tau_resolution", false)) {
            if (*r < 1) { ln.fail("tau_resolution", "must be >= 1"); ok = false; }
            s.tau_resolution = *r;
        }
        if (auto q = ln.string("q_mode", false)) {
            if (*q == "second_order") s.q_mode = QMode::SecondOrder;
            else if (*q == "exact_two_point") s.q_mode = QMode::ExactTwoPoint;
            else { ln.fail("q_mode", "expected second_order or exact_two_point"); ok = false; }
        }
    }
    if (!ok) return std::nullopt;
    s.intervals = *intervals;
    s.m = *m;
    s.n_traj = *n_traj;
    s.dt = *dt;
    return s;
}

std::optional<SensingConfig> parse_sensing(Node& root, bool required) {
    const json* v = root.get("sensing", required);
    if (!v) return std::nullopt;
    Node node(*v, "sensing", root.failures());
    SensingConfig s;
    bool ok = true;
    auto positive = [&](const std::string& key, double& slot, bool req) {
        if (auto x = node.number<double>(key, req)) {
            if (!(*x > 0.0)) { node.fail(key, "must be > 0"); ok = false; }
            slot = *x;
        } else if (req) {
            ok = false;
        }
    };
    if (auto n = node.number<int>("n", true)) {
        if (*n < 2) { node.fail("n", "must be >= 2"); ok = false; }
        s.n = *n;
    } else {
        ok = false;
    }
    positive("omega_max", s.omega_max, true);
    positive("duration", s.duration, true);
    s.omega_c = 2.0 * s.omega_max;
    positive("omega_c", s.omega_c, false);
    positive("normalization", s.normalization, false);
    positive("truncation_factor", s.truncation_factor, false);
    positive("dt", s.dt, false);
    if (auto g = node.number<std::size_t>("grid_points", false)) {
        if (*g < 3) { node.fail("grid_points", "must be >= 3"); ok = false; }
        s.grid_points = *g;
    }
    if (auto g = node.number<std::size_t>("freq_points", false)) {
        if (*g < 3) { node.fail("freq_points", "must be >= 3"); ok = false; }
        s.freq_points = *g;
    }
    if (auto mc = node.boolean("monte_carlo", false)) s.monte_carlo = *mc;
    if (auto n = node.number<std::size_t>("n_traj", false)) {
        if (*n < 100) { node.fail("n_traj", "must be >= 100"); ok = false; }
        s.n_traj = *n;
    }
    if (s.truncation_factor < 1.0) { node.fail("truncation_factor", "must be >= 1"); ok = false; }
    if (!ok) return std::nullopt;
    return s;
}

std::optional<ReconstructConfig> parse_reconstruct(Node& root, const std::filesystem::path& base_dir) {
    const json* v = root.get("reconstruct", false);
    if (!v) return ReconstructConfig{};
    Node node(*v, "reconstruct", root.failures());
    ReconstructConfig r;
    bool ok = true;
    if (auto p = node.string("chi_csv", false)) {
        std::filesystem::path path(*p);
        r.chi_csv = path.is_absolute() ? path : base_dir / path;
    }
    if (auto s = node.string("chi_source", false)) {
        if (*s == "time_domain") r.source = ChiSource::TimeDomain;
        else if (*s == "frequency_domain") r.source = ChiSource::FrequencyDomain;
        else if (*s == "monte_carlo") r.source = ChiSource::MonteCarlo;
        else { node.fail("chi_source", "expected time_domain, frequency_domain or monte_carlo"); ok = false; }
    }
    if (auto eps = node.number<double>("rank_epsilon", false)) {
        if (!(*eps >= 0.0 && *eps < 1.0)) { node.fail("rank_epsilon", "must lie in [0, 1)"); ok = false; }
        r.rank_epsilon = *eps;
    }
    if (const json* band = node.get("error_band", false)) {
        if (band->is_array() && band->size() == 2 && (*band)[0].is_number() && (*band)[1].is_number()) {
            r.error_band = {(*band)[0].get<double>(), (*band)[1].get<double>()};
            if (!(r.error_band.first >= 0.0 && r.error_band.first < r.error_band.second && r.error_band.second <= 1.0)) {
                node.fail("error_band", "must satisfy 0 <= lo < hi <= 1");
                ok = false;
            }
        } else {
            node.fail("error_band", "expected [lo, hi] as fractions of omega_c");
            ok = false;
        }
    }
    if (!ok) return std::nullopt;
    return r;
}

OutputConfig parse_output(Node& root, const std::filesystem::path& base_dir) {
    OutputConfig out;
    out.directory = base_dir / "out";
    const json* v = root.get("output", false);
    if (!v) return out;
    Node node(*v, "output", root.failures());
    if (auto d = node.string("directory", false)) {
        std::filesystem::path p(*d);
        out.directory = p.is_absolute() ? p : base_dir / p;
    }
    if (const json* f = node.get("formats", false)) {
        if (!f->is_array()) {
            node.fail("formats", "expected an array of \"csv\" / \"json\"");
            return out;
        }
        out.csv = out.json = false;
        for (const auto& x : *f) {
            const std::string s = x.is_string() ? x.get<std::string>() : "";
            if (s == "csv") out.csv = true;
            else if (s == "json") out.json = true;
            else node.fail("formats", "unknown format " + x.dump());
        }
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError({std::string("<root>: malformed JSON: ") + e.what()});
    }

    Failures failures;
    ExperimentConfig cfg;
    cfg.digest = sha256_hex(text);
    {
        Node root(doc, "", failures);
        if (!doc.is_object()) throw ValidationError(failures);

        const auto mode = root.string("mode", true);
        bool mode_ok = false;
        if (mode) {
            mode_ok = true;
            if (*mode == "zeno") cfg.mode = RunMode::Zeno;
            else if (*mode == "sense") cfg.mode = RunMode::Sense;
            else if (*mode == "reconstruct") cfg.mode = RunMode::Reconstruct;
            else if (*mode == "end2end") cfg.mode = RunMode::End2End;
            else {
                root.fail("mode", "expected zeno, sense, reconstruct or end2end");
                mode_ok = false;
            }
        }
        if (auto seed = root.number<std::uint64_t>("master_seed", true)) cfg.master_seed = *seed;

        if (mode_ok) {
            const bool zeno = cfg.mode == RunMode::Zeno;
            const bool sensing = !zeno;
            // reconstruct reads chis from a CSV when given one, else senses inline
            bool noise_required = cfg.mode == RunMode::Sense || cfg.mode == RunMode::End2End;
            if (cfg.mode == RunMode::Reconstruct && doc.is_object()) {
                const auto it = doc.find("reconstruct");
                const bool has_csv = it != doc.end() && it->is_object() && it->contains("chi_csv");
                noise_required = !has_csv;
            }
            cfg.noise = parse_noise(root, noise_required);
            if (zeno) {
                cfg.system = parse_system(root, true, doc.contains("noise"));
                cfg.schedule = parse_schedule(root);
                if (cfg.noise && cfg.system && !cfg.system->noise_coupling) {
                    root.fail("noise", "unused: system.noise_coupling is not set");
                }
            }
            if (sensing) {
                cfg.sensing = parse_sensing(root, true);
                if (cfg.mode != RunMode::Sense) cfg.reconstruct = parse_reconstruct(root, base_dir);
                if (cfg.noise && !cfg.noise->has_smooth_spectrum() && cfg.mode != RunMode::Sense) {
                    root.fail("noise", "reconstruction needs a noise model with a continuous spectrum");
                }
                if (cfg.reconstruct && cfg.reconstruct->source == ChiSource::MonteCarlo && cfg.sensing &&
                    !cfg.sensing->monte_carlo && !cfg.reconstruct->chi_csv) {
                    root.fail("reconstruct.chi_source", "monte_carlo requires sensing.monte_carlo = true");
                }
            }
            // Blocks that the mode does not use are still checked for typos
            // but otherwise rejected, so a config never silently ignores input.
            for (const char* block : {"system", "schedule", "sensing", "reconstruct"}) {
                const bool used = (zeno && (std::string(block) == "system" || std::string(block) == "schedule")) ||
                                  (sensing && std::string(block) == "sensing") ||
                                  ((cfg.mode == RunMode::Reconstruct || cfg.mode == RunMode::End2End) &&
                                   std::string(block) == "reconstruct");
                if (!used && root.get(block, false)) root.fail(block, std::string("not used in mode ") + *mode);
            }
        } else {
            for (const char* block : {"system", "noise", "schedule", "sensing", "reconstruct"}) root.get(block, false);
        }
        cfg.output = parse_output(root, base_dir);
    }
    if (!failures.empty()) throw ValidationError(failures);
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.parent_path());
}

ZenoRun make_zeno_run(const ExperimentConfig& config) {
    if (!config.system || !config.schedule) {
        throw Error(ErrorCode::Validation, "zeno run needs system and schedule blocks");
    }
    const SystemConfig& s = *config.system;
    const ScheduleConfig& sch = *config.schedule;

    std::optional<ControlTerm> control;
    if (s.control) {
        const ControlConfig c = *s.control;
        control = ControlTerm{[c](double t) { return c.amplitude * std::cos(c.omega * t + c.phase); }, c.op};
    }
    std::optional<NoiseCoupling> noise;
    if (s.noise_coupling) {
        if (!config.noise) throw Error(ErrorCode::Validation, "system.noise_coupling requires a noise block");
        noise = NoiseCoupling{*s.noise_coupling, *config.noise};
    }
    return ZenoRun{HamiltonianSpec(s.h0, control, noise),
                   MeasurementOperator::projector(s.projector, "P"),
                   DensityMatrix(s.initial_state),
                   sch.intervals,
                   sch.m,
                   sch.n_traj,
                   sch.dt,
                   config.master_seed};
}

}  // namespace seqctl
