// seqctl: batch front end for the Zeno, sensing and reconstruction pipelines.
#include "seqctl/config.hpp"
#include "seqctl/errors.hpp"
#include "seqctl/orchestrator.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

namespace {

enum Exit { kOk = 0, kValidation = 2, kNumerical = 3, kIo = 4 };

int exit_code(seqctl::ErrorCategory c) {
    switch (c) {
    case seqctl::ErrorCategory::Validation: return kValidation;
    case seqctl::ErrorCategory::Numerical: return kNumerical;
    case seqctl::ErrorCategory::Io: return kIo;
    }
    return kNumerical;
}

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

void add_flags(CLI::App* sub, Flags& f, bool run_flags) {
    sub->add_option("--config", f.config, "Experiment config (JSON)")->required();
    if (!run_flags) return;
    sub->add_option("--seed", f.seed, "Override master_seed");
    sub->add_option("--workers", f.workers, "Worker threads (wall time only)")->check(CLI::PositiveNumber);
    sub->add_option("--out", f.out, "Override output directory");
    sub->add_option("--format", f.format, "Comma-separated subset of csv,json");
}

void apply_overrides(seqctl::ExperimentConfig& cfg, const Flags& f) {
    if (f.seed) cfg.master_seed = *f.seed;
    if (f.out) cfg.output.directory = *f.out;
    if (f.format) {
        cfg.output.csv = cfg.output.json = false;
        std::stringstream ss(*f.format);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == "csv") cfg.output.csv = true;
            else if (item == "json") cfg.output.json = true;
            else throw seqctl::ValidationError({"--format: unknown format '" + item + "'"});
        }
    }
}

std::optional<seqctl::RunMode> mode_of(const std::string& name) {
    if (name == "zeno") return seqctl::RunMode::Zeno;
    if (name == "sense") return seqctl::RunMode::Sense;
    if (name == "reconstruct") return seqctl::RunMode::Reconstruct;
    if (name == "end2end") return seqctl::RunMode::End2End;
    return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seqctl - measurement-sequence simulation, noise sensing and spectrum reconstruction"};
    app.set_version_flag("--version", seqctl::kVersion);
    app.require_subcommand(1, 1);

    Flags flags;
    for (const char* name : {"zeno", "sense", "reconstruct", "end2end"}) {
        add_flags(app.add_subcommand(name, std::string("Run the ") + name + " pipeline"), flags, true);
    }
    add_flags(app.add_subcommand("validate", "Check a config and print its digest"), flags, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        seqctl::ExperimentConfig cfg = seqctl::parse_config(flags.config);
        if (command == "validate") {
            std::cout << "valid " << seqctl::to_string(cfg.mode) << " config, sha256 " << cfg.digest << "\n";
            return kOk;
        }
        if (mode_of(command) != cfg.mode) {
            throw seqctl::ValidationError({"mode: config declares '" + std::string(seqctl::to_string(cfg.mode)) +
                                           "' but the '" + command + "' subcommand was used"});
        }
        apply_overrides(cfg, flags);
        const seqctl::RunManifest m = seqctl::run(cfg, {flags.workers});
        std::cout << seqctl::to_string(m.mode) << " run complete (seed " << m.master_seed << ") -> "
                  << m.directory.string() << "\n";
        for (const auto& f : m.files) std::cout << "  " << f.name << "  " << f.sha256 << "\n";
        std::cout << "  manifest.json\n";
        return kOk;
    } catch (const seqctl::ValidationError& e) {
        std::cerr << "validation failed:\n";
        for (const auto& f : e.failures()) std::cerr << "  " << f << "\n";
        return kValidation;
    } catch (const seqctl::Error& e) {
        std::cerr << "error [" << seqctl::to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
}
