// ftap: finger-tapping differential diagnosis pipeline.

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ftap/ingest.hpp"
#include "ftap/pipeline.hpp"
#include "ftap/synthetic.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string manifest;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<double> alpha;
    std::string classifier;
    std::optional<std::size_t> jobs;
    bool no_cache = false;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "JSON config file (default: $FTAP_CONFIG)");
    cmd->add_option("--manifest", o.manifest, "Manifest CSV");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--seed", o.seed, "Search seed");
    cmd->add_option("--trials", o.trials, "Search trials");
    cmd->add_option("--alpha", o.alpha, "ANOVA significance level");
    cmd->add_option("--classifier", o.classifier, "svm or knn");
    cmd->add_option("--jobs", o.jobs, "Worker threads");
    cmd->add_flag("--no-cache", o.no_cache, "Recompute every stage");
}

ftap::RunConfig resolve(const Overrides& o)
{
    ftap::RunConfig cfg;
    std::string path = o.config;
    if (path.empty())
        if (const char* env = std::getenv(std::string(ftap::kConfigEnvVar).c_str())) path = env;
    if (!path.empty()) cfg = ftap::load_config(path);

    nlohmann::json flags = nlohmann::json::object();
    if (!o.manifest.empty()) cfg.manifest = o.manifest;
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.search_trials = *o.trials;
    if (o.alpha) cfg.alpha = *o.alpha;
    if (!o.classifier.empty()) flags["classifier"]["kind"] = o.classifier;
    if (o.jobs) cfg.jobs = *o.jobs;
    if (o.no_cache) cfg.use_cache = false;
    cfg = ftap::config_from_json(flags, cfg);
    cfg.validate();
    if (cfg.manifest.empty()) throw ftap::Error(ftap::ErrorKind::Config, "no manifest: pass --manifest or set paths.manifest");
    return cfg;
}

int cmd_validate(const Overrides& o)
{
    std::filesystem::path manifest = o.manifest;
    if (manifest.empty()) manifest = resolve(o).manifest;
    const auto checks = ftap::validate_manifest(manifest);
    if (checks.empty()) throw ftap::Error(ftap::ErrorKind::Config, "manifest lists no trials");
    std::size_t failed = 0;
    for (const auto& c : checks) {
        if (c.ok) {
            std::cout << "PASS " << c.path.generic_string() << '\n';
        } else {
            ++failed;
            std::cout << "FAIL " << c.path.generic_string() << ": " << c.reason << '\n';
        }
    }
    std::cout << checks.size() - failed << " of " << checks.size() << " files passed\n";
    return failed == 0 ? 0 : 1;
}

int cmd_select(const Overrides& o)
{
    const auto out = ftap::run_select(resolve(o));
    const auto& report = out.selection->report;
    std::cout << report.significant.size() << " significant features\n";
    if (report.sffs.subset.empty()) {
        std::cout << "no features selected\n";
    } else {
        std::cout << "selected " << report.sffs.subset.size() << " features, LOSO accuracy " << report.sffs.score << '\n';
        for (const auto& f : report.sffs.subset) std::cout << "  " << f << '\n';
    }
    return 0;
}

int cmd_evaluate(const Overrides& o)
{
    const auto cfg = resolve(o);
    const auto out = ftap::run_all(cfg);
    const auto& r = *out.evaluation;
    std::cout << "per-data accuracy    " << ftap::round_half_up(r.per_data.accuracy) << "%\n";
    std::cout << "per-subject accuracy " << ftap::round_half_up(r.per_subject.accuracy) << "%\n";
    std::cout << "reports in " << cfg.out_dir.generic_string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Finger-tapping gyroscope pipeline for PD / PSP / MSA / HC classification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(ftap::kVersion));
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    Overrides o;
    auto* validate = app.add_subcommand("validate", "Check every trial file listed in a manifest");
    auto* features = app.add_subcommand("features", "Extract the feature matrix");
    auto* select = app.add_subcommand("select", "ANOVA filter and SFFS selection");
    auto* evaluate = app.add_subcommand("evaluate", "Search, LOSO evaluation and reports");
    auto* run = app.add_subcommand("run", "Full pipeline");
    for (auto* cmd : {validate, features, select, evaluate, run}) add_common(cmd, o);

    std::string synth_dir;
    std::size_t synth_subjects = 4, synth_trials = 3;
    std::uint64_t synth_seed = 1;
    auto* synth = app.add_subcommand("synth", "Write a synthetic demo cohort");
    synth->add_option("dir", synth_dir, "Target directory")->required();
    synth->add_option("--subjects", synth_subjects, "Subjects per class");
    synth->add_option("--trials", synth_trials, "Trials per subject");
    synth->add_option("--seed", synth_seed, "Generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    spdlog::set_pattern("[%l] %v");

    try {
        if (*validate) return cmd_validate(o);
        if (*features) {
            const auto out = ftap::run_features(resolve(o));
            std::cout << out.features.rows.size() << " x " << out.features.columns.size() << " feature matrix\n";
            return 0;
        }
        if (*select) return cmd_select(o);
        if (*evaluate || *run) return cmd_evaluate(o);
        if (*synth) {
            ftap::synthetic::CohortSpec spec;
            spec.subjects_per_class = synth_subjects;
            spec.trials_per_subject = synth_trials;
            spec.seed = synth_seed;
            const auto manifest = ftap::synthetic::write_cohort(ftap::synthetic::tapping_cohort(spec), synth_dir);
            std::cout << manifest.generic_string() << '\n';
            return 0;
        }
    } catch (const ftap::Error& e) {
        spdlog::error("{}: {}", ftap::to_string(e.kind()), e.what());
        return ftap::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 2;
}
