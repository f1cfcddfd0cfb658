#include "ftap/pipeline.hpp"

#include <algorithm>
#include <cctype>

#include <spdlog/spdlog.h>

#include "ftap/ingest.hpp"
#include "ftap/io.hpp"

namespace ftap {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

Kernel parse_kernel(const std::string& text)
{
    const auto k = lower(text);
    if (k == "rbf") return Kernel::RBF;
    if (k == "sigmoid") return Kernel::Sigmoid;
    throw Error(ErrorKind::Config, "unknown kernel '" + text + "'");
}

ClassifierKind parse_classifier(const std::string& text)
{
    const auto k = lower(text);
    if (k == "svm") return ClassifierKind::Svm;
    if (k == "knn") return ClassifierKind::Knn;
    throw Error(ErrorKind::Config, "unknown classifier '" + text + "' (expected svm or knn)");
}

std::string classifier_name(ClassifierKind k)
{
    return k == ClassifierKind::Svm ? "svm" : "knn";
}

template <class T>
void read_key(const nlohmann::json& obj, const char* key, T& target)
{
    if (!obj.is_object() || !obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("config key '") + key + "': " + e.what());
    }
}

const nlohmann::json& section(const nlohmann::json& doc, const char* key)
{
    static const nlohmann::json empty = nlohmann::json::object();
    if (!doc.contains(key)) return empty;
    const auto& s = doc.at(key);
    if (!s.is_object()) throw Error(ErrorKind::Config, std::string("config section '") + key + "' must be an object");
    return s;
}

fs::path cache_dir(const RunConfig& cfg)
{
    return cfg.out_dir / "cache";
}

bool cache_matches(const RunConfig& cfg, const fs::path& artifact, const std::string& name, const std::string& key)
{
    if (!cfg.use_cache) return false;
    const auto key_file = cache_dir(cfg) / (name + ".key");
    if (!fs::exists(artifact) || !fs::exists(key_file)) return false;
    return io::trim(io::read_text(key_file)) == key;
}

void store_key(const RunConfig& cfg, const std::string& name, const std::string& key)
{
    io::write_text(cache_dir(cfg) / (name + ".key"), key + "\n");
}

nlohmann::json selection_config_json(const RunConfig& cfg)
{
    const auto full = config_to_json(cfg);
    return {{"selection", full.at("selection")}, {"classifier", full.at("classifier")}};
}

std::string selection_key(const RunConfig& cfg, const std::string& features_csv)
{
    return io::sha256_hex(io::sha256_hex(features_csv) + selection_config_json(cfg).dump());
}

std::vector<Label> labels_of(const FeatureMatrix& m)
{
    std::vector<Label> y;
    y.reserve(m.rows.size());
    for (const auto& r : m.rows) y.push_back(r.label);
    return y;
}

// Significant features whose adjusted p clears the threshold, projected onto
// principal components of their standardized values.
FeatureMatrix fdr_pca_candidates(const RunConfig& cfg, const FeatureMatrix& features, SelectionReport& report)
{
    report.fdr_survivors.clear();
    for (const auto& name : report.significant)
        if (report.row(name).p_adj < cfg.fdr_threshold) report.fdr_survivors.push_back(name);

    FeatureMatrix out;
    out.rows = features.rows;
    if (report.fdr_survivors.empty() || features.rows.size() < 2) {
        out.values.resize(static_cast<Eigen::Index>(out.rows.size()), 0);
        return out;
    }
    const Eigen::MatrixXd raw = features.select(report.fdr_survivors);
    const Eigen::MatrixXd standardized = standardize_fit(raw).apply(raw);
    const auto cap = std::min<Eigen::Index>(raw.cols(), raw.rows() - 1);
    const Eigen::Index m = cfg.pca_components > 0 ? std::min<Eigen::Index>(cfg.pca_components, raw.cols()) : cap;
    const auto pca = pca_project(standardized, std::max<Eigen::Index>(m, 1));
    if (pca.rank_deficient) report.warnings.push_back("PCA returned fewer components than requested");
    out.values = pca.scores;
    for (Eigen::Index j = 0; j < pca.scores.cols(); ++j) out.columns.push_back("PC" + std::to_string(j + 1));
    return out;
}

std::vector<std::string> candidate_order(const SelectionReport& report, const FeatureMatrix& candidates)
{
    if (report.fdr_stage) return candidates.columns;
    return report.significant;
}

nlohmann::json hp_json(const Hyperparams& hp)
{
    return {{"kernel", to_string(hp.kernel)}, {"C", hp.c}, {"gamma", hp.gamma}};
}

}  // namespace

void RunConfig::validate() const
{
    if (!std::isfinite(alpha) || alpha < 0.0) throw Error(ErrorKind::Config, "alpha must be a finite value >= 0");
    if (!std::isfinite(fdr_threshold) || fdr_threshold < 0.0 || fdr_threshold > 1.0)
        throw Error(ErrorKind::Config, "fdr threshold must lie in [0, 1]");
    if (pca_components < 0) throw Error(ErrorKind::Config, "pca_components must be >= 0");
    if (sffs_max_size < 1) throw Error(ErrorKind::Config, "sffs max_size must be >= 1");
    if (search_trials < 1) throw Error(ErrorKind::Config, "search trials must be >= 1");
    if (knn_k < 1) throw Error(ErrorKind::Config, "knn k must be >= 1");
    if (!(sffs_c >= kParamMin && sffs_c <= kParamMax)) throw Error(ErrorKind::Config, "sffs C must lie in [0.01, 100]");
    if (sffs_gamma != 0.0 && !(sffs_gamma >= kParamMin && sffs_gamma <= kParamMax))
        throw Error(ErrorKind::Config, "sffs gamma must be \"auto\" or lie in [0.01, 100]");
    if (jobs < 1) throw Error(ErrorKind::Config, "jobs must be >= 1");
}

RunConfig config_from_json(const nlohmann::json& doc, RunConfig cfg)
{
    if (!doc.is_object()) throw Error(ErrorKind::Config, "config document must be an object");
    const auto& paths = section(doc, "paths");
    std::string text;
    if (paths.contains("manifest")) {
        read_key(paths, "manifest", text);
        cfg.manifest = text;
    }
    if (paths.contains("out")) {
        read_key(paths, "out", text);
        cfg.out_dir = text;
    }

    const auto& sel = section(doc, "selection");
    read_key(sel, "alpha", cfg.alpha);
    read_key(sel, "sffs_max_size", cfg.sffs_max_size);
    const auto& fdr = section(sel, "fdr");
    read_key(fdr, "enabled", cfg.fdr_stage);
    read_key(fdr, "threshold", cfg.fdr_threshold);
    read_key(fdr, "pca_components", cfg.pca_components);

    const auto& search = section(doc, "search");
    read_key(search, "trials", cfg.search_trials);
    read_key(search, "seed", cfg.seed);

    const auto& clf = section(doc, "classifier");
    if (clf.contains("kind")) {
        read_key(clf, "kind", text);
        cfg.classifier = parse_classifier(text);
    }
    read_key(clf, "knn_k", cfg.knn_k);
    if (clf.contains("sffs_kernel")) {
        read_key(clf, "sffs_kernel", text);
        cfg.sffs_kernel = parse_kernel(text);
    }
    read_key(clf, "sffs_c", cfg.sffs_c);
    if (clf.contains("sffs_gamma")) {
        const auto& g = clf.at("sffs_gamma");
        if (g.is_string() && lower(g.get<std::string>()) == "auto") {
            cfg.sffs_gamma = 0.0;
        } else if (g.is_number()) {
            cfg.sffs_gamma = g.get<double>();
        } else {
            throw Error(ErrorKind::Config, "sffs_gamma must be \"auto\" or a number");
        }
    }

    read_key(doc, "jobs", cfg.jobs);
    read_key(doc, "cache", cfg.use_cache);
    return cfg;
}

nlohmann::json config_to_json(const RunConfig& cfg)
{
    return {
        {"paths", {{"manifest", cfg.manifest.generic_string()}, {"out", cfg.out_dir.generic_string()}}},
        {"selection",
         {{"alpha", cfg.alpha},
          {"sffs_max_size", cfg.sffs_max_size},
          {"fdr", {{"enabled", cfg.fdr_stage}, {"threshold", cfg.fdr_threshold}, {"pca_components", cfg.pca_components}}}}},
        {"search", {{"trials", cfg.search_trials}, {"seed", cfg.seed}}},
        {"classifier",
         {{"kind", classifier_name(cfg.classifier)},
          {"knn_k", cfg.knn_k},
          {"sffs_kernel", to_string(cfg.sffs_kernel)},
          {"sffs_c", cfg.sffs_c},
          {"sffs_gamma", cfg.sffs_gamma == 0.0 ? nlohmann::json("auto") : nlohmann::json(cfg.sffs_gamma)}}},
        {"jobs", cfg.jobs},
        {"cache", cfg.use_cache},
    };
}

RunConfig load_config(const fs::path& path, RunConfig base)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Config, "cannot parse config " + path.string() + ": " + e.what());
    }
    auto cfg = config_from_json(doc, std::move(base));
    // relative paths in a config file are relative to the file
    const auto dir = path.parent_path();
    if (!cfg.manifest.empty() && cfg.manifest.is_relative() && doc.contains("paths") && doc["paths"].contains("manifest"))
        cfg.manifest = dir / cfg.manifest;
    if (cfg.out_dir.is_relative() && doc.contains("paths") && doc["paths"].contains("out")) cfg.out_dir = dir / cfg.out_dir;
    return cfg;
}

ClassifierSpec sffs_classifier(const RunConfig& cfg, std::size_t subset_size)
{
    ClassifierSpec spec;
    spec.kind = cfg.classifier;
    spec.k = cfg.knn_k;
    spec.hp.kernel = cfg.sffs_kernel;
    spec.hp.c = cfg.sffs_c;
    const double auto_gamma = 1.0 / static_cast<double>(std::max<std::size_t>(subset_size, 1));
    spec.hp.gamma = cfg.sffs_gamma > 0.0 ? cfg.sffs_gamma : std::clamp(auto_gamma, kParamMin, kParamMax);
    return spec;
}

double loso_accuracy(const FeatureMatrix& matrix, const std::vector<std::string>& subset, const ClassifierSpec& spec)
{
    return accuracy(loso_cv(matrix, subset, spec, 1));
}

std::string input_hash(const fs::path& manifest)
{
    const auto entries = read_manifest(manifest);
    std::string acc = io::sha256_hex(io::read_text(manifest));
    const auto base = manifest.parent_path();
    for (const auto& e : entries) {
        const auto p = e.path.is_absolute() ? e.path : base / e.path;
        acc += io::sha256_hex(io::read_text(p));
    }
    return io::sha256_hex(acc);
}

FeatureMatrix stage_features(const RunConfig& cfg, bool* from_cache)
{
    if (cfg.manifest.empty()) throw Error(ErrorKind::Config, "no manifest given");
    const auto key = input_hash(cfg.manifest);
    const auto csv_path = cfg.out_dir / "features.csv";
    if (cache_matches(cfg, csv_path, "features", key)) {
        spdlog::info("features: reusing {}", csv_path.string());
        if (from_cache) *from_cache = true;
        return parse_feature_matrix(io::read_text(csv_path));
    }
    if (from_cache) *from_cache = false;
    const auto cohort = load_cohort(cfg.manifest);
    FeaturizeStats stats;
    auto matrix = featurize_cohort(cohort, cfg.jobs, &stats);
    spdlog::info("features: {} trials x {} features", matrix.rows.size(), matrix.columns.size());
    io::write_text(csv_path, serialize_feature_matrix(matrix));
    store_key(cfg, "features", key);
    return matrix;
}

SelectionOutcome stage_select(const RunConfig& cfg, const FeatureMatrix& features, bool* from_cache)
{
    const auto json_path = cfg.out_dir / "selection.json";
    const auto key = selection_key(cfg, serialize_feature_matrix(features));

    SelectionOutcome out;
    if (cache_matches(cfg, json_path, "selection", key)) {
        spdlog::info("selection: reusing {}", json_path.string());
        if (from_cache) *from_cache = true;
        out.report = parse_selection_report_json(io::read_text(json_path));
        if (out.report.fdr_stage) {
            auto scratch = out.report;
            out.candidates_matrix = fdr_pca_candidates(cfg, features, scratch);
        } else {
            out.candidates_matrix = features;
        }
        return out;
    }
    if (from_cache) *from_cache = false;

    out.report = rank_and_filter(features, cfg.alpha);
    out.report.fdr_stage = cfg.fdr_stage;
    out.report.fdr_threshold = cfg.fdr_threshold;
    spdlog::info("selection: {} of {} features significant at alpha {}", out.report.significant.size(),
                 features.columns.size(), cfg.alpha);

    out.candidates_matrix = cfg.fdr_stage ? fdr_pca_candidates(cfg, features, out.report) : features;
    const auto candidates = candidate_order(out.report, out.candidates_matrix);

    if (candidates.empty()) {
        out.report.warnings.push_back("no candidate features survived filtering; nothing to select");
        spdlog::warn("selection: no candidate features survived filtering");
    } else {
        const auto& matrix = out.candidates_matrix;
        const SubsetObjective objective = [&](const std::vector<std::string>& subset) {
            return loso_accuracy(matrix, subset, sffs_classifier(cfg, subset.size()));
        };
        out.report.sffs = sffs(candidates, objective, cfg.sffs_max_size, cfg.jobs);
        spdlog::info("selection: SFFS kept {} features, LOSO accuracy {:.4f}", out.report.sffs.subset.size(),
                     out.report.sffs.score);
    }

    io::write_text(json_path, selection_report_json(out.report));
    io::write_text(cfg.out_dir / "selection.csv", selection_report_csv(out.report));
    store_key(cfg, "selection", key);
    return out;
}

RunOutcome stage_evaluate(const RunConfig& cfg, FeatureMatrix features, SelectionOutcome selection)
{
    RunOutcome outcome;
    const auto& matrix = selection.candidates_matrix;
    const auto& subset = selection.report.sffs.subset;
    if (subset.empty()) spdlog::warn("evaluate: empty feature subset; predictions fall back to class frequencies");

    ClassifierSpec spec;
    spec.kind = cfg.classifier;
    spec.k = cfg.knn_k;
    nlohmann::json params;
    if (cfg.classifier == ClassifierKind::Svm) {
        const auto objective = [&](const Hyperparams& hp) {
            ClassifierSpec s;
            s.hp = hp;
            return loso_accuracy(matrix, subset, s);
        };
        SearchConfig sc;
        sc.trials = cfg.search_trials;
        sc.seed = cfg.seed;
        auto search = hyperparameter_search(objective, sc, cfg.jobs);
        spec.hp = search.best;
        spdlog::info("search: best {} C={} gamma={} LOSO accuracy {:.4f}", to_string(search.best.kernel), search.best.c,
                     search.best.gamma, search.best_score);

        auto trials = nlohmann::json::array();
        for (const auto& t : search.trials) {
            auto j = hp_json(t.hp);
            j["score"] = std::isfinite(t.score) ? nlohmann::json(t.score) : nlohmann::json(nullptr);
            trials.push_back(j);
        }
        io::write_text(cfg.out_dir / "search.json",
                       nlohmann::json{{"seed", cfg.seed}, {"best", hp_json(search.best)}, {"best_score", search.best_score},
                                      {"trials", trials}}
                               .dump(2) +
                           "\n");
        params = hp_json(spec.hp);
        outcome.search = std::move(search);
    } else {
        params = {{"k", cfg.knn_k}};
    }

    auto predictions = loso_cv(matrix, subset, spec, cfg.jobs);
    auto report = build_report(std::move(predictions), classifier_name(cfg.classifier), params, subset);
    emit_report(report, cfg.out_dir);

    if (cfg.classifier == ClassifierKind::Svm && !subset.empty()) {
        const auto model = fit_svm(matrix.select(subset), labels_of(matrix), spec.hp, subset);
        io::write_text(cfg.out_dir / "model.json", svm_model_json(model));
    }
    spdlog::info("evaluate: per-data accuracy {:.2f}%, per-subject accuracy {:.2f}%", report.per_data.accuracy,
                 report.per_subject.accuracy);

    outcome.features = std::move(features);
    outcome.selection = std::move(selection);
    outcome.evaluation = std::move(report);
    return outcome;
}

RunOutcome run_features(const RunConfig& cfg)
{
    cfg.validate();
    RunOutcome out;
    out.features = stage_features(cfg, &out.features_from_cache);
    write_run_meta(cfg, "features");
    return out;
}

RunOutcome run_select(const RunConfig& cfg)
{
    cfg.validate();
    RunOutcome out;
    out.features = stage_features(cfg, &out.features_from_cache);
    out.selection = stage_select(cfg, out.features, &out.selection_from_cache);
    write_run_meta(cfg, "select");
    return out;
}

RunOutcome run_all(const RunConfig& cfg)
{
    cfg.validate();
    bool features_cached = false, selection_cached = false;
    auto features = stage_features(cfg, &features_cached);
    auto selection = stage_select(cfg, features, &selection_cached);
    auto out = stage_evaluate(cfg, std::move(features), std::move(selection));
    out.features_from_cache = features_cached;
    out.selection_from_cache = selection_cached;
    write_run_meta(cfg, "run");
    return out;
}

const std::vector<std::string>& pinned_deviations()
{
    static const std::vector<std::string> list = {
        "hyperparameters chosen by seeded random search (kernel uniform over rbf/sigmoid, C and gamma log-uniform over "
        "[0.01, 100]) instead of a TPE optimizer",
        "hyperparameter search scored on LOSO accuracy of the whole cohort, then reused for the reported LOSO run",
        "SFFS wraps a baseline RBF SVM (C = 1, gamma = 1 / subset size) and scores subsets by pooled LOSO trial accuracy",
        "SFFS backtracks only on strict improvement, so every accepted step raises the score",
        "features standardized per training fold (population std); zero-variance columns centered only",
        "one-vs-one SVM with probabilities from a softmax over summed pairwise margins",
        "sigmoid kernel coef0 = 0",
        "SMO solver: second-order working set selection, tolerance 1e-3, capped at 1e7 kernel evaluations per pair",
        "autocorrelation normalized by the lag-0 sum of squares",
        "spectral features exclude the DC bin; rhythm is the dominant bin's share of total power",
        "AMPD peak detection on the linearly detrended signal with a strict all-zero scalogram column rule",
        "noise variance estimated from the median absolute second difference (MAD / 0.6745)^2 / 6",
        "FDR adjustment uses the monotone step-up running minimum",
        "subject tie-break by summed predicted-class probability, then class order",
        "feature count fixed at 41 per signal x 18 signals = 738",
    };
    return list;
}

void write_run_meta(const RunConfig& cfg, const std::string& stage)
{
    auto hashes = nlohmann::json::object();
    if (!cfg.manifest.empty()) {
        hashes["manifest"] = io::sha256_hex(io::read_text(cfg.manifest));
        hashes["inputs"] = input_hash(cfg.manifest);
    }
    nlohmann::json meta = {
        {"tool", "ftap"},
        {"version", kVersion},
        {"stage", stage},
        {"seed", cfg.seed},
        {"config", config_to_json(cfg)},
        {"input_hashes", hashes},
        {"versions",
         {{"ftap", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__}}},
        {"deviations", pinned_deviations()},
    };
    io::write_text(cfg.out_dir / "run_meta.json", meta.dump(2) + "\n");
}

}  // namespace ftap
