#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ftap/classify.hpp"
#include "ftap/evaluate.hpp"
#include "ftap/features.hpp"
#include "ftap/selection.hpp"

namespace ftap {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr std::string_view kConfigEnvVar = "FTAP_CONFIG";

struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path out_dir = "ftap_out";

    double alpha = 0.005;
    bool fdr_stage = false;
    double fdr_threshold = 0.8;
    int pca_components = 0;  // 0: one per FDR survivor (capped at rows - 1)
    std::size_t sffs_max_size = 15;

    int search_trials = 200;
    std::uint64_t seed = 42;

    ClassifierKind classifier = ClassifierKind::Svm;
    int knn_k = 5;
    // SVM used inside SFFS before the search has run; gamma 0 means 1 / |subset|.
    Kernel sffs_kernel = Kernel::RBF;
    double sffs_c = 1.0;
    double sffs_gamma = 0.0;

    std::size_t jobs = 1;
    bool use_cache = true;

    void validate() const;
};

/// Parses the nested JSON config document; absent keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& doc, RunConfig base = {});
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

struct SelectionOutcome {
    SelectionReport report;
    FeatureMatrix candidates_matrix;  // the matrix SFFS and evaluation run on
};

struct RunOutcome {
    FeatureMatrix features;
    std::optional<SelectionOutcome> selection;
    std::optional<SearchResult> search;
    std::optional<EvaluationReport> evaluation;
    bool features_from_cache = false;
    bool selection_from_cache = false;
};

/// Classifier used to score subsets during SFFS.
ClassifierSpec sffs_classifier(const RunConfig& cfg, std::size_t subset_size);

/// Mean LOSO accuracy (pooled over trials) of `spec` on `subset`.
double loso_accuracy(const FeatureMatrix& matrix, const std::vector<std::string>& subset, const ClassifierSpec& spec);

// Stages; each reads its inputs from earlier stages (or the cache) and writes its artifacts to cfg.out_dir.
FeatureMatrix stage_features(const RunConfig& cfg, bool* from_cache = nullptr);
SelectionOutcome stage_select(const RunConfig& cfg, const FeatureMatrix& features, bool* from_cache = nullptr);
RunOutcome stage_evaluate(const RunConfig& cfg, FeatureMatrix features, SelectionOutcome selection);

RunOutcome run_features(const RunConfig& cfg);
RunOutcome run_select(const RunConfig& cfg);
RunOutcome run_all(const RunConfig& cfg);

/// Hash of the manifest and every trial file it lists.
std::string input_hash(const std::filesystem::path& manifest);

/// Modelling choices that differ from, or resolve gaps in, the published method.
const std::vector<std::string>& pinned_deviations();

void write_run_meta(const RunConfig& cfg, const std::string& stage);

}  // namespace ftap
