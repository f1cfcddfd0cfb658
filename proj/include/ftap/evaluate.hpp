#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ftap/classify.hpp"
#include "ftap/types.hpp"

namespace ftap {

struct SubjectPrediction {
    std::string person_id;
    Label truth = Label::HC;
    Label predicted = Label::HC;
    ClassScores votes{};         // trial counts per predicted label
    ClassScores summed_score{};  // summed predicted-class probability per label
    std::size_t trials = 0;
};

/// Modal label over one subject's trials; frequency ties go to the label with
/// the larger summed predicted-class probability, then to class order.
SubjectPrediction aggregate_subject(std::span<const Prediction> trials);

/// One entry per subject, in order of first appearance.
std::vector<SubjectPrediction> aggregate_subjects(const std::vector<Prediction>& predictions);

// rows = truth, columns = predicted, class order
using ConfusionMatrix = Eigen::Matrix<std::int64_t, 4, 4>;

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted);
ConfusionMatrix confusion(const std::vector<Prediction>& predictions);
ConfusionMatrix confusion(const std::vector<SubjectPrediction>& subjects);

// Percentages in [0, 100].
struct MetricSet {
    double accuracy = 0.0;
    std::array<double, kNumClasses> precision{};
    std::array<double, kNumClasses> recall{};
    std::array<double, kNumClasses> f1{};
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double weighted_precision = 0.0;  // weighted by true-class support
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    std::vector<std::string> warnings;
};

MetricSet metrics(const ConfusionMatrix& cm);

/// Rounds half away from zero at the given number of decimals.
double round_half_up(double value, int decimals = 2);

struct EvaluationReport {
    std::string classifier;  // "svm" or "knn"
    nlohmann::json classifier_params;
    std::vector<std::string> features;
    std::vector<Prediction> trials;
    std::vector<SubjectPrediction> subjects;
    ConfusionMatrix cm_data = ConfusionMatrix::Zero();
    ConfusionMatrix cm_subject = ConfusionMatrix::Zero();
    MetricSet per_data;
    MetricSet per_subject;
};

EvaluationReport build_report(std::vector<Prediction> predictions, std::string classifier, nlohmann::json params,
                              std::vector<std::string> features);

nlohmann::json report_json(const EvaluationReport& report);
std::string confusion_csv(const ConfusionMatrix& cm);
std::string metrics_csv(const EvaluationReport& report);
std::string confusion_svg(const ConfusionMatrix& cm, const std::string& title);

/// Writes report.json, predictions.csv, subjects.csv, confusion_{data,subject}.{csv,svg}
/// and metrics.csv into `dir`.
void emit_report(const EvaluationReport& report, const std::filesystem::path& dir);

}  // namespace ftap
