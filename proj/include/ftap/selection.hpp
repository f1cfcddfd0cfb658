#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ftap/features.hpp"
#include "ftap/types.hpp"

namespace ftap {

// ---- F distribution -------------------------------------------------------

/// Regularized incomplete beta I_x(a, b). `xc` must equal 1 - x; passing it
/// separately keeps precision when x is within rounding of 1.
double incomplete_beta(double a, double b, double x, double xc);

/// P(F > f) for an F(d1, d2) variate.
double f_upper_tail(double f, double d1, double d2);

struct FTest {
    double f = 0.0;
    double p = 1.0;
    double df_between = 0.0;
    double df_within = 0.0;
};

/// One-way ANOVA over nonempty groups. Zero within-group spread with distinct
/// group means is perfect separation (F = inf, p = 0); zero spread everywhere
/// raises DegenerateGroups.
FTest anova_f(std::span<const SeriesXd> groups);

// ---- filtering ------------------------------------------------------------

struct AnovaRow {
    std::string feature;
    double f = 0.0;
    double p = 1.0;
    double p_adj = 1.0;
    int rank = 0;  // 1-based, ascending p, ties by larger F then registry order
    bool degenerate = false;
};

/// Rank-scaled FDR adjustment p * k / i (i = ascending rank), made monotone by
/// a running minimum from the largest rank down. Returned in input order.
std::vector<double> fdr_adjust(std::span<const double> pvalues);

struct PcaProjection {
    Eigen::MatrixXd components;  // features x m, unit columns
    SeriesXd explained_variance;
    SeriesXd mean;
    Eigen::MatrixXd scores;      // rows x m
    bool rank_deficient = false;

    Eigen::MatrixXd reconstruct() const;
};

/// Projects rows of `data` onto the top-m eigenvectors of its column covariance.
PcaProjection pca_project(const Eigen::MatrixXd& data, Eigen::Index m);

// ---- SFFS -----------------------------------------------------------------

inline constexpr double kFailedScore = -std::numeric_limits<double>::infinity();

enum class SffsAction { Start, Include, Exclude };

struct SffsStep {
    SffsAction action = SffsAction::Start;
    std::string feature;               // empty for Start
    std::vector<std::string> subset;   // in candidate order
    double score = 0.0;
};

struct SffsResult {
    std::vector<std::string> subset;
    double score = kFailedScore;
    std::vector<SffsStep> trace;
    std::vector<std::string> warnings;
};

using SubsetObjective = std::function<double(const std::vector<std::string>&)>;

/// Sequential forward floating selection. Every accepted step strictly
/// improves the objective, so the trace scores are increasing and the search
/// terminates. Objective exceptions score the subset as -inf.
SffsResult sffs(const std::vector<std::string>& candidates, const SubsetObjective& objective, std::size_t max_size,
                std::size_t jobs = 1);

// ---- report ---------------------------------------------------------------

struct SelectionReport {
    double alpha = 0.005;
    std::vector<AnovaRow> anova;             // registry order
    std::vector<std::string> significant;    // ascending p
    bool fdr_stage = false;
    double fdr_threshold = 0.8;
    std::vector<std::string> fdr_survivors;  // filled when the FDR stage runs
    SffsResult sffs;
    std::vector<std::string> warnings;

    const AnovaRow& row(const std::string& feature) const;
};

/// Per-feature ANOVA over the label groups; significant = p < alpha (alpha >= 1 keeps all).
SelectionReport rank_and_filter(const FeatureMatrix& matrix, double alpha);

std::string selection_report_json(const SelectionReport& report);
std::string selection_report_csv(const SelectionReport& report);
SelectionReport parse_selection_report_json(std::string_view text);

}  // namespace ftap
