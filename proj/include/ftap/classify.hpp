#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ftap/features.hpp"
#include "ftap/types.hpp"

namespace ftap {

enum class Kernel { RBF, Sigmoid };

std::string_view to_string(Kernel k);

inline constexpr double kParamMin = 0.01;
inline constexpr double kParamMax = 100.0;

struct Hyperparams {
    Kernel kernel = Kernel::RBF;
    double c = 1.0;
    double gamma = 1.0;

    // Throws Config when C or gamma leave [0.01, 100].
    void validate() const;
    bool operator==(const Hyperparams&) const = default;
};

/// Kernel matrix between the rows of a and b.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Kernel kernel, double gamma);

// ---- standardization -------------------------------------------------------

struct Standardizer {
    SeriesXd mean;
    SeriesXd scale;  // 1 for zero-variance columns

    Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
    Eigen::MatrixXd inverse(const Eigen::MatrixXd& rows) const;
};

/// Column mean and population std of the training rows.
Standardizer standardize_fit(const Eigen::MatrixXd& train);

// ---- binary SMO -------------------------------------------------------------

inline constexpr double kKktTolerance = 1e-3;
inline constexpr double kMaxKernelEvaluations = 1e7;

struct BinarySolution {
    SeriesXd alpha;
    double rho = 0.0;
    long iterations = 0;
};

/// Error thrown when SMO hits its iteration cap; carries the last iterate.
class SolverNonconvergence : public Error {
public:
    SolverNonconvergence(const std::string& what, BinarySolution best)
        : Error(ErrorKind::SolverNonconvergence, what), best_(std::move(best)) {}
    const BinarySolution& best_iterate() const { return best_; }

private:
    BinarySolution best_;
};

/// Soft-margin C-SVC dual solved by SMO with second-order working-set
/// selection. `y` holds +1/-1; decision f(x) = sum_i y_i a_i K(x_i, x) - rho.
BinarySolution solve_binary_svm(const Eigen::MatrixXd& gram, const SeriesXd& y, double c, double tolerance = kKktTolerance);

/// Largest KKT violation m(a) - M(a) of a dual solution (<= tolerance at convergence).
double max_kkt_violation(const Eigen::MatrixXd& gram, const SeriesXd& y, const SeriesXd& alpha, double c);

// ---- multiclass models ------------------------------------------------------

using ClassScores = std::array<double, kNumClasses>;

struct PairwiseMachine {
    Label positive = Label::HC;  // earlier class in class order
    Label negative = Label::PD;
    Eigen::MatrixXd support;     // standardized support vectors
    SeriesXd coef;               // y_i * alpha_i
    double rho = 0.0;
};

struct SvmModel {
    Hyperparams hp;
    std::vector<std::string> features;
    Standardizer scaler;
    std::vector<Label> classes;  // classes seen in training, class order
    std::vector<PairwiseMachine> machines;

    double decision(const PairwiseMachine& m, const Eigen::Ref<const SeriesXd>& standardized_row) const;
};

struct Prediction {
    std::string person_id;
    std::string trial_id;
    Label truth = Label::HC;
    Label predicted = Label::HC;
    ClassScores proba{};
};

/// One-vs-one SVM on already standardized rows; the returned model carries an identity scaler.
SvmModel train_svm(const Eigen::MatrixXd& x, const std::vector<Label>& y, const Hyperparams& hp);

/// Fits the standardizer on `x` and trains on the standardized rows.
SvmModel fit_svm(const Eigen::MatrixXd& x, const std::vector<Label>& y, const Hyperparams& hp,
                 std::vector<std::string> features = {});

/// Softmax over per-class summed signed margins; absent classes get 0.
ClassScores predict_proba(const SvmModel& model, const Eigen::Ref<const SeriesXd>& raw_row);
std::vector<ClassScores> predict_proba_rows(const SvmModel& model, const Eigen::MatrixXd& raw_rows);

/// First maximum in class order.
Label argmax_class(const ClassScores& scores);

struct KnnModel {
    int k = 5;
    Standardizer scaler;
    Eigen::MatrixXd train;  // standardized
    std::vector<Label> labels;
};

KnnModel train_knn(const Eigen::MatrixXd& x, const std::vector<Label>& y, int k);
/// Neighbor vote fractions; neighbors ordered by distance, then row index.
ClassScores predict_knn(const KnnModel& model, const Eigen::Ref<const SeriesXd>& raw_row);

// ---- search and cross-validation ---------------------------------------------

struct SearchConfig {
    int trials = 200;
    std::uint64_t seed = 42;
};

struct SearchTrial {
    Hyperparams hp;
    double score = 0.0;
};

struct SearchResult {
    Hyperparams best;
    double best_score = 0.0;
    std::vector<SearchTrial> trials;
};

/// Seeded random search: kernel uniform over {RBF, Sigmoid}; C and gamma
/// log-uniform over [0.01, 100]. Ties go to the earliest trial.
SearchResult hyperparameter_search(const std::function<double(const Hyperparams&)>& objective, const SearchConfig& cfg,
                                   std::size_t jobs = 1);

enum class ClassifierKind { Svm, Knn };

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::Svm;
    Hyperparams hp;
    int k = 5;
};

/// Leave-one-subject-out predictions in matrix row order. An empty subset
/// predicts each fold's training class frequencies.
std::vector<Prediction> loso_cv(const FeatureMatrix& matrix, const std::vector<std::string>& subset,
                                const ClassifierSpec& spec, std::size_t jobs = 1);

double accuracy(const std::vector<Prediction>& predictions);

std::string predictions_csv(const std::vector<Prediction>& predictions);
std::string svm_model_json(const SvmModel& model);
SvmModel parse_svm_model_json(std::string_view text);

}  // namespace ftap
