#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ftap/ingest.hpp"
#include "ftap/kinematics.hpp"
#include "ftap/types.hpp"

namespace ftap {

inline constexpr std::size_t kFeaturesPerSignal = 41;
inline constexpr std::size_t kNumFeatures = kNumSignals * kFeaturesPerSignal;  // 738

// Per-signal feature order; the registry is signal-major over this list.
enum class Feature : int {
    RMS = 0, Min, Max, Avg, Std, Med,
    MaxFreq, Centroid,
    RMSMax, MinMax, MaxMax, AvgMax, StdMax, MedMax,
    NoiseVar, ConvEne, SNR,
    Var, AvgAbsChange,
    AutocorrLag1, AutocorrLag2, AutocorrLag3, AutocorrLag4, AutocorrLag5,
    AutocorrLag6, AutocorrLag7, AutocorrLag8, AutocorrLag9,
    Quant01, Quant02, Quant03, Quant04, Quant06, Quant07, Quant08, Quant09,
    Rhythm, Amplitude, Frequency, FrequencyStd, Slope,
};

inline constexpr std::array<std::string_view, kFeaturesPerSignal> kFeatureSuffixes{
    "RMS", "min", "max", "avg", "std", "median",
    "max_freq", "centroid",
    "RMS_of_max_taps", "min_of_max_taps", "max_of_max_taps", "avg_of_max_taps", "std_of_max_taps", "median_of_max_taps",
    "noise_var", "conv_ene", "SNR",
    "variance", "avg_abs_change",
    "autocorrelation_lag_1", "autocorrelation_lag_2", "autocorrelation_lag_3", "autocorrelation_lag_4",
    "autocorrelation_lag_5", "autocorrelation_lag_6", "autocorrelation_lag_7", "autocorrelation_lag_8",
    "autocorrelation_lag_9",
    "quantile_q_0.1", "quantile_q_0.2", "quantile_q_0.3", "quantile_q_0.4",
    "quantile_q_0.6", "quantile_q_0.7", "quantile_q_0.8", "quantile_q_0.9",
    "rhythm", "amplitude", "frequency", "freqstd", "slope"};

inline constexpr std::array<double, 8> kQuantileLevels{0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9};

/// Quantile with linear interpolation between order statistics (h = (n-1)q).
template <typename Derived>
typename Derived::Scalar quantile_sorted(const Eigen::MatrixBase<Derived>& sorted, double q)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = sorted.size();
    const double h = static_cast<double>(n - 1) * q;
    const auto lo = static_cast<Eigen::Index>(h);
    const Eigen::Index hi = std::min(lo + 1, n - 1);
    return sorted(lo) + Scalar(h - static_cast<double>(lo)) * (sorted(hi) - sorted(lo));
}

template <typename Derived>
Series<typename Derived::Scalar> sorted_copy(const Eigen::MatrixBase<Derived>& x)
{
    Series<typename Derived::Scalar> s = x;
    std::sort(s.data(), s.data() + s.size());
    return s;
}

template <typename Derived>
typename Derived::Scalar population_variance(const Eigen::MatrixBase<Derived>& x)
{
    return (x.array() - x.mean()).square().mean();
}

/// Indices of local maxima found by automatic multiscale peak detection.
/// Empty when the signal has no interior maximum at the selected scale.
std::vector<Eigen::Index> ampd_peaks(const Eigen::Ref<const SeriesXd>& series);

struct Spectrum {
    SeriesXd frequencies;  // 0 .. fs/2
    SeriesXd power;
};

/// One-sided power spectrum |X_k|^2 / N of the mean-removed signal.
Spectrum spectrum(const Eigen::Ref<const SeriesXd>& series, double fs);

using SignalFeatures = Eigen::Matrix<double, static_cast<int>(kFeaturesPerSignal), 1>;

struct FeatureFlags {
    bool no_peaks = false;    // *_of_max_taps set to 0
    bool zero_noise = false;  // SNR set to 0
};

SignalFeatures extract_features(const Eigen::Ref<const SeriesXd>& signal, double fs, FeatureFlags* flags = nullptr);

/// All 738 feature keys in registry order ("<signal>_<feature>").
const std::vector<std::string>& feature_registry();

inline std::string feature_key(Signal s, Feature f)
{
    return std::string(kSignalFeaturePrefixes[static_cast<std::size_t>(s)]) + "_" +
           std::string(kFeatureSuffixes[static_cast<std::size_t>(f)]);
}

struct FeaturizeStats {
    std::size_t signals_without_peaks = 0;
    std::size_t signals_with_zero_noise = 0;
};

/// 738-entry feature vector in registry order.
SeriesXd featurize(const KinematicBundle& bundle, FeaturizeStats* stats = nullptr);

struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<TrialInfo> rows;
    Eigen::MatrixXd values;  // rows.size() x columns.size()

    Eigen::Index column_index(std::string_view name) const;
    // Column subset by name, in the order given.
    Eigen::MatrixXd select(const std::vector<std::string>& names) const;
};

FeatureMatrix featurize_cohort(const Cohort& cohort, std::size_t jobs = 1, FeaturizeStats* stats = nullptr);

std::string serialize_feature_matrix(const FeatureMatrix& m);
FeatureMatrix parse_feature_matrix(std::string_view csv_text);

}  // namespace ftap
