#include "ftap/features.hpp"

#include <cmath>
#include <complex>
#include <mutex>

#include <unsupported/Eigen/FFT>

#include "ftap/io.hpp"
#include "ftap/parallel.hpp"

namespace ftap {

namespace {

constexpr double kMadToSigma = 0.6745;
// Var(x[i+1] - 2x[i] + x[i-1]) = 6 sigma^2 for white noise.
constexpr double kSecondDifferenceGain = 6.0;
constexpr double kFlatResidual = 1e-12;

SeriesXd detrend(const Eigen::Ref<const SeriesXd>& x)
{
    const Eigen::Index n = x.size();
    const SeriesXd t = SeriesXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
    const double tm = t.mean();
    const double xm = x.mean();
    const double slope = ((t.array() - tm) * (x.array() - xm)).sum() / (t.array() - tm).square().sum();
    return (x.array() - xm - slope * (t.array() - tm)).matrix();
}

bool is_scale_max(const SeriesXd& x, Eigen::Index i, Eigen::Index k)
{
    return i - k >= 0 && i + k < x.size() && x(i) > x(i - k) && x(i) > x(i + k);
}

template <typename Derived>
double median_of(const Eigen::MatrixBase<Derived>& x)
{
    return quantile_sorted(sorted_copy(x), 0.5);
}

}  // namespace

std::vector<Eigen::Index> ampd_peaks(const Eigen::Ref<const SeriesXd>& series)
{
    const Eigen::Index n = series.size();
    if (n < 4) throw Error(ErrorKind::SeriesTooShort, "ampd_peaks needs at least 4 samples");
    const SeriesXd x = detrend(series);
    // a residual at rounding level means the input was a straight line
    if (x.cwiseAbs().maxCoeff() <= kFlatResidual * series.cwiseAbs().maxCoeff()) return {};
    const Eigen::Index scales = (n + 1) / 2 - 1;  // ceil(n/2) - 1

    // Row sums of the local-maxima scalogram: 0 marks a maximum at scale k, 1 otherwise.
    Eigen::Index best_scale = 1;
    Eigen::Index best_sum = n + 1;
    for (Eigen::Index k = 1; k <= scales; ++k) {
        Eigen::Index maxima = 0;
        for (Eigen::Index i = k; i + k < n; ++i)
            if (x(i) > x(i - k) && x(i) > x(i + k)) ++maxima;
        const Eigen::Index row_sum = n - maxima;
        if (row_sum < best_sum) {
            best_sum = row_sum;
            best_scale = k;
        }
    }

    std::vector<Eigen::Index> peaks;
    for (Eigen::Index i = 0; i < n; ++i) {
        bool peak = true;
        for (Eigen::Index k = 1; k <= best_scale && peak; ++k) peak = is_scale_max(x, i, k);
        if (peak) peaks.push_back(i);
    }
    return peaks;
}

Spectrum spectrum(const Eigen::Ref<const SeriesXd>& series, double fs)
{
    const Eigen::Index n = series.size();
    if (n < 4) throw Error(ErrorKind::SeriesTooShort, "spectrum needs at least 4 samples");
    if (!(fs > 0.0)) throw Error(ErrorKind::Config, "spectrum needs fs > 0");

    std::vector<double> centred(static_cast<std::size_t>(n));
    const double mean = series.mean();
    for (Eigen::Index i = 0; i < n; ++i) centred[static_cast<std::size_t>(i)] = series(i) - mean;

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> bins;
    fft.fwd(bins, centred);

    const Eigen::Index half = n / 2 + 1;
    Spectrum s{SeriesXd(half), SeriesXd(half)};
    for (Eigen::Index k = 0; k < half; ++k) {
        s.frequencies(k) = static_cast<double>(k) * fs / static_cast<double>(n);
        s.power(k) = std::norm(bins[static_cast<std::size_t>(k)]) / static_cast<double>(n);
    }
    return s;
}

SignalFeatures extract_features(const Eigen::Ref<const SeriesXd>& x, double fs, FeatureFlags* flags)
{
    const Eigen::Index n = x.size();
    if (static_cast<std::size_t>(n) < kMinSamples)
        throw Error(ErrorKind::SeriesTooShort, "extract_features needs at least 16 samples");

    SignalFeatures f;
    auto set = [&f](Feature id, double v) { f(static_cast<int>(id)) = v; };

    const SeriesXd sorted = sorted_copy(x);
    const double mean = x.mean();
    const double var = population_variance(x);
    const double energy = x.squaredNorm();

    set(Feature::RMS, std::sqrt(energy / static_cast<double>(n)));
    set(Feature::Min, sorted(0));
    set(Feature::Max, sorted(n - 1));
    set(Feature::Avg, mean);
    set(Feature::Std, std::sqrt(var));
    set(Feature::Med, quantile_sorted(sorted, 0.5));

    // Spectral features skip the DC bin.
    const Spectrum spec = spectrum(x, fs);
    const auto freqs = spec.frequencies.tail(spec.frequencies.size() - 1);
    const auto power = spec.power.tail(spec.power.size() - 1);
    const double total_power = power.sum();
    double dominant = 0.0, centroid = 0.0, spread = 0.0, rhythm = 0.0;
    if (total_power > 0.0) {
        Eigen::Index arg = 0;
        power.maxCoeff(&arg);
        dominant = freqs(arg);
        centroid = freqs.dot(power) / total_power;
        spread = std::sqrt(((freqs.array() - centroid).square() * power.array()).sum() / total_power);
        rhythm = power(arg) / total_power;
    }
    set(Feature::MaxFreq, dominant);
    set(Feature::Centroid, centroid);

    const auto peaks = ampd_peaks(x);
    if (peaks.empty()) {
        for (auto id : {Feature::RMSMax, Feature::MinMax, Feature::MaxMax, Feature::AvgMax, Feature::StdMax, Feature::MedMax})
            set(id, 0.0);
        if (flags) flags->no_peaks = true;
    } else {
        SeriesXd mp(static_cast<Eigen::Index>(peaks.size()));
        for (std::size_t i = 0; i < peaks.size(); ++i) mp(static_cast<Eigen::Index>(i)) = x(peaks[i]);
        const SeriesXd mp_sorted = sorted_copy(mp);
        set(Feature::RMSMax, std::sqrt(mp.squaredNorm() / static_cast<double>(mp.size())));
        set(Feature::MinMax, mp_sorted(0));
        set(Feature::MaxMax, mp_sorted(mp.size() - 1));
        set(Feature::AvgMax, mp.mean());
        set(Feature::StdMax, std::sqrt(population_variance(mp)));
        set(Feature::MedMax, quantile_sorted(mp_sorted, 0.5));
    }

    const SeriesXd second_diff = x.segment(2, n - 2) - 2.0 * x.segment(1, n - 2) + x.segment(0, n - 2);
    const double sigma = median_of(second_diff.cwiseAbs()) / kMadToSigma;
    const double noise_var = sigma * sigma / kSecondDifferenceGain;
    set(Feature::NoiseVar, noise_var);
    set(Feature::ConvEne, energy);
    if (noise_var > 0.0) {
        set(Feature::SNR, energy / noise_var);
    } else {
        set(Feature::SNR, 0.0);
        if (flags) flags->zero_noise = true;
    }

    set(Feature::Var, var);
    set(Feature::AvgAbsChange, (x.tail(n - 1) - x.head(n - 1)).cwiseAbs().sum() / static_cast<double>(n - 1));

    const SeriesXd centred = x.array() - mean;
    const double lag0 = centred.squaredNorm();
    for (int lag = 1; lag <= 9; ++lag) {
        const double r = lag0 > 0.0 ? centred.head(n - lag).dot(centred.tail(n - lag)) / lag0 : 0.0;
        f(static_cast<int>(Feature::AutocorrLag1) + lag - 1) = r;
    }
    for (std::size_t q = 0; q < kQuantileLevels.size(); ++q)
        f(static_cast<int>(Feature::Quant01) + static_cast<int>(q)) = quantile_sorted(sorted, kQuantileLevels[q]);

    set(Feature::Rhythm, rhythm);
    set(Feature::Amplitude, sorted(n - 1) - sorted(0));
    set(Feature::Frequency, dominant);
    set(Feature::FrequencyStd, spread);
    set(Feature::Slope, (x(n - 1) - x(0)) / static_cast<double>(n));
    return f;
}

const std::vector<std::string>& feature_registry()
{
    static const std::vector<std::string> registry = [] {
        std::vector<std::string> keys;
        keys.reserve(kNumFeatures);
        for (std::size_t s = 0; s < kNumSignals; ++s)
            for (std::size_t f = 0; f < kFeaturesPerSignal; ++f)
                keys.push_back(feature_key(static_cast<Signal>(s), static_cast<Feature>(f)));
        return keys;
    }();
    return registry;
}

SeriesXd featurize(const KinematicBundle& bundle, FeaturizeStats* stats)
{
    SeriesXd out(static_cast<Eigen::Index>(kNumFeatures));
    for (std::size_t s = 0; s < kNumSignals; ++s) {
        FeatureFlags flags;
        out.segment(static_cast<Eigen::Index>(s * kFeaturesPerSignal), kFeaturesPerSignal) =
            extract_features(bundle.signal(static_cast<Signal>(s)), bundle.sample_rate_hz, &flags);
        if (stats) {
            stats->signals_without_peaks += flags.no_peaks ? 1 : 0;
            stats->signals_with_zero_noise += flags.zero_noise ? 1 : 0;
        }
    }
    return out;
}

Eigen::Index FeatureMatrix::column_index(std::string_view name) const
{
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error(ErrorKind::FeatureMismatch, "unknown feature " + std::string(name));
    return static_cast<Eigen::Index>(it - columns.begin());
}

Eigen::MatrixXd FeatureMatrix::select(const std::vector<std::string>& names) const
{
    Eigen::MatrixXd out(values.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = values.col(column_index(names[j]));
    return out;
}

FeatureMatrix featurize_cohort(const Cohort& cohort, std::size_t jobs, FeaturizeStats* stats)
{
    if (cohort.empty()) throw Error(ErrorKind::Config, "cannot featurize an empty cohort");
    FeatureMatrix m;
    m.columns = feature_registry();
    m.values.resize(static_cast<Eigen::Index>(cohort.size()), static_cast<Eigen::Index>(kNumFeatures));
    std::vector<FeaturizeStats> per_row(cohort.size());
    parallel_for(cohort.size(), jobs, [&](std::size_t i) {
        const auto bundle = derive_kinematics(cohort.recordings()[i]);
        m.values.row(static_cast<Eigen::Index>(i)) = featurize(bundle, &per_row[i]).transpose();
    });
    for (const auto& r : cohort.recordings()) m.rows.push_back(r.info);
    if (stats) {
        for (const auto& s : per_row) {
            stats->signals_without_peaks += s.signals_without_peaks;
            stats->signals_with_zero_noise += s.signals_with_zero_noise;
        }
    }
    return m;
}

std::string serialize_feature_matrix(const FeatureMatrix& m)
{
    std::string out = "person_id,trial_id,label";
    for (const auto& c : m.columns) out += ',' + c;
    out += '\n';
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
        const auto& info = m.rows[static_cast<std::size_t>(r)];
        out += info.person_id + ',' + info.trial_id + ',' + std::string(to_string(info.label));
        for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
            out += ',';
            out += io::format_double(m.values(r, c));
        }
        out += '\n';
    }
    return out;
}

FeatureMatrix parse_feature_matrix(std::string_view csv_text)
{
    FeatureMatrix m;
    std::vector<std::vector<double>> rows;
    std::size_t start = 0;
    bool header = true;
    while (start < csv_text.size()) {
        auto end = csv_text.find('\n', start);
        if (end == std::string_view::npos) end = csv_text.size();
        const auto line = csv_text.substr(start, end - start);
        start = end + 1;
        if (io::trim(line).empty()) continue;
        const auto fields = io::split_csv(line);
        if (header) {
            if (fields.size() < 3 || fields[0] != "person_id" || fields[1] != "trial_id" || fields[2] != "label")
                throw Error(ErrorKind::MissingColumn, "feature matrix: bad header");
            m.columns.assign(fields.begin() + 3, fields.end());
            header = false;
            continue;
        }
        if (fields.size() != m.columns.size() + 3)
            throw Error(ErrorKind::UnequalChannelLengths, "feature matrix: ragged row");
        TrialInfo info;
        info.person_id = fields[0];
        info.trial_id = fields[1];
        const auto label = parse_label(fields[2]);
        if (!label) throw Error(ErrorKind::UnknownLabel, "feature matrix: unknown label " + fields[2]);
        info.label = *label;
        std::vector<double> vals;
        vals.reserve(m.columns.size());
        for (std::size_t c = 3; c < fields.size(); ++c) {
            const auto v = io::parse_double(fields[c]);
            if (!v) throw Error(ErrorKind::NonNumericSample, "feature matrix: non-numeric value");
            vals.push_back(*v);
        }
        m.rows.push_back(std::move(info));
        rows.push_back(std::move(vals));
    }
    if (header) throw Error(ErrorKind::MissingColumn, "feature matrix: empty file");
    m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

}  // namespace ftap
