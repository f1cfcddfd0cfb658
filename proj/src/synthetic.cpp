#include "ftap/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "ftap/io.hpp"

namespace ftap::synthetic {

double Rng::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0;
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * std::numbers::pi * v);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * v);
}

namespace {

struct ClassProfile {
    double tempo_hz;
    double amplitude;  // deg/s
    double decrement;  // fractional amplitude loss over the trial
    double jitter;     // relative tempo wander
};

// HC fast and steady, PD slowing with decrement, PSP small and slow, MSA irregular.
constexpr std::array<ClassProfile, kNumClasses> kProfiles{{
    {3.2, 420.0, 0.05, 0.02},
    {2.3, 300.0, 0.45, 0.05},
    {1.6, 170.0, 0.20, 0.06},
    {2.6, 260.0, 0.25, 0.18},
}};

}  // namespace

Cohort tapping_cohort(const CohortSpec& spec)
{
    Rng rng(spec.seed);
    std::vector<RawRecording> recs;
    const double dt = 1.0 / spec.sample_rate_hz;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& prof = kProfiles[c];
        for (std::size_t s = 0; s < spec.subjects_per_class; ++s) {
            const auto person = std::string(to_string(kClassOrder[c])) + "_" + std::to_string(s + 1);
            const double subject_tempo = prof.tempo_hz * rng.uniform(0.9, 1.1);
            const double subject_amp = prof.amplitude * rng.uniform(0.85, 1.15);
            for (std::size_t t = 0; t < spec.trials_per_subject; ++t) {
                RawRecording rec;
                rec.info = {person, "t" + std::to_string(t + 1), kClassOrder[c], spec.sample_rate_hz};
                rec.gyro.resize(static_cast<Eigen::Index>(spec.samples), 6);
                // axis loadings of the tapping rotation for thumb and index
                std::array<double, 6> load{};
                for (auto& l : load) l = rng.uniform(0.2, 1.0);
                load[2] += 0.8;
                load[5] += 0.8;
                double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
                for (Eigen::Index i = 0; i < rec.gyro.rows(); ++i) {
                    const double frac = static_cast<double>(i) / static_cast<double>(rec.gyro.rows());
                    const double tempo = subject_tempo * (1.0 + prof.jitter * std::sin(2.0 * std::numbers::pi * 0.4 * i * dt) +
                                                          prof.jitter * 0.5 * rng.normal());
                    phase += 2.0 * std::numbers::pi * tempo * dt;
                    const double amp = subject_amp * (1.0 - prof.decrement * frac);
                    const double wave = amp * std::sin(phase);
                    for (int ch = 0; ch < 6; ++ch) {
                        const double sign = ch < 3 ? 1.0 : -1.0;
                        rec.gyro(i, ch) = sign * load[static_cast<std::size_t>(ch)] * wave + spec.noise * rng.normal();
                    }
                }
                recs.push_back(std::move(rec));
            }
        }
    }
    return Cohort::from_recordings(std::move(recs));
}

std::filesystem::path write_cohort(const Cohort& cohort, const std::filesystem::path& dir)
{
    std::vector<ManifestEntry> entries;
    for (const auto& rec : cohort.recordings()) {
        const auto name = std::filesystem::path("trials") / (rec.info.person_id + "_" + rec.info.trial_id + ".csv");
        io::write_text(dir / name, serialize_recording(rec));
        entries.push_back({name, rec.info});
    }
    const auto manifest = dir / "manifest.csv";
    io::write_text(manifest, serialize_manifest(entries));
    return manifest;
}

FeatureMatrix separable_features(std::size_t subjects_per_class, std::size_t trials_per_subject, std::size_t informative,
                                 std::size_t noise, std::uint64_t seed)
{
    Rng rng(seed);
    FeatureMatrix m;
    for (std::size_t j = 0; j < informative; ++j) m.columns.push_back("inf_" + std::to_string(j));
    for (std::size_t j = 0; j < noise; ++j) m.columns.push_back("noise_" + std::to_string(j));
    const auto rows = kNumClasses * subjects_per_class * trials_per_subject;
    m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(m.columns.size()));
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        for (std::size_t s = 0; s < subjects_per_class; ++s) {
            const auto person = std::string(to_string(kClassOrder[c])) + "_" + std::to_string(s + 1);
            for (std::size_t t = 0; t < trials_per_subject; ++t, ++r) {
                m.rows.push_back({person, "t" + std::to_string(t + 1), kClassOrder[c], kDefaultSampleRateHz});
                // class c sits on a corner of the square spanned by the first two informative columns
                for (std::size_t j = 0; j < informative; ++j) {
                    const double centre = ((c >> (j % 2)) & 1U) ? 3.0 : -3.0;
                    m.values(r, static_cast<Eigen::Index>(j)) = centre + 0.5 * rng.normal();
                }
                for (std::size_t j = 0; j < noise; ++j)
                    m.values(r, static_cast<Eigen::Index>(informative + j)) = rng.normal();
            }
        }
    }
    return m;
}

}  // namespace ftap::synthetic
