#pragma once

#include <cstdint>
#include <filesystem>
#include <random>

#include "ftap/features.hpp"
#include "ftap/ingest.hpp"

namespace ftap::synthetic {

// Portable generators: the stdlib distributions are not bit-identical across
// implementations, so uniforms and normals are built from raw engine output.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();                   // [0, 1), 53-bit
    double uniform(double lo, double hi);
    double normal();                    // Box-Muller
    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

struct CohortSpec {
    std::size_t subjects_per_class = 4;
    std::size_t trials_per_subject = 3;
    std::size_t samples = 600;
    double sample_rate_hz = kDefaultSampleRateHz;
    double noise = 5.0;  // deg/s
    std::uint64_t seed = 1;
};

/// Tapping-like gyro recordings with class-dependent tempo, amplitude and decrement.
Cohort tapping_cohort(const CohortSpec& spec);

/// Writes one CSV per trial plus manifest.csv into `dir`; returns the manifest path.
std::filesystem::path write_cohort(const Cohort& cohort, const std::filesystem::path& dir);

/// Feature matrix with `informative` class-separating columns (inf_0, ...) followed
/// by `noise` pure-noise columns (noise_0, ...).
FeatureMatrix separable_features(std::size_t subjects_per_class, std::size_t trials_per_subject, std::size_t informative,
                                 std::size_t noise, std::uint64_t seed);

}  // namespace ftap::synthetic
