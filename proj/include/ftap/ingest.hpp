#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ftap/types.hpp"

namespace ftap {

inline constexpr std::size_t kMinSamples = 16;
inline constexpr std::size_t kMaxTrialsPerSubject = 6;
inline constexpr double kDefaultSampleRateHz = 200.0;

enum class Channel : int { ThumbX = 0, ThumbY, ThumbZ, IndexX, IndexY, IndexZ };

inline constexpr std::array<std::string_view, 6> kChannelColumns{
    "gyroThumb_X", "gyroThumb_Y", "gyroThumb_Z", "gyroIndex_X", "gyroIndex_Y", "gyroIndex_Z"};

using GyroMatrix = Eigen::Matrix<double, Eigen::Dynamic, 6>;

struct TrialInfo {
    std::string person_id;
    std::string trial_id;
    Label label = Label::HC;
    double sample_rate_hz = kDefaultSampleRateHz;
};

struct ManifestEntry {
    std::filesystem::path path;  // as written in the manifest
    TrialInfo info;
};

// One finger-tapping trial. Columns of `gyro` follow `Channel`, in deg/s.
struct RawRecording {
    TrialInfo info;
    GyroMatrix gyro;

    Eigen::Index samples() const { return gyro.rows(); }
    auto channel(Channel c) const { return gyro.col(static_cast<int>(c)); }
    double dt() const { return 1.0 / info.sample_rate_hz; }
};

RawRecording parse_recording(std::string_view csv_text, const TrialInfo& info);
RawRecording load_recording(const std::filesystem::path& path, const TrialInfo& info);
std::string serialize_recording(const RawRecording& rec);

std::vector<ManifestEntry> parse_manifest(std::string_view csv_text);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
std::string serialize_manifest(const std::vector<ManifestEntry>& entries);

class Cohort {
public:
    Cohort() = default;

    // Validates subject/label consistency, trial uniqueness and the per-subject trial cap.
    static Cohort from_recordings(std::vector<RawRecording> recordings);

    const std::vector<RawRecording>& recordings() const { return recordings_; }
    std::size_t size() const { return recordings_.size(); }
    bool empty() const { return recordings_.empty(); }

    // Subjects in order of first appearance.
    const std::vector<std::string>& subjects() const { return subjects_; }
    const std::vector<std::size_t>& trials_of(const std::string& person_id) const;
    Label label_of(const std::string& person_id) const;

    // (subjects, trials) per class in class order.
    std::array<std::pair<std::size_t, std::size_t>, kNumClasses> class_counts() const;

private:
    std::vector<RawRecording> recordings_;
    std::vector<std::string> subjects_;
    std::map<std::string, std::vector<std::size_t>> index_;
};

// Manifest paths are resolved relative to the manifest's directory.
Cohort load_cohort(const std::filesystem::path& manifest);

struct FileCheck {
    std::filesystem::path path;
    bool ok = false;
    std::string reason;
};

// Loads every listed trial independently and reports per-file status; cohort-level
// errors (label conflicts, duplicates) are reported against the offending entry.
std::vector<FileCheck> validate_manifest(const std::filesystem::path& manifest);

}  // namespace ftap
