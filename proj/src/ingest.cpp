#include "ftap/ingest.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ftap/io.hpp"

namespace ftap {

namespace {

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    // trailing blank lines carry no records
    while (!lines.empty() && io::trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

std::string where(const TrialInfo& info)
{
    return "trial " + info.person_id + "/" + info.trial_id;
}

}  // namespace

RawRecording parse_recording(std::string_view csv_text, const TrialInfo& info)
{
    if (!(info.sample_rate_hz > 0.0)) throw Error(ErrorKind::Config, where(info) + ": sample rate must be positive");
    const auto lines = split_lines(csv_text);
    if (lines.empty()) throw Error(ErrorKind::MissingColumn, where(info) + ": missing header");

    auto header = io::split_csv(lines.front());
    for (auto& h : header) h = io::trim(h);
    std::array<std::size_t, 6> col{};
    for (std::size_t c = 0; c < kChannelColumns.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), kChannelColumns[c]);
        if (it == header.end())
            throw Error(ErrorKind::MissingColumn, where(info) + ": missing column " + std::string(kChannelColumns[c]));
        col[c] = static_cast<std::size_t>(it - header.begin());
    }

    const auto rows = static_cast<Eigen::Index>(lines.size() - 1);
    RawRecording rec{info, GyroMatrix(rows, 6)};
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto fields = io::split_csv(lines[static_cast<std::size_t>(r) + 1]);
        for (std::size_t c = 0; c < 6; ++c) {
            if (col[c] >= fields.size()) {
                std::ostringstream msg;
                msg << where(info) << ": row " << r + 1 << " has " << fields.size() << " fields";
                throw Error(ErrorKind::UnequalChannelLengths, msg.str());
            }
            const auto v = io::parse_double(fields[col[c]]);
            if (!v) {
                std::ostringstream msg;
                msg << where(info) << ": non-numeric sample in " << kChannelColumns[c] << " at row " << r + 1;
                throw Error(ErrorKind::NonNumericSample, msg.str());
            }
            rec.gyro(r, static_cast<int>(c)) = *v;
        }
    }
    if (static_cast<std::size_t>(rows) < kMinSamples) {
        std::ostringstream msg;
        msg << where(info) << ": " << rows << " samples, need at least " << kMinSamples;
        throw Error(ErrorKind::EmptySignal, msg.str());
    }
    return rec;
}

RawRecording load_recording(const std::filesystem::path& path, const TrialInfo& info)
{
    return parse_recording(io::read_text(path), info);
}

std::string serialize_recording(const RawRecording& rec)
{
    std::string out = "timestamp";
    for (auto name : kChannelColumns) {
        out += ',';
        out += name;
    }
    out += '\n';
    const double dt = rec.dt();
    for (Eigen::Index r = 0; r < rec.samples(); ++r) {
        out += io::format_double(static_cast<double>(r) * dt);
        for (int c = 0; c < 6; ++c) {
            out += ',';
            out += io::format_double(rec.gyro(r, c));
        }
        out += '\n';
    }
    return out;
}

std::vector<ManifestEntry> parse_manifest(std::string_view csv_text)
{
    const auto lines = split_lines(csv_text);
    if (lines.empty()) throw Error(ErrorKind::Config, "manifest is empty");
    auto header = io::split_csv(lines.front());
    for (auto& h : header) h = io::trim(h);
    const std::array<std::string_view, 5> required{"path", "person_id", "trial_id", "label", "sample_rate_hz"};
    std::array<std::size_t, 5> col{};
    for (std::size_t i = 0; i < required.size(); ++i) {
        auto it = std::find(header.begin(), header.end(), required[i]);
        if (it == header.end()) throw Error(ErrorKind::MissingColumn, "manifest: missing column " + std::string(required[i]));
        col[i] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<ManifestEntry> entries;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (io::trim(lines[r]).empty()) continue;
        const auto f = io::split_csv(lines[r]);
        if (f.size() < header.size())
            throw Error(ErrorKind::MissingColumn, "manifest row " + std::to_string(r) + ": too few fields");
        ManifestEntry e;
        e.path = io::trim(f[col[0]]);
        e.info.person_id = io::trim(f[col[1]]);
        e.info.trial_id = io::trim(f[col[2]]);
        const auto label = parse_label(io::trim(f[col[3]]));
        if (!label) throw Error(ErrorKind::UnknownLabel, "manifest row " + std::to_string(r) + ": unknown label '" + io::trim(f[col[3]]) + "'");
        e.info.label = *label;
        const auto fs = io::parse_double(f[col[4]]);
        if (!fs || *fs <= 0.0) throw Error(ErrorKind::Config, "manifest row " + std::to_string(r) + ": bad sample_rate_hz");
        e.info.sample_rate_hz = *fs;
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path)
{
    return parse_manifest(io::read_text(path));
}

std::string serialize_manifest(const std::vector<ManifestEntry>& entries)
{
    std::string out = "path,person_id,trial_id,label,sample_rate_hz\n";
    for (const auto& e : entries) {
        out += e.path.generic_string() + ',' + e.info.person_id + ',' + e.info.trial_id + ',' +
               std::string(to_string(e.info.label)) + ',' + io::format_double(e.info.sample_rate_hz) + '\n';
    }
    return out;
}

Cohort Cohort::from_recordings(std::vector<RawRecording> recordings)
{
    Cohort c;
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t i = 0; i < recordings.size(); ++i) {
        const auto& info = recordings[i].info;
        if (!seen.emplace(info.person_id, info.trial_id).second)
            throw Error(ErrorKind::DuplicateTrial, "duplicate " + where(info));
        auto [it, inserted] = c.index_.try_emplace(info.person_id);
        if (inserted) {
            c.subjects_.push_back(info.person_id);
        } else {
            const Label first = recordings[it->second.front()].info.label;
            if (first != info.label)
                throw Error(ErrorKind::ConflictingLabel, "subject " + info.person_id + " labelled both " +
                                                             std::string(to_string(first)) + " and " +
                                                             std::string(to_string(info.label)));
        }
        it->second.push_back(i);
        if (it->second.size() > kMaxTrialsPerSubject)
            throw Error(ErrorKind::TooManyTrials, "subject " + info.person_id + " has more than " +
                                                      std::to_string(kMaxTrialsPerSubject) + " trials");
    }
    c.recordings_ = std::move(recordings);
    return c;
}

const std::vector<std::size_t>& Cohort::trials_of(const std::string& person_id) const
{
    auto it = index_.find(person_id);
    if (it == index_.end()) throw Error(ErrorKind::Config, "unknown subject " + person_id);
    return it->second;
}

Label Cohort::label_of(const std::string& person_id) const
{
    return recordings_[trials_of(person_id).front()].info.label;
}

std::array<std::pair<std::size_t, std::size_t>, kNumClasses> Cohort::class_counts() const
{
    std::array<std::pair<std::size_t, std::size_t>, kNumClasses> counts{};
    for (const auto& s : subjects_) {
        auto& [subjects, trials] = counts[static_cast<std::size_t>(class_index(label_of(s)))];
        ++subjects;
        trials += trials_of(s).size();
    }
    return counts;
}

Cohort load_cohort(const std::filesystem::path& manifest)
{
    const auto entries = read_manifest(manifest);
    const auto base = manifest.parent_path();
    std::vector<RawRecording> recs;
    recs.reserve(entries.size());
    for (const auto& e : entries) recs.push_back(load_recording(base / e.path, e.info));
    return Cohort::from_recordings(std::move(recs));
}

std::vector<FileCheck> validate_manifest(const std::filesystem::path& manifest)
{
    const auto entries = read_manifest(manifest);
    const auto base = manifest.parent_path();
    std::vector<FileCheck> checks;
    std::map<std::string, Label> labels;
    std::map<std::string, std::size_t> trial_counts;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : entries) {
        FileCheck chk{e.path, true, {}};
        try {
            load_recording(base / e.path, e.info);
            if (!seen.emplace(e.info.person_id, e.info.trial_id).second)
                throw Error(ErrorKind::DuplicateTrial, "duplicate " + where(e.info));
            auto [it, inserted] = labels.try_emplace(e.info.person_id, e.info.label);
            if (!inserted && it->second != e.info.label)
                throw Error(ErrorKind::ConflictingLabel, "subject " + e.info.person_id + " has conflicting labels");
            if (++trial_counts[e.info.person_id] > kMaxTrialsPerSubject)
                throw Error(ErrorKind::TooManyTrials, "subject " + e.info.person_id + " exceeds the trial cap");
        } catch (const Error& err) {
            chk.ok = false;
            chk.reason = std::string(to_string(err.kind())) + ": " + err.what();
        }
        checks.push_back(std::move(chk));
    }
    return checks;
}

}  // namespace ftap
