#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "ftap/ingest.hpp"
#include "ftap/io.hpp"
#include "ftap/synthetic.hpp"

using namespace ftap;

namespace {

const TrialInfo kInfo{"S1", "1", Label::PD, 200.0};

std::string trial_csv(int rows, const std::string& bad_cell = {})
{
    std::string s = "timestamp,gyroThumb_X,gyroThumb_Y,gyroThumb_Z,gyroIndex_X,gyroIndex_Y,gyroIndex_Z\n";
    for (int r = 0; r < rows; ++r) {
        s += std::to_string(r * 0.005);
        for (int c = 0; c < 6; ++c) {
            s += ',';
            s += (r == 2 && c == 1 && !bad_cell.empty()) ? bad_cell : std::to_string(r + c * 0.5);
        }
        s += '\n';
    }
    return s;
}

std::filesystem::path scratch(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("ftap_ingest_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("well-formed trial parses with its label and length")
{
    const auto rec = parse_recording(trial_csv(20), kInfo);
    CHECK(rec.samples() == 20);
    CHECK(rec.info.label == Label::PD);
    CHECK(rec.channel(Channel::ThumbY)(3) == doctest::Approx(3.5));
}

TEST_CASE("short trials are rejected")
{
    CHECK_THROWS_AS(parse_recording(trial_csv(4), kInfo), Error);
    try {
        parse_recording(trial_csv(15), kInfo);
        FAIL("expected EmptySignal");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptySignal);
    }
    CHECK_NOTHROW(parse_recording(trial_csv(16), kInfo));
}

TEST_CASE("blank and non-finite cells are NonNumericSample")
{
    for (std::string bad : {"", "nan", "inf", "abc"}) {
        try {
            parse_recording(trial_csv(20, bad.empty() ? " " : bad), kInfo);
            FAIL("expected NonNumericSample for '" << bad << "'");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NonNumericSample);
        }
    }
}

TEST_CASE("missing channel column")
{
    std::string s = "gyroThumb_X,gyroThumb_Y,gyroThumb_Z,gyroIndex_X,gyroIndex_Y\n";
    for (int r = 0; r < 20; ++r) s += "1,2,3,4,5\n";
    try {
        parse_recording(s, kInfo);
        FAIL("expected MissingColumn");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingColumn);
    }
}

TEST_CASE("ragged row is UnequalChannelLengths")
{
    auto s = trial_csv(20);
    s += "1,2,3\n";
    try {
        parse_recording(s, kInfo);
        FAIL("expected UnequalChannelLengths");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnequalChannelLengths);
    }
}

TEST_CASE("timestamp column is optional and CRLF is tolerated")
{
    std::string s = "gyroIndex_Z,gyroIndex_Y,gyroIndex_X,gyroThumb_Z,gyroThumb_Y,gyroThumb_X\r\n";
    for (int r = 0; r < 16; ++r) s += "6,5,4,3,2," + std::to_string(r) + "\r\n";
    const auto rec = parse_recording(s, kInfo);
    CHECK(rec.channel(Channel::ThumbX)(7) == 7.0);
    CHECK(rec.channel(Channel::IndexZ)(0) == 6.0);
}

TEST_CASE("labels are case-insensitive with CTRL as HC")
{
    CHECK(parse_label("ctrl") == Label::HC);
    CHECK(parse_label("Psp") == Label::PSP);
    CHECK(parse_label("msa") == Label::MSA);
    CHECK_FALSE(parse_label("ALS").has_value());
}

TEST_CASE("serialize then load is idempotent")
{
    const auto rec = parse_recording(trial_csv(30), kInfo);
    const auto once = serialize_recording(rec);
    const auto twice = serialize_recording(parse_recording(once, kInfo));
    CHECK(once == twice);
}

TEST_CASE("cohort of 2 subjects x 2 trials")
{
    synthetic::CohortSpec spec;
    spec.subjects_per_class = 1;
    spec.trials_per_subject = 2;
    spec.samples = 64;
    const auto all = synthetic::tapping_cohort(spec);
    std::vector<RawRecording> two(all.recordings().begin(), all.recordings().begin() + 4);
    const auto cohort = Cohort::from_recordings(two);
    CHECK(cohort.size() == 4);
    CHECK(cohort.subjects().size() == 2);
    CHECK(cohort.trials_of(cohort.subjects()[1]).size() == 2);
}

TEST_CASE("cohort invariants")
{
    auto rec = parse_recording(trial_csv(20), kInfo);
    SUBCASE("conflicting label")
    {
        auto other = rec;
        other.info.trial_id = "2";
        other.info.label = Label::PSP;
        try {
            Cohort::from_recordings({rec, other});
            FAIL("expected ConflictingLabel");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::ConflictingLabel);
        }
    }
    SUBCASE("duplicate trial")
    {
        try {
            Cohort::from_recordings({rec, rec});
            FAIL("expected DuplicateTrial");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DuplicateTrial);
        }
    }
    SUBCASE("at most six trials")
    {
        std::vector<RawRecording> recs;
        for (int t = 0; t < 7; ++t) {
            recs.push_back(rec);
            recs.back().info.trial_id = std::to_string(t);
        }
        try {
            Cohort::from_recordings(recs);
            FAIL("expected TooManyTrials");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::TooManyTrials);
        }
        recs.pop_back();
        CHECK(Cohort::from_recordings(recs).size() == 6);
    }
}

TEST_CASE("subject and trial counts add up")
{
    synthetic::CohortSpec spec;
    spec.subjects_per_class = 3;
    spec.trials_per_subject = 2;
    spec.samples = 64;
    const auto cohort = synthetic::tapping_cohort(spec);
    std::size_t trials = 0;
    for (const auto& s : cohort.subjects()) trials += cohort.trials_of(s).size();
    CHECK(trials == cohort.size());
    CHECK(cohort.subjects().size() == 12);
    for (const auto& [subjects, n] : cohort.class_counts()) {
        CHECK(subjects == 3);
        CHECK(n == 6);
    }
}

TEST_CASE("manifest round trip through disk")
{
    synthetic::CohortSpec spec;
    spec.subjects_per_class = 2;
    spec.trials_per_subject = 2;
    spec.samples = 40;
    const auto dir = scratch("roundtrip");
    const auto cohort = synthetic::tapping_cohort(spec);
    const auto manifest = synthetic::write_cohort(cohort, dir);
    const auto loaded = load_cohort(manifest);
    REQUIRE(loaded.size() == cohort.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded.recordings()[i].info.person_id == cohort.recordings()[i].info.person_id);
        CHECK(loaded.recordings()[i].gyro == cohort.recordings()[i].gyro);
    }
    const auto checks = validate_manifest(manifest);
    CHECK(std::all_of(checks.begin(), checks.end(), [](const FileCheck& c) { return c.ok; }));
}

TEST_CASE("validate_manifest reports a corrupt file without aborting")
{
    synthetic::CohortSpec spec;
    spec.subjects_per_class = 1;
    spec.trials_per_subject = 2;
    spec.samples = 40;
    const auto dir = scratch("corrupt");
    const auto manifest = synthetic::write_cohort(synthetic::tapping_cohort(spec), dir);
    const auto entries = read_manifest(manifest);
    io::write_text(dir / entries[3].path, "gyroThumb_X\n1\n");
    const auto checks = validate_manifest(manifest);
    REQUIRE(checks.size() == entries.size());
    CHECK(std::count_if(checks.begin(), checks.end(), [](const FileCheck& c) { return !c.ok; }) == 1);
    CHECK_FALSE(checks[3].ok);
    CHECK(checks[3].reason.find("MissingColumn") != std::string::npos);
}

TEST_CASE("manifest parsing errors")
{
    CHECK_THROWS_AS(parse_manifest(""), Error);
    CHECK(parse_manifest("path,person_id,trial_id,label,sample_rate_hz\n").empty());
    try {
        parse_manifest("path,person_id,trial_id,label,sample_rate_hz\na.csv,S1,1,ALS,200\n");
        FAIL("expected UnknownLabel");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnknownLabel);
    }
}
