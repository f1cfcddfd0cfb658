#include "ftap/types.hpp"

#include <algorithm>
#include <cctype>

namespace ftap {

std::string_view to_string(Label l)
{
    switch (l) {
    case Label::HC: return "HC";
    case Label::PD: return "PD";
    case Label::PSP: return "PSP";
    case Label::MSA: return "MSA";
    }
    return "?";
}

std::optional<Label> parse_label(std::string_view text)
{
    std::string up(text);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (up == "HC" || up == "CTRL") return Label::HC;
    if (up == "PD") return Label::PD;
    if (up == "PSP") return Label::PSP;
    if (up == "MSA") return Label::MSA;
    return std::nullopt;
}

std::string_view to_string(ErrorKind k)
{
    switch (k) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonNumericSample: return "NonNumericSample";
    case ErrorKind::UnequalChannelLengths: return "UnequalChannelLengths";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::EmptySignal: return "EmptySignal";
    case ErrorKind::ConflictingLabel: return "ConflictingLabel";
    case ErrorKind::DuplicateTrial: return "DuplicateTrial";
    case ErrorKind::TooManyTrials: return "TooManyTrials";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Config: return "Config";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::FeatureMismatch: return "FeatureMismatch";
    case ErrorKind::TooFewGroups: return "TooFewGroups";
    case ErrorKind::ClassMissingInFold: return "ClassMissingInFold";
    case ErrorKind::DegenerateGroups: return "DegenerateGroups";
    case ErrorKind::SolverNonconvergence: return "SolverNonconvergence";
    case ErrorKind::Numerical: return "Numerical";
    }
    return "Unknown";
}

int exit_code_for(ErrorKind k)
{
    switch (k) {
    case ErrorKind::MissingColumn:
    case ErrorKind::NonNumericSample:
    case ErrorKind::UnequalChannelLengths:
    case ErrorKind::UnknownLabel:
    case ErrorKind::EmptySignal:
    case ErrorKind::ConflictingLabel:
    case ErrorKind::DuplicateTrial:
    case ErrorKind::TooManyTrials:
    case ErrorKind::Io:
        return 1;
    case ErrorKind::DegenerateGroups:
    case ErrorKind::SolverNonconvergence:
    case ErrorKind::Numerical:
        return 3;
    default:
        return 2;
    }
}

}  // namespace ftap
