#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ftap {

template <typename Scalar>
using Series = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using SeriesXd = Series<double>;

// Diagnosis classes in their fixed reporting / tie-break order.
enum class Label : int { HC = 0, PD = 1, PSP = 2, MSA = 3 };

inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::array<Label, kNumClasses> kClassOrder{Label::HC, Label::PD, Label::PSP, Label::MSA};

inline constexpr int class_index(Label l) { return static_cast<int>(l); }
inline constexpr Label label_from_index(int i) { return static_cast<Label>(i); }

std::string_view to_string(Label l);

// Case-insensitive; "CTRL" is accepted as an alias of HC.
std::optional<Label> parse_label(std::string_view text);

enum class ErrorKind {
    // data errors (exit code 1)
    MissingColumn,
    NonNumericSample,
    UnequalChannelLengths,
    UnknownLabel,
    EmptySignal,
    ConflictingLabel,
    DuplicateTrial,
    TooManyTrials,
    Io,
    // config / contract errors (exit code 2)
    Config,
    SeriesTooShort,
    LengthMismatch,
    FeatureMismatch,
    TooFewGroups,
    ClassMissingInFold,
    // numerical failures (exit code 3)
    DegenerateGroups,
    SolverNonconvergence,
    Numerical,
};

std::string_view to_string(ErrorKind k);

// Maps an error kind onto the CLI exit-code contract.
int exit_code_for(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace ftap
