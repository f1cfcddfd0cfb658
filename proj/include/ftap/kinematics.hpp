#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <string_view>

#include <Eigen/Dense>

#include "ftap/ingest.hpp"
#include "ftap/types.hpp"

namespace ftap {

/// Numerical derivative with the same length as the input: central
/// differences at interior samples, first-order one-sided differences at
/// both ends.
template <typename Derived>
Series<typename Derived::Scalar> differentiate(const Eigen::MatrixBase<Derived>& series, typename Derived::Scalar dt)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = series.size();
    if (n < 2) throw Error(ErrorKind::SeriesTooShort, "differentiate needs at least 2 samples");
    if (!(dt > Scalar(0))) throw Error(ErrorKind::Config, "differentiate needs dt > 0");
    Series<Scalar> out(n);
    out(0) = (series(1) - series(0)) / dt;
    out(n - 1) = (series(n - 1) - series(n - 2)) / dt;
    if (n > 2) out.segment(1, n - 2) = (series.segment(2, n - 2) - series.segment(0, n - 2)) / (Scalar(2) * dt);
    return out;
}

template <typename DX, typename DY, typename DZ>
Series<typename DX::Scalar> vector_magnitude(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                                             const Eigen::MatrixBase<DZ>& z)
{
    if (x.size() != y.size() || x.size() != z.size())
        throw Error(ErrorKind::LengthMismatch, "vector_magnitude: components differ in length");
    using Scalar = typename DX::Scalar;
    Series<Scalar> out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        // summing smallest first makes the result independent of axis order
        Scalar a = x(i) * x(i), b = y(i) * y(i), c = z(i) * z(i);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        out(i) = std::sqrt((a + b) + c);
    }
    return out;
}

/// Per-sample norm of the thumb-minus-index vector.
template <typename Derived>
Series<typename Derived::Scalar> relative_vector(const Eigen::MatrixBase<Derived>& thumb_xyz,
                                                 const Eigen::MatrixBase<Derived>& index_xyz)
{
    if (thumb_xyz.rows() != index_xyz.rows() || thumb_xyz.cols() != 3 || index_xyz.cols() != 3)
        throw Error(ErrorKind::LengthMismatch, "relative_vector: expects two N x 3 blocks of equal length");
    const auto diff = (thumb_xyz - index_xyz).eval();
    return vector_magnitude(diff.col(0), diff.col(1), diff.col(2));
}

template <typename Scalar>
Series<Scalar> timestamps(Eigen::Index n, Scalar dt)
{
    return Series<Scalar>::LinSpaced(n, Scalar(0), Scalar(n - 1)) * dt;
}

enum class Signal : int {
    ThumbXVel = 0, ThumbYVel, ThumbZVel,
    IndexXVel, IndexYVel, IndexZVel,
    ThumbXAcc, ThumbYAcc, ThumbZAcc,
    IndexXAcc, IndexYAcc, IndexZAcc,
    ThumbVecVel, IndexVecVel, Thumb2IndexVecVel,
    ThumbVecAcc, IndexVecAcc, Thumb2IndexVecAcc,
};

inline constexpr std::size_t kNumSignals = 18;

// Names used in the kinematic bundle / debug CSV.
inline constexpr std::array<std::string_view, kNumSignals> kSignalNames{
    "Thumb_X_vel", "Thumb_Y_vel", "Thumb_Z_vel", "Index_X_vel", "Index_Y_vel", "Index_Z_vel",
    "Thumb_X_acc", "Thumb_Y_acc", "Thumb_Z_acc", "Index_X_acc", "Index_Y_acc", "Index_Z_acc",
    "Thumb_vec_vel", "Index_vec_vel", "Thumb2Index_vec_vel",
    "Thumb_vec_acc", "Index_vec_acc", "Thumb2Index_vec_acc"};

// Prefixes used in feature keys (lowercase axis letters).
inline constexpr std::array<std::string_view, kNumSignals> kSignalFeaturePrefixes{
    "Thumb_x_vel", "Thumb_y_vel", "Thumb_z_vel", "Index_x_vel", "Index_y_vel", "Index_z_vel",
    "Thumb_x_acc", "Thumb_y_acc", "Thumb_z_acc", "Index_x_acc", "Index_y_acc", "Index_z_acc",
    "Thumb_vec_vel", "Index_vec_vel", "Thumb2Index_vec_vel",
    "Thumb_vec_acc", "Index_vec_acc", "Thumb2Index_vec_acc"};

/// The 18 derived signals of one trial, one column per `Signal`.
struct KinematicBundle {
    Eigen::MatrixXd signals;  // N x 18
    SeriesXd time;            // seconds
    double sample_rate_hz = kDefaultSampleRateHz;

    auto signal(Signal s) const { return signals.col(static_cast<int>(s)); }
    Eigen::Index samples() const { return signals.rows(); }
};

KinematicBundle derive_kinematics(const RawRecording& rec);

// Wide CSV: timestamp followed by the 18 named signals.
std::string serialize_bundle(const KinematicBundle& bundle);

}  // namespace ftap
