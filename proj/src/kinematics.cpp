#include "ftap/kinematics.hpp"

#include "ftap/io.hpp"

namespace ftap {

KinematicBundle derive_kinematics(const RawRecording& rec)
{
    const Eigen::Index n = rec.samples();
    const double dt = rec.dt();
    KinematicBundle b;
    b.sample_rate_hz = rec.info.sample_rate_hz;
    b.time = timestamps(n, dt);
    b.signals.resize(n, static_cast<Eigen::Index>(kNumSignals));

    // velocities are the raw gyroscope channels
    b.signals.leftCols(6) = rec.gyro;
    for (int c = 0; c < 6; ++c) b.signals.col(6 + c) = differentiate(rec.gyro.col(c), dt);

    const auto vel = b.signals.leftCols(6);
    const auto acc = b.signals.middleCols(6, 6);
    b.signals.col(static_cast<int>(Signal::ThumbVecVel)) = vector_magnitude(vel.col(0), vel.col(1), vel.col(2));
    b.signals.col(static_cast<int>(Signal::IndexVecVel)) = vector_magnitude(vel.col(3), vel.col(4), vel.col(5));
    b.signals.col(static_cast<int>(Signal::Thumb2IndexVecVel)) =
        relative_vector(Eigen::MatrixXd(vel.leftCols(3)), Eigen::MatrixXd(vel.rightCols(3)));
    b.signals.col(static_cast<int>(Signal::ThumbVecAcc)) = vector_magnitude(acc.col(0), acc.col(1), acc.col(2));
    b.signals.col(static_cast<int>(Signal::IndexVecAcc)) = vector_magnitude(acc.col(3), acc.col(4), acc.col(5));
    b.signals.col(static_cast<int>(Signal::Thumb2IndexVecAcc)) =
        relative_vector(Eigen::MatrixXd(acc.leftCols(3)), Eigen::MatrixXd(acc.rightCols(3)));
    return b;
}

std::string serialize_bundle(const KinematicBundle& bundle)
{
    std::string out = "timestamp";
    for (auto name : kSignalNames) {
        out += ',';
        out += name;
    }
    out += '\n';
    for (Eigen::Index r = 0; r < bundle.samples(); ++r) {
        out += io::format_double(bundle.time(r));
        for (Eigen::Index c = 0; c < bundle.signals.cols(); ++c) {
            out += ',';
            out += io::format_double(bundle.signals(r, c));
        }
        out += '\n';
    }
    return out;
}

}  // namespace ftap
