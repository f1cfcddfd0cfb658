#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ftap/kinematics.hpp"
#include "ftap/synthetic.hpp"

using namespace ftap;

namespace {

RawRecording random_recording(std::uint64_t seed, Eigen::Index n = 120)
{
    synthetic::Rng rng(seed);
    RawRecording rec;
    rec.info = {"S", "1", Label::HC, 200.0};
    rec.gyro.resize(n, 6);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < 6; ++c) rec.gyro(i, c) = 100.0 * rng.normal();
    return rec;
}

SeriesXd vec(std::initializer_list<double> v)
{
    SeriesXd s(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) s(i++) = x;
    return s;
}

}  // namespace

TEST_CASE("differentiate stencil")
{
    CHECK(differentiate(vec({0, 1, 4, 9}), 1.0) == vec({1, 2, 4, 5}));
    CHECK(differentiate(vec({7, 7, 7, 7}), 0.3).isZero(0.0));
    CHECK_THROWS_AS(differentiate(vec({1}), 1.0), Error);
    CHECK_THROWS_AS(differentiate(vec({1, 2}), 0.0), Error);
}

TEST_CASE("differentiate matches a difference-quotient oracle")
{
    synthetic::Rng rng(11);
    SeriesXd x(50);
    for (auto& v : x) v = rng.normal();
    const double dt = 0.005;
    const auto d = differentiate(x, dt);
    for (Eigen::Index i = 0; i < 50; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(i - 1, 0), hi = std::min<Eigen::Index>(i + 1, 49);
        const double expected = (x(hi) - x(lo)) / (static_cast<double>(hi - lo) * dt);
        CHECK(std::abs(d(i) - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("differentiate is linear")
{
    synthetic::Rng rng(12);
    SeriesXd f(40), g(40);
    for (Eigen::Index i = 0; i < 40; ++i) {
        f(i) = rng.normal();
        g(i) = rng.normal();
    }
    const double a = 2.5, b = -0.75, dt = 0.01;
    const SeriesXd lhs = differentiate(SeriesXd(a * f + b * g), dt);
    const SeriesXd rhs = a * differentiate(f, dt) + b * differentiate(g, dt);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
}

TEST_CASE("vector magnitude")
{
    CHECK(vector_magnitude(vec({3}), vec({4}), vec({0}))(0) == 5.0);
    CHECK(vector_magnitude(SeriesXd::Zero(5), SeriesXd::Zero(5), SeriesXd::Zero(5)).isZero(0.0));
    CHECK_THROWS_AS(vector_magnitude(vec({1, 2}), vec({1}), vec({1, 2})), Error);
    synthetic::Rng rng(3);
    SeriesXd x(30), y(30), z(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
        x(i) = rng.normal();
        y(i) = rng.normal();
        z(i) = rng.normal();
    }
    const auto m = vector_magnitude(x, y, z);
    for (Eigen::Index i = 0; i < 30; ++i)
        CHECK(std::abs(m(i) - std::hypot(x(i), y(i), z(i))) < 1e-12);
}

TEST_CASE("relative vector")
{
    Eigen::MatrixXd thumb(2, 3), index(2, 3);
    thumb << 1, 2, 2, 1, 2, 2;
    index.setZero();
    CHECK(relative_vector(thumb, index) == vec({3, 3}));
    CHECK(relative_vector(thumb, thumb).isZero(0.0));

    const auto rec = random_recording(5, 25);
    const Eigen::MatrixXd t = rec.gyro.leftCols(3), i = rec.gyro.rightCols(3);
    const Eigen::MatrixXd d = t - i;
    CHECK(relative_vector(t, i) == vector_magnitude(d.col(0), d.col(1), d.col(2)));
}

TEST_CASE("timestamps")
{
    const auto t = timestamps<double>(4, 0.005);
    CHECK(t(0) == 0.0);
    CHECK(t(1) == doctest::Approx(0.005));
    CHECK(t(3) == doctest::Approx(0.015));
    CHECK(timestamps<double>(1, 0.005).size() == 1);
    CHECK(timestamps<double>(200, 0.005)(199) == doctest::Approx(0.995).epsilon(1e-15));
}

TEST_CASE("bundle shape and names")
{
    const auto b = derive_kinematics(random_recording(1, 64));
    CHECK(b.signals.cols() == 18);
    CHECK(b.signals.rows() == 64);
    CHECK(b.time.size() == 64);
    for (int s = 12; s < 18; ++s) CHECK(b.signals.col(s).minCoeff() >= 0.0);
    CHECK(kSignalNames[14] == "Thumb2Index_vec_vel");
    CHECK(serialize_bundle(b).rfind("timestamp,Thumb_X_vel,", 0) == 0);
}

TEST_CASE("constant channels")
{
    RawRecording rec;
    rec.info = {"S", "1", Label::HC, 200.0};
    rec.gyro.resize(32, 6);
    for (int c = 0; c < 6; ++c) rec.gyro.col(c).setConstant(c + 1.0);
    const auto b = derive_kinematics(rec);
    CHECK(b.signals.middleCols(6, 6).isZero(0.0));
    for (int s : {12, 13, 14}) CHECK((b.signals.col(s).array() == b.signals(0, s)).all());
}

TEST_CASE("Thumb2Index_vec_vel is zero iff the hands coincide")
{
    auto rec = random_recording(9, 40);
    rec.gyro.rightCols(3) = rec.gyro.leftCols(3);
    CHECK(derive_kinematics(rec).signal(Signal::Thumb2IndexVecVel).isZero(0.0));
    rec.gyro(5, 4) += 1e-3;
    CHECK_FALSE(derive_kinematics(rec).signal(Signal::Thumb2IndexVecVel).isZero(0.0));
}
