#include "crowdtrack/kalman.hpp"

#include <stdexcept>

namespace crowdtrack {

namespace {

constexpr double kStdWeightPos = 1.0 / 20.0;
constexpr double kStdWeightVel = 1.0 / 160.0;
constexpr double kInitVelVar = 1e8;

using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Vec4 = Eigen::Matrix<double, 4, 1>;

Mat8 transition() {
    Mat8 f = Mat8::Identity();
    for (int i = 0; i < 4; ++i) {
        f(i, i + 4) = 1.0;
    }
    return f;
}

Mat8 process_noise(double h) {
    Vec8 std;
    const double sp = kStdWeightPos * h;
    const double sv = kStdWeightVel * h;
    std << sp, sp, sp, sp, sv, sv, sv, sv;
    return std.array().square().matrix().asDiagonal();
}

Mat4 measurement_noise(double h) {
    const double sp = kStdWeightPos * h;
    Vec4 std;
    std << sp, sp, sp, sp;
    return std.array().square().matrix().asDiagonal();
}

void check_pd(Mat8& cov) {
    cov = 0.5 * (cov + cov.transpose()).eval();  // symmetrize
    Eigen::LLT<Mat8> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("kalman: covariance lost positive definiteness");
    }
}

}  // namespace

KfState kf_init(const Box& b) {
    KfState s;
    s.mean << b.x, b.y, b.w, b.h, 0.0, 0.0, 0.0, 0.0;
    const double sp = 2.0 * kStdWeightPos * b.h;
    s.covariance = Mat8::Zero();
    for (int i = 0; i < 4; ++i) {
        s.covariance(i, i) = sp * sp;
        s.covariance(i + 4, i + 4) = kInitVelVar;
    }
    return s;
}

KfState kf_predict(const KfState& s) {
    const Mat8 f = transition();
    KfState out;
    out.mean = f * s.mean;
    out.covariance = f * s.covariance * f.transpose() + process_noise(s.mean(3));
    return out;
}

KfState kf_update(const KfState& s, const Box& det) {
    Eigen::Matrix<double, 4, 8> h = Eigen::Matrix<double, 4, 8>::Zero();
    for (int i = 0; i < 4; ++i) {
        h(i, i) = 1.0;
    }
    const Vec4 z{det.x, det.y, det.w, det.h};
    const Mat4 innovation_cov =
        h * s.covariance * h.transpose() + measurement_noise(s.mean(3));
    const Eigen::Matrix<double, 8, 4> gain =
        s.covariance * h.transpose() * innovation_cov.inverse();
    KfState out;
    out.mean = s.mean + gain * (z - h * s.mean);
    out.covariance = (Mat8::Identity() - gain * h) * s.covariance;
    check_pd(out.covariance);
    return out;
}

Box kf_box(const KfState& s) {
    return {s.mean(0), s.mean(1), std::max(s.mean(2), kMinBoxExtent),
            std::max(s.mean(3), kMinBoxExtent)};
}

}  // namespace crowdtrack
