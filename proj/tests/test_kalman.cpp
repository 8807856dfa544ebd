#include <doctest.h>

#include <random>

#include "crowdtrack/kalman.hpp"

using namespace crowdtrack;

TEST_CASE("constant-velocity stream is pinned after two updates") {
    const double vx = 3.0, vy = -2.0;
    Box b{100, 200, 30, 60};
    KfState s = kf_init(b);
    s = kf_update(s, b);
    b.x += vx;
    b.y += vy;
    s = kf_update(kf_predict(s), b);
    for (int step = 0; step < 5; ++step) {
        b.x += vx;
        b.y += vy;
        s = kf_predict(s);
        const Box pred = kf_box(s);
        CHECK(pred.x == doctest::Approx(b.x).epsilon(1e-6));
        CHECK(pred.y == doctest::Approx(b.y).epsilon(1e-6));
        CHECK(pred.w == doctest::Approx(b.w).epsilon(1e-6));
        CHECK(pred.h == doctest::Approx(b.h).epsilon(1e-6));
        s = kf_update(s, b);
    }
}

TEST_CASE("zero velocity coasts in place") {
    const Box b{50, 60, 20, 40};
    KfState s = kf_init(b);
    for (int i = 0; i < 10; ++i) {
        s = kf_predict(s);
    }
    CHECK(kf_box(s).x == doctest::Approx(b.x));
    CHECK(kf_box(s).y == doctest::Approx(b.y));
}

TEST_CASE("covariance stays symmetric PD and update does not grow the trace") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    KfState s = kf_init({300, 300, 25, 50});
    for (int step = 0; step < 50; ++step) {
        s = kf_predict(s);
        const double pre_trace = s.covariance.trace();
        Box z{300 + 3.0 * step + jitter(rng), 300 + jitter(rng), 25, 50};
        s = kf_update(s, z);
        CHECK(s.covariance.trace() <= pre_trace + 1e-9);
        // symmetric
        CHECK((s.covariance - s.covariance.transpose()).norm() < 1e-9);
        // positive definite
        Eigen::LLT<Eigen::Matrix<double, 8, 8>> llt(s.covariance);
        CHECK(llt.info() == Eigen::Success);
    }
}
