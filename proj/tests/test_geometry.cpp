#include <doctest.h>

#include <random>

#include "crowdtrack/geometry.hpp"

using namespace crowdtrack;

namespace {

Box random_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(-50.0, 50.0);
    std::uniform_real_distribution<double> ext(0.5, 20.0);
    return {pos(rng), pos(rng), ext(rng), ext(rng)};
}

}  // namespace

TEST_CASE("iou: identity, disjoint, and the corner-form oracle case") {
    const Box a{0, 0, 2, 2};
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, Box{10, 10, 2, 2}) == doctest::Approx(0.0));

    // corner-form arithmetic: a spans [-1,1], b spans [0,2] per axis x,
    // intersection 1x2 = 2, union 4 + 4 - 2 = 6
    const Box b{1, 0, 2, 2};
    CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iou properties: symmetry, range, translation invariance") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const Box a = random_box(rng);
        const Box b = random_box(rng);
        const double v = iou(a, b);
        CHECK(v == iou(b, a));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(iou(a, a) == doctest::Approx(1.0));
        const double tx = 13.25, ty = -7.5;
        const Box at{a.x + tx, a.y + ty, a.w, a.h};
        const Box bt{b.x + tx, b.y + ty, b.w, b.h};
        CHECK(iou(at, bt) == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("offset_between: zero, componentwise, round trip") {
    const Box b{0, 0, 2, 2};
    CHECK(offset_between(b, b) == Offset{});

    const Offset o = offset_between({0, 0, 2, 2}, {3, -1, 2, 4});
    CHECK(o == Offset{3, -1, 0, 2});

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const Box prev = random_box(rng);
        const Box curr = random_box(rng);
        const Box back = apply_offset(prev, offset_between(prev, curr));
        CHECK(back.x == doctest::Approx(curr.x));
        CHECK(back.y == doctest::Approx(curr.y));
        CHECK(back.w == doctest::Approx(curr.w));
        CHECK(back.h == doctest::Approx(curr.h));
    }
}

TEST_CASE("apply_offset: identity, addition, degenerate clamp") {
    const Box b{5, 5, 2, 2};
    bool clamped = true;
    CHECK(apply_offset(b, Offset{}, &clamped) == b);
    CHECK(!clamped);

    CHECK(apply_offset(b, {1, 1, 1, 1}) == Box{6, 6, 3, 3});

    const Box c = apply_offset(b, {0, 0, -3, 0}, &clamped);
    CHECK(clamped);
    CHECK(c == Box{5, 5, kMinBoxExtent, 2});
}

TEST_CASE("box validity") {
    CHECK(box_valid({0, 0, 1, 1}));
    CHECK(!box_valid({0, 0, 0, 1}));
    CHECK(!box_valid({0, 0, 1, -2}));
    const double nan = std::nan("");
    CHECK(!box_valid({nan, 0, 1, 1}));
}
