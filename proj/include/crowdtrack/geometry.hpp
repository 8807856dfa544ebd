#pragma once

#include <cstdint>
#include <vector>

namespace crowdtrack {

/// Axis-aligned bounding box in center-size form. All coordinates in pixels.
struct Box {
    double x = 0.0;  // center abscissa
    double y = 0.0;  // center ordinate
    double w = 0.0;  // width, > 0
    double h = 0.0;  // height, > 0

    double left() const { return x - 0.5 * w; }
    double top() const { return y - 0.5 * h; }
    double right() const { return x + 0.5 * w; }
    double bottom() const { return y + 0.5 * h; }
    double area() const { return w * h; }

    bool operator==(const Box&) const = default;
};

/// Per-frame displacement of a box, componentwise curr - prev.
struct Offset {
    double dx = 0.0;
    double dy = 0.0;
    double dw = 0.0;
    double dh = 0.0;

    bool operator==(const Offset&) const = default;
};

/// One detector output box with confidence.
struct Detection {
    int frame = 0;
    Box box;
    double score = 0.0;
};

/// Smallest width/height a clamped box may have.
inline constexpr double kMinBoxExtent = 1e-2;

double iou(const Box& a, const Box& b);

Offset offset_between(const Box& prev, const Box& curr);

/// Componentwise addition; non-positive resulting extents are clamped to
/// kMinBoxExtent and reported through `clamped`.
Box apply_offset(const Box& b, const Offset& o, bool* clamped = nullptr);

bool box_valid(const Box& b);

}  // namespace crowdtrack
