#include "crowdtrack/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace crowdtrack {

bool box_valid(const Box& b) {
    return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
           std::isfinite(b.h) && b.w > 0.0 && b.h > 0.0;
}

double iou(const Box& a, const Box& b) {
    const double ox = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
    const double oy = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
    if (ox <= 0.0 || oy <= 0.0) {
        return 0.0;
    }
    const double inter = ox * oy;
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

Offset offset_between(const Box& prev, const Box& curr) {
    return {curr.x - prev.x, curr.y - prev.y, curr.w - prev.w, curr.h - prev.h};
}

Box apply_offset(const Box& b, const Offset& o, bool* clamped) {
    Box out{b.x + o.dx, b.y + o.dy, b.w + o.dw, b.h + o.dh};
    bool hit = false;
    if (out.w < kMinBoxExtent) {
        out.w = kMinBoxExtent;
        hit = true;
    }
    if (out.h < kMinBoxExtent) {
        out.h = kMinBoxExtent;
        hit = true;
    }
    if (clamped != nullptr) {
        *clamped = hit;
    }
    return out;
}

}  // namespace crowdtrack
