#include "langtrack/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "langtrack/error.hpp"

namespace langtrack {

double iou(const BBox& a, const BBox& b) noexcept {
    const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    const double inter = (ix > 0.0 && iy > 0.0) ? ix * iy : 0.0;
    const double uni = a.area() + b.area() - inter;
    if (!(uni > 0.0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

bool is_finite(const BBox& b) noexcept {
    return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h);
}

bool is_finite(const StateBox& sb) noexcept {
    return std::isfinite(sb.cx) && std::isfinite(sb.cy) && std::isfinite(sb.s) &&
           std::isfinite(sb.r);
}

StateBox to_state(const BBox& b) {
    if (!is_finite(b) || b.degenerate()) {
        throw DegenerateStateError("to_state: box must have finite coordinates and positive size");
    }
    return StateBox{b.x + b.w / 2.0, b.y + b.h / 2.0, b.w * b.h, b.w / b.h};
}

BBox from_state(const StateBox& sb) {
    if (!is_finite(sb) || sb.s < 0.0 || !(sb.r > 0.0)) {
        throw DegenerateStateError("from_state: requires s >= 0 and r > 0");
    }
    const double w = std::sqrt(sb.s * sb.r);
    const double h = std::sqrt(sb.s / sb.r);
    return BBox{sb.cx - w / 2.0, sb.cy - h / 2.0, w, h};
}

}  // namespace langtrack
