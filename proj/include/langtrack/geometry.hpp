#pragma once

namespace langtrack {

/// Axis-aligned box in pixels. Origin at the image top-left, y grows downward.
struct BBox {
    double x = 0.0;  ///< left edge
    double y = 0.0;  ///< top edge
    double w = 0.0;
    double h = 0.0;

    double area() const noexcept { return w * h; }
    double center_x() const noexcept { return x + w / 2.0; }
    double center_y() const noexcept { return y + h / 2.0; }
    bool degenerate() const noexcept { return !(w > 0.0) || !(h > 0.0); }

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Box in the filter's measurement space: center, area and aspect ratio (w/h).
struct StateBox {
    double cx = 0.0;
    double cy = 0.0;
    double s = 0.0;
    double r = 0.0;

    friend bool operator==(const StateBox&, const StateBox&) = default;
};

/// Intersection over union. Zero when the union is empty, so degenerate boxes are fine here.
double iou(const BBox& a, const BBox& b) noexcept;

/// Throws DegenerateStateError unless w > 0 and h > 0.
StateBox to_state(const BBox& b);

/// Throws DegenerateStateError when s < 0, r <= 0 or any field is non-finite.
BBox from_state(const StateBox& sb);

bool is_finite(const BBox& b) noexcept;
bool is_finite(const StateBox& sb) noexcept;

}  // namespace langtrack
