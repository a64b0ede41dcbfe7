#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "langtrack/geometry.hpp"

namespace langtrack {

/// Dense row-major cost matrix with a mask of gated-out (forbidden) pairs.
class CostMatrix {
public:
    CostMatrix() = default;
    CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double& at(std::size_t r, std::size_t c) { return cost_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return cost_[r * cols_ + c]; }

    bool forbidden(std::size_t r, std::size_t c) const { return forbidden_[r * cols_ + c] != 0; }
    void set_forbidden(std::size_t r, std::size_t c, bool value = true) {
        forbidden_[r * cols_ + c] = value ? 1 : 0;
    }

    /// Elementwise sum of costs; the result forbids what either operand forbids.
    CostMatrix& operator+=(const CostMatrix& other);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> cost_;
    std::vector<unsigned char> forbidden_;
};

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> matches;  ///< (row, col), ascending row
    std::vector<std::size_t> unmatched_rows;
    std::vector<std::size_t> unmatched_cols;
};

/// cost = 1 - IoU; pairs with IoU < gate are forbidden.
CostMatrix iou_cost(std::span<const BBox> tracks, std::span<const BBox> dets, double gate);

/// Two observations of a track, Δt frames apart (latest last).
struct ObservedMotion {
    StateBox earlier;
    StateBox latest;
};

/// Direction-consistency cost: weight * |angle between the track's observed heading and the
/// heading from its latest observation to the candidate centre|, in [0, weight*pi].
/// Tracks without a motion pair, and near-zero displacements, get zero.
CostMatrix ocm_cost(std::span<const std::optional<ObservedMotion>> tracks,
                    std::span<const BBox> dets, double weight);

/// Optimal assignment over permitted pairs. Maximises the number of matches first and then
/// minimises the summed cost; never uses a forbidden pair. Rows or columns with no permitted
/// entry are reported unmatched without entering the solver. Deterministic: among equal
/// minima the scan keeps the lowest row, then the lowest column.
Assignment solve_assignment(const CostMatrix& m);

/// Sum of the chosen entries, accumulated in row order.
double assignment_cost(const CostMatrix& m, const Assignment& a);

}  // namespace langtrack
