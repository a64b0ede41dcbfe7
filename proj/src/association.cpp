#include "langtrack/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "langtrack/error.hpp"

namespace langtrack {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), cost_(rows * cols, fill), forbidden_(rows * cols, 0) {}

CostMatrix& CostMatrix::operator+=(const CostMatrix& other) {
    if (other.rows_ != rows_ || other.cols_ != cols_) {
        throw UsageError("CostMatrix: dimension mismatch in sum");
    }
    for (std::size_t i = 0; i < cost_.size(); ++i) {
        cost_[i] += other.cost_[i];
        forbidden_[i] = static_cast<unsigned char>(forbidden_[i] | other.forbidden_[i]);
    }
    return *this;
}

CostMatrix iou_cost(std::span<const BBox> tracks, std::span<const BBox> dets, double gate) {
    if (!(gate >= 0.0 && gate <= 1.0)) throw UsageError("iou_cost: gate must lie in [0,1]");
    CostMatrix m(tracks.size(), dets.size());
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        for (std::size_t j = 0; j < dets.size(); ++j) {
            const double overlap = iou(tracks[i], dets[j]);
            m.at(i, j) = 1.0 - overlap;
            if (overlap < gate) m.set_forbidden(i, j);
        }
    }
    return m;
}

CostMatrix ocm_cost(std::span<const std::optional<ObservedMotion>> tracks,
                    std::span<const BBox> dets, double weight) {
    constexpr double kMinDisplacement = 1e-6;
    CostMatrix m(tracks.size(), dets.size());
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        if (!tracks[i]) continue;
        const ObservedMotion& mo = *tracks[i];
        const double tx = mo.latest.cx - mo.earlier.cx;
        const double ty = mo.latest.cy - mo.earlier.cy;
        if (std::hypot(tx, ty) < kMinDisplacement) continue;
        const double heading = std::atan2(ty, tx);
        for (std::size_t j = 0; j < dets.size(); ++j) {
            const double cx = dets[j].center_x() - mo.latest.cx;
            const double cy = dets[j].center_y() - mo.latest.cy;
            if (std::hypot(cx, cy) < kMinDisplacement) continue;
            const double diff =
                std::fabs(std::remainder(heading - std::atan2(cy, cx), 2.0 * std::numbers::pi));
            m.at(i, j) = weight * diff;
        }
    }
    return m;
}

namespace {

// Lexicographic cost: number of forbidden pairs used, then the real cost. This is an ordered
// abelian group, so the potential-based Hungarian method runs on it unchanged and the
// "maximise matches, then minimise cost" objective never needs a big-M constant.
struct LexCost {
    long long penalty = 0;
    double value = 0.0;

    friend LexCost operator+(LexCost a, LexCost b) { return {a.penalty + b.penalty, a.value + b.value}; }
    friend LexCost operator-(LexCost a, LexCost b) { return {a.penalty - b.penalty, a.value - b.value}; }
    LexCost& operator+=(LexCost o) { penalty += o.penalty; value += o.value; return *this; }
    LexCost& operator-=(LexCost o) { penalty -= o.penalty; value -= o.value; return *this; }
    friend bool operator<(LexCost a, LexCost b) {
        return a.penalty != b.penalty ? a.penalty < b.penalty : a.value < b.value;
    }
};

// Shortest augmenting path Hungarian for n <= m (1-based internally).
// Returns, for each row, the assigned column.
template <typename CostFn>
std::vector<std::size_t> hungarian(std::size_t n, std::size_t m, CostFn cost) {
    const LexCost inf{std::numeric_limits<long long>::max() / 4, 0.0};
    std::vector<LexCost> u(n + 1), v(m + 1);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<LexCost> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            LexCost delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const LexCost cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

}  // namespace

Assignment solve_assignment(const CostMatrix& m) {
    Assignment out;
    std::vector<std::size_t> rows, cols;
    std::vector<char> col_live(m.cols(), 0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        bool any = false;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (!m.forbidden(i, j)) {
                any = true;
                col_live[j] = 1;
            }
        }
        if (any) rows.push_back(i);
    }
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (col_live[j]) cols.push_back(j);
    }

    std::vector<char> row_matched(m.rows(), 0), col_matched(m.cols(), 0);
    if (!rows.empty()) {
        auto entry = [&](std::size_t r, std::size_t c) -> LexCost {
            if (m.forbidden(r, c)) return {1, 0.0};
            return {0, m.at(r, c)};
        };
        const bool transpose = rows.size() > cols.size();
        const std::size_t n = transpose ? cols.size() : rows.size();
        const std::size_t k = transpose ? rows.size() : cols.size();
        const auto chosen = hungarian(n, k, [&](std::size_t a, std::size_t b) {
            return transpose ? entry(rows[b], cols[a]) : entry(rows[a], cols[b]);
        });
        for (std::size_t a = 0; a < n; ++a) {
            const std::size_t r = transpose ? rows[chosen[a]] : rows[a];
            const std::size_t c = transpose ? cols[a] : cols[chosen[a]];
            if (m.forbidden(r, c)) continue;
            out.matches.emplace_back(r, c);
            row_matched[r] = 1;
            col_matched[c] = 1;
        }
    }
    std::sort(out.matches.begin(), out.matches.end());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (!row_matched[i]) out.unmatched_rows.push_back(i);
    }
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (!col_matched[j]) out.unmatched_cols.push_back(j);
    }
    return out;
}

double assignment_cost(const CostMatrix& m, const Assignment& a) {
    double total = 0.0;
    for (const auto& [r, c] : a.matches) total += m.at(r, c);
    return total;
}

}  // namespace langtrack
