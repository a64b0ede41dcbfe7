#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "langtrack/association.hpp"

namespace oracle {

struct BruteResult {
    std::size_t count = 0;
    double cost = 0.0;
};

/// Exhaustive search over every partial injective row->column map using permitted pairs.
/// Best = most matches, then least summed cost.
inline BruteResult brute_force(const langtrack::CostMatrix& m) {
    BruteResult best;
    best.cost = std::numeric_limits<double>::infinity();
    bool found = false;
    std::vector<bool> used(m.cols(), false);
    auto rec = [&](auto& self, std::size_t r, std::size_t count, double cost) -> void {
        if (r == m.rows()) {
            if (!found || count > best.count || (count == best.count && cost < best.cost)) {
                best = {count, cost};
                found = true;
            }
            return;
        }
        self(self, r + 1, count, cost);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (used[c] || m.forbidden(r, c)) continue;
            used[c] = true;
            self(self, r + 1, count + 1, cost + m.at(r, c));
            used[c] = false;
        }
    };
    rec(rec, 0, 0, 0.0);
    return best;
}

}  // namespace oracle
