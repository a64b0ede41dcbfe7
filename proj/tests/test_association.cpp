#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "assignment_oracle.hpp"
#include "langtrack/association.hpp"

using namespace langtrack;

namespace {

CostMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n = rows.size();
    const std::size_t m = rows.begin()->size();
    CostMatrix out(n, m);
    std::size_t r = 0;
    for (const auto& row : rows) {
        std::size_t c = 0;
        for (double v : row) out.at(r, c++) = v;
        ++r;
    }
    return out;
}

CostMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double forbid) {
    std::uniform_real_distribution<double> cost(0.0, 1.0);
    std::bernoulli_distribution gate(forbid);
    CostMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            m.at(r, c) = cost(rng);
            if (gate(rng)) m.set_forbidden(r, c);
        }
    return m;
}

void check_well_formed(const CostMatrix& m, const Assignment& a) {
    std::set<std::size_t> rows, cols;
    for (auto [r, c] : a.matches) {
        CHECK_FALSE(m.forbidden(r, c));
        CHECK(rows.insert(r).second);
        CHECK(cols.insert(c).second);
    }
    for (std::size_t r : a.unmatched_rows) CHECK(rows.insert(r).second);
    for (std::size_t c : a.unmatched_cols) CHECK(cols.insert(c).second);
    CHECK(rows.size() == m.rows());
    CHECK(cols.size() == m.cols());
}

}  // namespace

TEST_CASE("solver examples") {
    const Assignment a = solve_assignment(from_rows({{0.1, 0.9}, {0.9, 0.1}}));
    REQUIRE(a.matches.size() == 2);
    CHECK(a.matches[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(a.matches[1] == std::pair<std::size_t, std::size_t>{1, 1});

    CostMatrix gated = from_rows({{0.5}});
    gated.set_forbidden(0, 0);
    const Assignment none = solve_assignment(gated);
    CHECK(none.matches.empty());
    CHECK(none.unmatched_rows == std::vector<std::size_t>{0});
    CHECK(none.unmatched_cols == std::vector<std::size_t>{0});

    const Assignment empty = solve_assignment(CostMatrix(0, 4));
    CHECK(empty.matches.empty());
    CHECK(empty.unmatched_cols.size() == 4);
}

TEST_CASE("solver prefers more matches over lower cost") {
    // Greedy on cost would take (0,0) and strand row 1.
    CostMatrix m = from_rows({{0.0, 0.9}, {0.1, 0.0}});
    m.set_forbidden(1, 1);
    const Assignment a = solve_assignment(m);
    CHECK(a.matches.size() == 2);
    CHECK(assignment_cost(m, a) == doctest::Approx(1.0));
}

TEST_CASE("rectangular matrices") {
    const CostMatrix wide = from_rows({{0.3, 0.1, 0.7}});
    const Assignment a = solve_assignment(wide);
    REQUIRE(a.matches.size() == 1);
    CHECK(a.matches[0].second == 1);
    CHECK(a.unmatched_cols == std::vector<std::size_t>{0, 2});

    const CostMatrix tall = from_rows({{0.3}, {0.1}, {0.7}});
    const Assignment b = solve_assignment(tall);
    REQUIRE(b.matches.size() == 1);
    CHECK(b.matches[0].first == 1);
}

TEST_CASE("ties break deterministically") {
    const CostMatrix flat(3, 3, 0.5);
    const Assignment a = solve_assignment(flat);
    const Assignment b = solve_assignment(flat);
    CHECK(a.matches == b.matches);
    CHECK(a.matches.size() == 3);
}

TEST_CASE("solver agrees with exhaustive search") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(1, 6);
    for (int trial = 0; trial < 400; ++trial) {
        const CostMatrix m = random_matrix(rng, size(rng), size(rng), 0.3);
        const Assignment a = solve_assignment(m);
        check_well_formed(m, a);
        const oracle::BruteResult best = oracle::brute_force(m);
        CHECK(a.matches.size() == best.count);
        CHECK(assignment_cost(m, a) == doctest::Approx(best.cost).epsilon(1e-12));
    }
}

TEST_CASE("permuting inputs permutes the matching") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const CostMatrix m = random_matrix(rng, 5, 4, 0.2);
        std::vector<std::size_t> rp{0, 1, 2, 3, 4}, cp{0, 1, 2, 3};
        std::shuffle(rp.begin(), rp.end(), rng);
        std::shuffle(cp.begin(), cp.end(), rng);
        CostMatrix p(5, 4);
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t c = 0; c < 4; ++c) {
                p.at(r, c) = m.at(rp[r], cp[c]);
                p.set_forbidden(r, c, m.forbidden(rp[r], cp[c]));
            }
        const Assignment a = solve_assignment(m);
        const Assignment b = solve_assignment(p);
        CHECK(a.matches.size() == b.matches.size());
        CHECK(assignment_cost(m, a) == doctest::Approx(assignment_cost(p, b)).epsilon(1e-12));
    }
}

TEST_CASE("iou_cost gates low overlap") {
    const std::vector<BBox> tracks{{0, 0, 10, 10}, {100, 100, 10, 10}};
    const std::vector<BBox> dets{{0, 0, 10, 10}, {5, 0, 10, 10}};
    const CostMatrix m = iou_cost(tracks, dets, 0.3);
    CHECK(m.at(0, 0) == 0.0);
    CHECK(m.at(0, 1) == doctest::Approx(2.0 / 3.0));
    CHECK_FALSE(m.forbidden(0, 1));
    CHECK(m.forbidden(1, 0));
    CHECK(m.forbidden(1, 1));
    CHECK(iou_cost(tracks, dets, 0.4).forbidden(0, 1));
}

TEST_CASE("ocm_cost measures heading disagreement") {
    const std::vector<std::optional<ObservedMotion>> tracks{
        ObservedMotion{{0, 0, 100, 1}, {10, 0, 100, 1}},  // heading +x
        std::nullopt,
        ObservedMotion{{5, 5, 100, 1}, {5, 5, 100, 1}},  // stationary
    };
    // detection boxes centred at (20,0), (10,10), (0,0)
    const std::vector<BBox> dets{{15, -5, 10, 10}, {5, 5, 10, 10}, {-5, -5, 10, 10}};
    const CostMatrix m = ocm_cost(tracks, dets, 0.2);
    CHECK(m.at(0, 0) == doctest::Approx(0.0));
    CHECK(m.at(0, 1) == doctest::Approx(0.2 * std::numbers::pi / 2));
    CHECK(m.at(0, 2) == doctest::Approx(0.2 * std::numbers::pi));
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(m.at(1, c) == 0.0);
        CHECK(m.at(2, c) == 0.0);
        CHECK_FALSE(m.forbidden(0, c));
    }
}

TEST_CASE("cost matrices add and combine gates") {
    CostMatrix a(1, 2, 0.5), b(1, 2, 0.25);
    a.set_forbidden(0, 0);
    b.set_forbidden(0, 1);
    a += b;
    CHECK(a.at(0, 0) == 0.75);
    CHECK(a.forbidden(0, 0));
    CHECK(a.forbidden(0, 1));
}
