// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "assignment_oracle.hpp"
#include "kf_oracle.hpp"
#include "langtrack/association.hpp"
#include "langtrack/metrics.hpp"
#include "langtrack/motion.hpp"
#include "langtrack/report.hpp"
#include "langtrack/simulate.hpp"
#include "langtrack/tracker.hpp"
#include "metrics_fixtures.hpp"

using namespace langtrack;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------- assignment

void assignment_optimality() {
    std::mt19937_64 rng(1000);
    std::uniform_int_distribution<std::size_t> size(1, 6);
    std::uniform_real_distribution<double> cost(0.0, 1.0);
    std::bernoulli_distribution forbid(0.2);
    std::vector<CostMatrix> mats;
    for (int i = 0; i < 1000; ++i) {
        CostMatrix m(size(rng), size(rng));
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < m.cols(); ++c) {
                m.at(r, c) = cost(rng);
                if (forbid(rng)) m.set_forbidden(r, c);
            }
        mats.push_back(std::move(m));
    }
    int exact = 0;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Assignment> solved;
    for (const auto& m : mats) solved.push_back(solve_assignment(m));
    const double elapsed = seconds_since(t0);
    for (std::size_t i = 0; i < mats.size(); ++i) {
        const oracle::BruteResult best = oracle::brute_force(mats[i]);
        bool ok = solved[i].matches.size() == best.count;
        for (auto [r, c] : solved[i].matches) ok = ok && !mats[i].forbidden(r, c);
        // Same summation order as the oracle (ascending row).
        ok = ok && assignment_cost(mats[i], solved[i]) == best.cost;
        exact += ok;
    }
    report("assignment optimality", exact == 1000 && elapsed < 5.0,
           fmt("%d/1000 equal to brute force, solver time %.3f s (< 5 s)", exact, elapsed));
}

// ---------------------------------------------------------------------------- kalman

void kalman_conformance() {
    const MotionModel model;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 3.0);

    // Aspect channel: random walk, q = 1, r = 10, p0 = 10.
    double worst = 0.0;
    KalmanState st = model.init({0, 0, 1000, 1.0});
    oracle::ScalarKf aspect{1.0, 10.0, 1.0, 10.0};
    oracle::PosVelKf pos{0, 0, 10, 0, 1e4, 1.0, 0.01, 1.0};
    for (int k = 1; k <= 500; ++k) {
        st = model.predict(st);
        aspect.predict();
        pos.predict();
        worst = std::max({worst, std::abs(st.mean(3) - aspect.x), std::abs(st.cov(3, 3) - aspect.p),
                          std::abs(st.mean(0) - pos.x) / std::max(1.0, std::abs(pos.x)),
                          std::abs(st.cov(0, 0) - pos.p00) / std::max(1.0, pos.p00)});
        if (k % 7 == 0) continue;
        const double zr = 1.0 + 0.2 * std::sin(0.1 * k) + 0.05 * noise(rng);
        const double zx = 2.5 * k + noise(rng);
        st = model.update(st, {zx, 0, 1000, zr});
        aspect.update(zr);
        pos.update(zx);
        worst = std::max({worst, std::abs(st.mean(3) - aspect.x), std::abs(st.cov(3, 3) - aspect.p),
                          std::abs(st.mean(0) - pos.x) / std::max(1.0, std::abs(pos.x)),
                          std::abs(st.mean(4) - pos.v), std::abs(st.cov(0, 4) - pos.p01)});
    }

    std::uniform_real_distribution<double> loc(-500, 500), area(20, 20000), ratio(0.1, 4.0);
    std::bernoulli_distribution observe(0.6), restart(0.01);
    int steps = 0, bad = 0;
    KalmanState s = model.init({loc(rng), loc(rng), area(rng), ratio(rng)});
    while (steps < 10000) {
        if (restart(rng)) s = model.init({loc(rng), loc(rng), area(rng), ratio(rng)});
        s = model.predict(s);
        ++steps;
        if (observe(rng)) {
            s = model.update(s, {loc(rng), loc(rng), area(rng), ratio(rng)});
            ++steps;
        }
        const double scale = s.cov.cwiseAbs().maxCoeff();
        const bool symmetric = (s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale;
        Eigen::SelfAdjointEigenSolver<StateMatrix> es(s.cov);
        const bool psd = es.eigenvalues().minCoeff() >= -1e-9 * es.eigenvalues().cwiseAbs().maxCoeff();
        bad += !(symmetric && psd);
    }
    report("kalman conformance", worst <= 1e-9 && bad == 0,
           fmt("max deviation from textbook recursions %.2e (<= 1e-9); %d/%d steps symmetric PSD",
               worst, steps - bad, steps));
}

// ---------------------------------------------------------------------------- ORU

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void oru_equivalence() {
    const MotionModel model;
    auto truth = [](int k) { return StateBox{200.0 + 4.0 * k, 300.0 - 1.5 * k, 2500.0 + 10.0 * k, 0.5}; };
    KalmanState st = model.init(truth(0));
    for (int k = 1; k <= 12; ++k) st = model.update(model.predict(st), truth(k));
    const int gap = 5;
    KalmanState fed = st;
    for (int k = 13; k <= 12 + gap; ++k) fed = model.update(model.predict(fed), truth(k));
    const KalmanState replay = model.reupdate(st, truth(12), truth(12 + gap), gap);
    const double dev = std::max((replay.mean - fed.mean).cwiseAbs().maxCoeff(),
                                (replay.cov - fed.cov).cwiseAbs().maxCoeff());

    // 100 trials: noisy track, 10 missed frames during which the target turns, then re-detection.
    std::vector<double> with, without;
    for (int trial = 0; trial < 100; ++trial) {
        std::mt19937_64 rng(5000 + static_cast<std::uint64_t>(trial));
        std::uniform_real_distribution<double> speed(2, 6), angle(-std::numbers::pi, std::numbers::pi),
            turn(-0.8, 0.8);
        std::normal_distribution<double> jitter(0.0, 1.0);
        const double sp = speed(rng), a0 = angle(rng), a1 = a0 + turn(rng);
        std::vector<std::pair<double, double>> path{{960, 540}};
        for (int k = 1; k <= 40; ++k) {
            const double a = k <= 15 ? a0 : a1;
            path.emplace_back(path.back().first + sp * std::cos(a), path.back().second + sp * std::sin(a));
        }
        auto observe = [&](int k) {
            return StateBox{path[k].first + jitter(rng), path[k].second + jitter(rng), 4000, 0.5};
        };
        KalmanState kf = model.init(observe(0));
        StateBox last{};
        for (int k = 1; k <= 15; ++k) {
            last = observe(k);
            kf = model.update(model.predict(kf), last);
        }
        const KalmanState at_loss = kf;
        const int redetect = 26;  // frames 16..25 missed
        const StateBox again = observe(redetect);
        KalmanState plain = at_loss;
        for (int k = 16; k < redetect; ++k) plain = model.predict(plain);
        plain = model.update(model.predict(plain), again);
        KalmanState oru = model.reupdate(at_loss, last, again, redetect - 15);
        for (int k = redetect + 1; k <= redetect + 5; ++k) {
            plain = model.predict(plain);
            oru = model.predict(oru);
        }
        const auto& tp = path[redetect + 5];
        with.push_back(std::hypot(oru.mean(0) - tp.first, oru.mean(1) - tp.second));
        without.push_back(std::hypot(plain.mean(0) - tp.first, plain.mean(1) - tp.second));
    }
    const double mw = median(with), mo = median(without);
    report("ORU equivalence", dev <= 1e-6 && mw < mo,
           fmt("gap-5 deviation from truth-fed filter %.2e (<= 1e-6); gap-10 median error %.3f px with "
               "ORU vs %.3f px without",
               dev, mw, mo));
}

// ---------------------------------------------------------------------------- metrics

void metric_fixtures() {
    const MetricReport perfect = evaluate(fixtures::perfect_unit());
    const bool p_ok = perfect.hota == 1.0 && perfect.mota == 1.0 && perfect.idf1 == 1.0;
    const MetricReport split = evaluate(fixtures::split_unit());
    const bool s_ok = std::abs(split.assa - 0.5) <= 1e-12 && std::abs(split.hota - 0.70711) <= 1e-5 &&
                      split.mota == 0.9 && split.idf1 == 0.5 && split.ids == 1;
    report("metric fixtures", p_ok && s_ok,
           fmt("perfect HOTA=%.3f MOTA=%.3f IDF1=%.3f; split AssA=%.6f HOTA=%.6f MOTA=%.17g IDF1=%.17g IDs=%lld",
               perfect.hota, perfect.mota, perfect.idf1, split.assa, split.hota, split.mota, split.idf1,
               split.ids));
}

bool bit_same(double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

bool bit_equal(const MetricReport& a, const MetricReport& b) {
    return bit_same(a.hota, b.hota) && bit_same(a.assa, b.assa) && bit_same(a.deta, b.deta) &&
           bit_same(a.loca, b.loca) && bit_same(a.mota, b.mota) && a.fn == b.fn && a.fp == b.fp &&
           a.ids == b.ids && bit_same(a.idr, b.idr) && bit_same(a.idp, b.idp) && bit_same(a.idf1, b.idf1);
}

void metric_invariances() {
    std::mt19937_64 rng(50);
    int relabel_ok = 0;
    for (int i = 0; i < 50; ++i) {
        const EvalUnit u = fixtures::random_unit(rng, "seq", std::to_string(i), "surveillance", 12, 4);
        std::map<int, int> ids;
        for (const auto& f : u.pred)
            for (const auto& b : f) ids.emplace(b.id, 0);
        std::vector<int> fresh;
        for (std::size_t k = 0; k < ids.size(); ++k) fresh.push_back(500 + 13 * static_cast<int>(k));
        std::shuffle(fresh.begin(), fresh.end(), rng);
        std::size_t k = 0;
        for (auto& [from, to] : ids) to = fresh[k++];
        EvalUnit relabeled = u;
        for (auto& f : relabeled.pred)
            for (auto& b : f) b.id = ids[b.id];
        relabel_ok += bit_equal(evaluate(u), evaluate(relabeled));
    }
    int assoc_ok = 0;
    for (int i = 0; i < 50; ++i) {
        const auto a = UnitAccumulator::from_unit(fixtures::random_unit(rng, "a", std::to_string(i)));
        const auto b = UnitAccumulator::from_unit(fixtures::random_unit(rng, "b", std::to_string(i)));
        const auto c = UnitAccumulator::from_unit(fixtures::random_unit(rng, "c", std::to_string(i)));
        UnitAccumulator left = a;
        left.merge(b).merge(c);
        UnitAccumulator bc = b;
        bc.merge(c);
        UnitAccumulator right = a;
        right.merge(bc);
        assoc_ok += left == right && bit_equal(left.report(), right.report());
    }
    report("metric invariances", relabel_ok == 50 && assoc_ok == 50,
           fmt("%d/50 relabelled units bit-identical on all 11 metrics; %d/50 merges associative",
               relabel_ok, assoc_ok));
}

// ---------------------------------------------------------------------------- end to end

EvalUnit track_unit(const SimResult& sim, const TrackerConfig& cfg) {
    const TrackSet out = run(sim.frames(), cfg);
    return make_unit(sim.manifest.sequence_id, "0001", sim.manifest.scenario, sim.gt, out,
                     static_cast<std::size_t>(sim.manifest.frame_count));
}

void end_to_end() {
    TrackerConfig ocsort;
    double worst_mota = 1.0, worst_hota = 1.0;
    long long ids = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SimConfig sc;
        sc.seed = seed;
        sc.num_targets = 10;
        sc.num_frames = 100;
        const MetricReport clean = evaluate(track_unit(generate(sc), ocsort));
        worst_mota = std::min(worst_mota, clean.mota);
        ids += clean.ids;
        sc.dropout_prob = 0.1;
        sc.det_noise_std = 1.0;
        worst_hota = std::min(worst_hota, evaluate(track_unit(generate(sc), ocsort)).hota);
    }
    report("end-to-end perfect detections", worst_mota >= 0.99 && ids == 0,
           fmt("10 targets x 100 frames, seeds 1-10: min MOTA %.4f (>= 0.99), IDs %lld (= 0)", worst_mota, ids));
    report("end-to-end noisy detections", worst_hota >= 0.85,
           fmt("dropout 0.1, noise 1 px, seeds 1-10: min HOTA %.4f (>= 0.85)", worst_hota));

    TrackerConfig sort_cfg, byte_cfg;
    sort_cfg.strategy = Strategy::sort;
    byte_cfg.strategy = Strategy::byte;
    int wins = 0;
    std::string margins;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SimConfig sc;
        sc.seed = 100 + seed;
        sc.num_targets = 10;
        for (int t = 1; t <= 10; ++t) sc.dips.push_back({t, 10 + 7 * t, 15, 0.3});
        const SimResult sim = generate(sc);
        const double ms = evaluate(track_unit(sim, sort_cfg)).mota;
        const double mb = evaluate(track_unit(sim, byte_cfg)).mota;
        wins += mb > ms;
        margins += fmt(" %.3f>%.3f", mb, ms);
    }
    report("confidence dip byte vs sort", wins == 10, fmt("%d/10 seeds MOTA(byte) > MOTA(sort):%s", wins, margins.c_str()));
}

// ---------------------------------------------------------------------------- thresholds

void threshold_semantics() {
    int spawned = 0;
    for (Strategy s : {Strategy::sort, Strategy::ocsort, Strategy::byte}) {
        TrackerConfig cfg;
        cfg.strategy = s;
        for (double score : {0.0, 0.1, 0.3, 0.49, 0.4999999}) {
            Tracker tr(cfg);
            for (int f = 1; f <= 50; ++f) {
                std::vector<Detection> dets;
                for (int t = 0; t < 5; ++t) dets.push_back({f, {100.0 * t + f, 200, 40, 80}, score});
                tr.step(f, dets);
            }
            spawned += tr.spawned();
        }
    }
    TrackerConfig at_threshold;
    Tracker tr(at_threshold);
    tr.step(1, std::vector<Detection>{{1, {0, 0, 10, 10}, 0.5}});
    const bool spawns_at_tau = tr.spawned() == 1;

    int reassociated = 0, separated = 0, cases = 0;
    for (Strategy s : {Strategy::sort, Strategy::byte, Strategy::ocsort}) {
        TrackerConfig cfg;
        cfg.strategy = s;
        for (double speed : {0.0, 1.5}) {
            for (int gap : {1, 15, 30, 31, 45}) {
                std::vector<std::vector<Detection>> frames(20 + gap + 20);
                for (int k = 0; k < static_cast<int>(frames.size()); ++k) {
                    if (k >= 20 && k < 20 + gap) continue;
                    frames[k].push_back({k + 1, {300 + speed * k, 300, 60, 120}, 0.9});
                }
                std::set<int> ids;
                for (const auto& r : run(frames, cfg)) ids.insert(r.id);
                ++cases;
                if (gap <= 30) reassociated += ids.size() == 1;
                else separated += ids.size() == 2;
            }
        }
    }
    const bool ok = spawned == 0 && spawns_at_tau && reassociated + separated == cases;
    report("threshold semantics", ok,
           fmt("%d tracks spawned from scores < 0.5; %d/%d gaps <= 30 re-associated, %d/%d gaps > 30 got a new id",
               spawned, reassociated, cases * 3 / 5, separated, cases * 2 / 5));
}

// ---------------------------------------------------------------------------- performance

void performance() {
    SimConfig sc;
    sc.seed = 9;
    sc.num_targets = 50;
    sc.num_frames = 1000;
    sc.image_width = 8000;
    sc.image_height = 6000;
    sc.det_noise_std = 1.0;
    const SimResult sim = generate(sc);
    const auto frames = sim.frames();
    double worst = 0.0;
    std::size_t boxes = 0;
    for (Strategy s : {Strategy::sort, Strategy::byte, Strategy::ocsort}) {
        TrackerConfig cfg;
        cfg.strategy = s;
        const auto t0 = std::chrono::steady_clock::now();
        boxes = run(frames, cfg).size();
        worst = std::max(worst, seconds_since(t0));
    }
    report("tracking throughput", worst < 5.0,
           fmt("1000 frames x 50 tracks: slowest strategy %.3f s (< 5 s), %zu output boxes", worst, boxes));

    std::vector<EvalUnit> units;
    for (int i = 0; i < 100; ++i) {
        SimConfig u;
        u.seed = 200 + static_cast<std::uint64_t>(i);
        u.num_targets = 10;
        u.num_frames = 100;
        u.det_noise_std = 2.0;
        u.dropout_prob = 0.1;
        u.false_pos_rate = 0.5;
        u.scenario = standard_scenarios()[static_cast<std::size_t>(i) % 5];
        const SimResult r = generate(u);
        units.push_back(make_unit(r.manifest.sequence_id, "0001", u.scenario, r.gt, run(r.frames(), TrackerConfig{}),
                                  100));
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = aggregate(units, Grouping::per_scenario, 1);
    const double elapsed = seconds_since(t0);
    report("evaluation throughput", elapsed < 30.0 && rows.size() == 6,
           fmt("100 units (single thread): %.3f s (< 30 s), overall HOTA %.4f", elapsed, rows[0].metrics.hota));
}

// ---------------------------------------------------------------------------- report layout

void report_layout() {
    const std::vector<std::string> expected{"HOTA", "AssA", "DetA", "LocA", "MOTA", "FN",
                                            "FP",   "IDs",  "IDR",  "IDP",  "IDF1"};
    bool ok = std::equal(kReportColumns.begin(), kReportColumns.end(), expected.begin(), expected.end());
    const auto rows = aggregate(std::vector{fixtures::split_unit()}, Grouping::overall);
    const std::string table = render_table(rows);
    std::istringstream lines(table);
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    std::istringstream head_tokens(header);
    std::vector<std::string> tokens;
    for (std::string t; head_tokens >> t;) tokens.push_back(t);
    ok = ok && tokens.size() >= expected.size() &&
         std::equal(expected.begin(), expected.end(), tokens.end() - static_cast<std::ptrdiff_t>(expected.size()));
    std::istringstream row_tokens(row);
    std::vector<std::string> cells;
    for (std::string t; row_tokens >> t;) cells.push_back(t);
    ok = ok && cells.size() == tokens.size();
    report("report layout", ok, fmt("columns in order [%s]; sample row: %s", header.c_str(), row.c_str()));
}

}  // namespace

int main() {
    assignment_optimality();
    kalman_conformance();
    oru_equivalence();
    metric_fixtures();
    metric_invariances();
    end_to_end();
    threshold_semantics();
    performance();
    report_layout();
    std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "OK", failures);
    return failures ? 1 : 0;
}
