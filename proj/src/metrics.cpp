#include "langtrack/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include "langtrack/association.hpp"
#include "langtrack/error.hpp"

namespace langtrack {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::vector<BBox> boxes_of(const FrameBoxes& f) {
    std::vector<BBox> out;
    out.reserve(f.size());
    for (const LabeledBox& b : f) out.push_back(b.box);
    return out;
}

const FrameBoxes& frame_or_empty(const std::vector<FrameBoxes>& frames, std::size_t k) {
    static const FrameBoxes empty;
    return k < frames.size() ? frames[k] : empty;
}

std::vector<double> iou_matrix(std::span<const BBox> gt, std::span<const BBox> pred) {
    std::vector<double> out(gt.size() * pred.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        for (std::size_t j = 0; j < pred.size(); ++j) out[i * pred.size() + j] = iou(gt[i], pred[j]);
    }
    return out;
}

double ratio(double num, double den) { return num / std::max(1.0, den); }

// Sum that does not depend on the order terms were produced in.
double ordered_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

}  // namespace

const std::array<double, kAlphaCount>& alpha_grid() noexcept {
    static const std::array<double, kAlphaCount> grid = [] {
        std::array<double, kAlphaCount> g{};
        for (std::size_t i = 0; i < kAlphaCount; ++i) g[i] = static_cast<double>(i + 1) * 0.05;
        return g;
    }();
    return grid;
}

EvalUnit make_unit(std::string sequence_id, std::string expression_id, std::string scenario,
                   const TrackSet& gt, const TrackSet& pred, std::size_t frame_count) {
    EvalUnit u;
    u.sequence_id = std::move(sequence_id);
    u.expression_id = std::move(expression_id);
    u.scenario = std::move(scenario);
    std::size_t n = frame_count;
    for (const auto& r : gt) n = std::max(n, static_cast<std::size_t>(std::max(r.frame, 0)));
    for (const auto& r : pred) n = std::max(n, static_cast<std::size_t>(std::max(r.frame, 0)));
    u.gt.resize(n);
    u.pred.resize(n);
    for (const auto& r : gt) {
        if (r.frame < 1) throw ValidationError("ground-truth frame index must be >= 1");
        u.gt[static_cast<std::size_t>(r.frame - 1)].push_back({r.id, r.box});
    }
    for (const auto& r : pred) {
        if (r.frame < 1) throw ValidationError("prediction frame index must be >= 1");
        u.pred[static_cast<std::size_t>(r.frame - 1)].push_back({r.id, r.box});
    }
    return u;
}

void validate(const EvalUnit& unit) {
    auto check = [&](const std::vector<FrameBoxes>& frames, const char* side) {
        for (std::size_t k = 0; k < frames.size(); ++k) {
            std::set<int> seen;
            for (const LabeledBox& b : frames[k]) {
                if (!seen.insert(b.id).second) {
                    throw ValidationError(unit.sequence_id + "/" + unit.expression_id + ": " + side +
                                          " id " + std::to_string(b.id) + " repeated in frame " +
                                          std::to_string(k + 1));
                }
            }
        }
    };
    check(unit.gt, "gt");
    check(unit.pred, "pred");
}

std::vector<std::pair<std::size_t, std::size_t>> match_frame(std::span<const BBox> gt,
                                                             std::span<const BBox> pred,
                                                             double alpha,
                                                             std::span<const double> affinity) {
    if (!affinity.empty() && affinity.size() != gt.size() * pred.size()) {
        throw UsageError("match_frame: affinity size does not match gt x pred");
    }
    CostMatrix m(gt.size(), pred.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const double overlap = iou(gt[i], pred[j]);
            const double a = affinity.empty() ? 0.0 : affinity[i * pred.size() + j];
            m.at(i, j) = -(a + kAffinityTieBreak * overlap);
            if (overlap < alpha - kEps) m.set_forbidden(i, j);
        }
    }
    return solve_assignment(m).matches;
}

// ---------------------------------------------------------------------------- HOTA

HotaAccumulator HotaAccumulator::from_unit(const EvalUnit& unit) {
    validate(unit);
    const auto& alphas = alpha_grid();
    HotaAccumulator acc;
    UnitCounts uc;

    // First pass: soft co-occurrence of every (gt, pred) id pair.
    std::map<std::pair<int, int>, double> potential;
    const std::size_t frames = unit.frame_count();
    for (std::size_t k = 0; k < frames; ++k) {
        const FrameBoxes& g = frame_or_empty(unit.gt, k);
        const FrameBoxes& p = frame_or_empty(unit.pred, k);
        for (const auto& b : g) uc.gt_frames[b.id] += 1;
        for (const auto& b : p) uc.pred_frames[b.id] += 1;
        if (g.empty() || p.empty()) continue;
        const auto sim = iou_matrix(boxes_of(g), boxes_of(p));
        std::vector<double> row_sum(g.size(), 0.0), col_sum(p.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j = 0; j < p.size(); ++j) {
                row_sum[i] += sim[i * p.size() + j];
                col_sum[j] += sim[i * p.size() + j];
            }
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double s = sim[i * p.size() + j];
                const double denom = row_sum[i] + col_sum[j] - s;
                if (denom > kEps) potential[{g[i].id, p[j].id}] += s / denom;
            }
        }
    }
    auto global_affinity = [&](int gid, int pid) {
        const auto it = potential.find({gid, pid});
        if (it == potential.end()) return 0.0;
        const double gc = static_cast<double>(uc.gt_frames.at(gid));
        const double pc = static_cast<double>(uc.pred_frames.at(pid));
        return it->second / (gc + pc - it->second);
    };

    // Second pass: per-frame, per-alpha optimal matching.
    for (std::size_t k = 0; k < frames; ++k) {
        const FrameBoxes& g = frame_or_empty(unit.gt, k);
        const FrameBoxes& p = frame_or_empty(unit.pred, k);
        if (g.empty() || p.empty()) {
            for (std::size_t a = 0; a < kAlphaCount; ++a) {
                acc.fn_[a] += static_cast<long long>(g.size());
                acc.fp_[a] += static_cast<long long>(p.size());
            }
            continue;
        }
        const auto gb = boxes_of(g);
        const auto pb = boxes_of(p);
        const auto sim = iou_matrix(gb, pb);
        std::vector<double> affinity(g.size() * p.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j = 0; j < p.size(); ++j) {
                affinity[i * p.size() + j] = global_affinity(g[i].id, p[j].id);
            }
        }
        for (std::size_t a = 0; a < kAlphaCount; ++a) {
            const auto matches = match_frame(gb, pb, alphas[a], affinity);
            const auto n = static_cast<long long>(matches.size());
            acc.tp_[a] += n;
            acc.fn_[a] += static_cast<long long>(g.size()) - n;
            acc.fp_[a] += static_cast<long long>(p.size()) - n;
            for (const auto& [i, j] : matches) {
                uc.iou_sum[a] += sim[i * p.size() + j];
                uc.pair_tp[{g[i].id, p[j].id}][a] += 1;
            }
        }
    }
    acc.units_.emplace(UnitKey{unit.sequence_id, unit.expression_id}, std::move(uc));
    return acc;
}

HotaAccumulator& HotaAccumulator::merge(const HotaAccumulator& other) {
    for (std::size_t a = 0; a < kAlphaCount; ++a) {
        tp_[a] += other.tp_[a];
        fn_[a] += other.fn_[a];
        fp_[a] += other.fp_[a];
    }
    for (const auto& [key, src] : other.units_) {
        auto [it, inserted] = units_.try_emplace(key, src);
        if (inserted) continue;
        UnitCounts& dst = it->second;
        for (const auto& [pair, counts] : src.pair_tp) {
            auto& d = dst.pair_tp[pair];
            for (std::size_t a = 0; a < kAlphaCount; ++a) d[a] += counts[a];
        }
        for (const auto& [id, n] : src.gt_frames) dst.gt_frames[id] += n;
        for (const auto& [id, n] : src.pred_frames) dst.pred_frames[id] += n;
        for (std::size_t a = 0; a < kAlphaCount; ++a) dst.iou_sum[a] += src.iou_sum[a];
    }
    return *this;
}

HotaScores compute_hota(const HotaAccumulator& acc) {
    HotaScores out;
    long long any = 0;
    for (std::size_t a = 0; a < kAlphaCount; ++a) any += acc.tp()[a] + acc.fn()[a] + acc.fp()[a];
    if (any == 0) return out;

    for (std::size_t a = 0; a < kAlphaCount; ++a) {
        std::vector<double> assoc_terms;
        double iou_total = 0.0;
        for (const auto& [key, uc] : acc.units()) {
            iou_total += uc.iou_sum[a];
            for (const auto& [pair, counts] : uc.pair_tp) {
                const double c = static_cast<double>(counts[a]);
                if (c == 0.0) continue;
                const double gc = static_cast<double>(uc.gt_frames.at(pair.first));
                const double pc = static_cast<double>(uc.pred_frames.at(pair.second));
                assoc_terms.push_back(c * ratio(c, gc + pc - c));
            }
        }
        const double tp = static_cast<double>(acc.tp()[a]);
        const double fn = static_cast<double>(acc.fn()[a]);
        const double fp = static_cast<double>(acc.fp()[a]);
        out.deta_alpha[a] = ratio(tp, tp + fn + fp);
        out.assa_alpha[a] = ratio(ordered_sum(assoc_terms), tp);
        out.hota_alpha[a] = std::sqrt(out.deta_alpha[a] * out.assa_alpha[a]);
        // A level without true positives counts as perfectly localised, as in the
        // reference evaluator.
        out.loca_alpha[a] = std::max(1e-10, iou_total) / std::max(1e-10, tp);
    }
    auto mean = [](const std::array<double, kAlphaCount>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(kAlphaCount);
    };
    out.hota = mean(out.hota_alpha);
    out.deta = mean(out.deta_alpha);
    out.assa = mean(out.assa_alpha);
    out.loca = mean(out.loca_alpha);
    return out;
}

// ---------------------------------------------------------------------------- CLEAR

ClearCounts& ClearCounts::operator+=(const ClearCounts& o) {
    tp += o.tp;
    fn += o.fn;
    fp += o.fp;
    id_switches += o.id_switches;
    gt_boxes += o.gt_boxes;
    return *this;
}

ClearCounts clear_counts(const EvalUnit& unit) {
    validate(unit);
    ClearCounts c;
    std::map<int, int> last_match;      // gt id -> pred id it was last matched to
    std::map<int, int> previous_frame;  // gt id -> pred id matched in the previous frame

    for (std::size_t k = 0; k < unit.frame_count(); ++k) {
        const FrameBoxes& g = frame_or_empty(unit.gt, k);
        const FrameBoxes& p = frame_or_empty(unit.pred, k);
        c.gt_boxes += static_cast<long long>(g.size());
        std::map<int, int> current;
        if (g.empty() || p.empty()) {
            c.fn += static_cast<long long>(g.size());
            c.fp += static_cast<long long>(p.size());
            previous_frame.clear();
            continue;
        }
        const auto sim = iou_matrix(boxes_of(g), boxes_of(p));
        std::vector<char> g_used(g.size(), 0), p_used(p.size(), 0);
        std::vector<std::pair<std::size_t, std::size_t>> matched;

        // Continuity: keep last frame's pairs that still overlap enough.
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto prev = previous_frame.find(g[i].id);
            if (prev == previous_frame.end()) continue;
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (p_used[j] || p[j].id != prev->second) continue;
                if (sim[i * p.size() + j] >= kClearThreshold - kEps) {
                    g_used[i] = p_used[j] = 1;
                    matched.emplace_back(i, j);
                }
                break;
            }
        }
        std::vector<std::size_t> rows, cols;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g_used[i]) rows.push_back(i);
        }
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (!p_used[j]) cols.push_back(j);
        }
        CostMatrix m(rows.size(), cols.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t q = 0; q < cols.size(); ++q) {
                const double s = sim[rows[r] * p.size() + cols[q]];
                m.at(r, q) = -s;
                if (s < kClearThreshold - kEps) m.set_forbidden(r, q);
            }
        }
        for (const auto& [r, q] : solve_assignment(m).matches) matched.emplace_back(rows[r], cols[q]);

        for (const auto& [i, j] : matched) {
            const int gid = g[i].id;
            const int pid = p[j].id;
            const auto last = last_match.find(gid);
            if (last != last_match.end() && last->second != pid) c.id_switches += 1;
            last_match[gid] = pid;
            current[gid] = pid;
        }
        const auto n = static_cast<long long>(matched.size());
        c.tp += n;
        c.fn += static_cast<long long>(g.size()) - n;
        c.fp += static_cast<long long>(p.size()) - n;
        previous_frame = std::move(current);
    }
    return c;
}

ClearScores compute_clear(const ClearCounts& c) {
    ClearScores s;
    s.fn = c.fn;
    s.fp = c.fp;
    s.id_switches = c.id_switches;
    s.mota = c.gt_boxes == 0
                 ? std::numeric_limits<double>::quiet_NaN()
                 : 1.0 - static_cast<double>(c.fn + c.fp + c.id_switches) /
                             static_cast<double>(c.gt_boxes);
    return s;
}

// ---------------------------------------------------------------------------- Identity

IdentityCounts& IdentityCounts::operator+=(const IdentityCounts& o) {
    idtp += o.idtp;
    idfp += o.idfp;
    idfn += o.idfn;
    return *this;
}

IdentityCounts identity_counts(const EvalUnit& unit) {
    validate(unit);
    std::map<int, long long> gt_count, pred_count;
    std::map<std::pair<int, int>, long long> overlap;
    long long gt_total = 0, pred_total = 0;
    for (std::size_t k = 0; k < unit.frame_count(); ++k) {
        const FrameBoxes& g = frame_or_empty(unit.gt, k);
        const FrameBoxes& p = frame_or_empty(unit.pred, k);
        for (const auto& b : g) gt_count[b.id] += 1;
        for (const auto& b : p) pred_count[b.id] += 1;
        gt_total += static_cast<long long>(g.size());
        pred_total += static_cast<long long>(p.size());
        for (const auto& gb : g) {
            for (const auto& pb : p) {
                if (iou(gb.box, pb.box) >= kClearThreshold - kEps) overlap[{gb.id, pb.id}] += 1;
            }
        }
    }
    // Global trajectory matching maximising co-occurring frames. All pairs are permitted at
    // cost -overlap, so a full assignment is a maximum-weight matching.
    std::vector<int> gids, pids;
    for (const auto& [id, n] : gt_count) gids.push_back(id);
    for (const auto& [id, n] : pred_count) pids.push_back(id);
    CostMatrix m(gids.size(), pids.size());
    for (std::size_t i = 0; i < gids.size(); ++i) {
        for (std::size_t j = 0; j < pids.size(); ++j) {
            const auto it = overlap.find({gids[i], pids[j]});
            m.at(i, j) = it == overlap.end() ? 0.0 : -static_cast<double>(it->second);
        }
    }
    long long idtp = 0;
    for (const auto& [i, j] : solve_assignment(m).matches) {
        const auto it = overlap.find({gids[i], pids[j]});
        if (it != overlap.end()) idtp += it->second;
    }
    return IdentityCounts{idtp, pred_total - idtp, gt_total - idtp};
}

IdentityScores compute_identity(const IdentityCounts& c) {
    IdentityScores s;
    const auto tp = static_cast<double>(c.idtp);
    const auto fp = static_cast<double>(c.idfp);
    const auto fn = static_cast<double>(c.idfn);
    s.idp = ratio(tp, tp + fp);
    s.idr = (c.idtp + c.idfn) == 0 ? std::numeric_limits<double>::quiet_NaN() : tp / (tp + fn);
    s.idf1 = ratio(2.0 * tp, 2.0 * tp + fp + fn);
    return s;
}

// ---------------------------------------------------------------------------- pooling

UnitAccumulator UnitAccumulator::from_unit(const EvalUnit& unit) {
    UnitAccumulator acc;
    acc.hota = HotaAccumulator::from_unit(unit);
    acc.clear = clear_counts(unit);
    acc.identity = identity_counts(unit);
    return acc;
}

UnitAccumulator& UnitAccumulator::merge(const UnitAccumulator& other) {
    hota.merge(other.hota);
    clear += other.clear;
    identity += other.identity;
    return *this;
}

MetricReport UnitAccumulator::report() const {
    const HotaScores h = compute_hota(hota);
    const ClearScores c = compute_clear(clear);
    const IdentityScores id = compute_identity(identity);
    MetricReport r;
    r.hota = h.hota;
    r.assa = h.assa;
    r.deta = h.deta;
    r.loca = h.loca;
    r.mota = c.mota;
    r.fn = c.fn;
    r.fp = c.fp;
    r.ids = c.id_switches;
    r.idr = id.idr;
    r.idp = id.idp;
    r.idf1 = id.idf1;
    return r;
}

std::vector<ReportRow> aggregate(std::span<const EvalUnit> units, Grouping grouping, unsigned jobs) {
    if (units.empty()) throw UsageError("aggregate: no evaluation units");

    std::vector<std::size_t> order(units.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return UnitKey{units[a].sequence_id, units[a].expression_id} <
               UnitKey{units[b].sequence_id, units[b].expression_id};
    });

    std::vector<UnitAccumulator> per_unit(units.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(units.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < units.size(); ++i) per_unit[i] = UnitAccumulator::from_unit(units[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t i = next++; i < units.size(); i = next++) {
                            per_unit[i] = UnitAccumulator::from_unit(units[i]);
                        }
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
        }
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    std::vector<ReportRow> rows;
    ReportRow overall{"overall", 0, {}, {}};
    std::map<std::string, ReportRow> scenarios;
    for (std::size_t i : order) {
        overall.counts.merge(per_unit[i]);
        overall.units += 1;
        if (grouping == Grouping::per_scenario) {
            auto& row = scenarios.try_emplace(units[i].scenario, ReportRow{units[i].scenario, 0, {}, {}})
                            .first->second;
            row.counts.merge(per_unit[i]);
            row.units += 1;
        }
    }
    overall.metrics = overall.counts.report();
    rows.push_back(std::move(overall));
    for (auto& [tag, row] : scenarios) {
        row.metrics = row.counts.report();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace langtrack
