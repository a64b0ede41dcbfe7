#include "langtrack/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "langtrack/error.hpp"

namespace langtrack {

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::sort: return "sort";
        case Strategy::byte: return "byte";
        case Strategy::ocsort: return "ocsort";
    }
    return "?";
}

std::string_view to_string(ScoreFusion f) noexcept {
    switch (f) {
        case ScoreFusion::min: return "min";
        case ScoreFusion::product: return "product";
        case ScoreFusion::text_only: return "text";
    }
    return "?";
}

std::string_view to_string(TrackStatus s) noexcept {
    switch (s) {
        case TrackStatus::tentative: return "tentative";
        case TrackStatus::confirmed: return "confirmed";
        case TrackStatus::lost: return "lost";
        case TrackStatus::removed: return "removed";
    }
    return "?";
}

Strategy parse_strategy(std::string_view name) {
    if (name == "sort") return Strategy::sort;
    if (name == "byte") return Strategy::byte;
    if (name == "ocsort") return Strategy::ocsort;
    throw UsageError("unknown strategy '" + std::string(name) + "' (expected sort, byte or ocsort)");
}

ScoreFusion parse_fusion(std::string_view name) {
    if (name == "min") return ScoreFusion::min;
    if (name == "product") return ScoreFusion::product;
    if (name == "text") return ScoreFusion::text_only;
    throw UsageError("unknown score fusion '" + std::string(name) + "' (expected min, product or text)");
}

void TrackerConfig::validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(tau) || !unit(tau_low)) throw UsageError("tau and tau_low must lie in [0,1]");
    if (tau_low > tau) throw UsageError("tau_low must not exceed tau");
    if (max_age < 1) throw UsageError("max_age must be >= 1");
    if (min_hits < 1) throw UsageError("min_hits must be >= 1");
    if (!unit(iou_gate)) throw UsageError("iou_gate must lie in [0,1]");
    if (!(ocm_weight >= 0.0) || !std::isfinite(ocm_weight)) {
        throw UsageError("ocm_weight must be a non-negative number");
    }
    if (delta_t < 1) throw UsageError("delta_t must be >= 1");
}

double effective_score(const Detection& d, ScoreFusion fusion) noexcept {
    if (!d.text_score) return d.conf;
    switch (fusion) {
        case ScoreFusion::min: return std::min(d.conf, *d.text_score);
        case ScoreFusion::product: return d.conf * *d.text_score;
        case ScoreFusion::text_only: return *d.text_score;
    }
    return d.conf;
}

Tracker::Tracker(TrackerConfig config) : config_(std::move(config)), model_(config_.noise) {
    config_.validate();
}

std::vector<TrackSnapshot> Tracker::step(int frame, std::span<const Detection> dets) {
    if (frame <= last_frame_) {
        throw UsageError("frame " + std::to_string(frame) + " does not follow frame " +
                         std::to_string(last_frame_));
    }
    while (last_frame_ + 1 < frame) tick(last_frame_ + 1, {});
    return tick(frame, dets);
}

std::optional<ObservedMotion> Tracker::observed_motion(const Track& t) const {
    const int oldest = t.last_obs_frame - config_.delta_t;
    for (const auto& [f, obs] : t.obs_history) {
        if (f >= oldest && f < t.last_obs_frame) return ObservedMotion{obs, t.last_obs};
    }
    return std::nullopt;
}

// IoU cost against the predicted boxes. A track that missed the previous frame is also
// scored against its last observed box and keeps whichever anchor overlaps better.
CostMatrix Tracker::anchored_iou_cost(std::span<const std::size_t> track_idx,
                                      std::span<const BBox> dets) const {
    std::vector<BBox> predicted;
    predicted.reserve(track_idx.size());
    for (std::size_t i : track_idx) predicted.push_back(state_to_bbox(tracks_[i].kstate));
    CostMatrix m = iou_cost(predicted, dets, config_.iou_gate);
    if (config_.strategy != Strategy::ocsort) return m;

    for (std::size_t r = 0; r < track_idx.size(); ++r) {
        const Track& t = tracks_[track_idx[r]];
        if (t.time_since_update <= 1) continue;
        const BBox anchor = from_state(t.last_obs);
        for (std::size_t c = 0; c < dets.size(); ++c) {
            const double overlap = iou(anchor, dets[c]);
            if (1.0 - overlap < m.at(r, c)) {
                m.at(r, c) = 1.0 - overlap;
                m.set_forbidden(r, c, overlap < config_.iou_gate);
            }
        }
    }
    return m;
}

void Tracker::apply_update(Track& t, int frame, const BBox& box) {
    const StateBox obs = to_state(box);
    const int gap = frame - t.last_obs_frame;
    if (config_.oru() && gap > 1) {
        t.kstate = model_.reupdate(t.state_at_last_obs, t.last_obs, obs, gap);
    } else {
        t.kstate = model_.update(t.kstate, obs);
    }
    t.state_at_last_obs = t.kstate;
    t.last_obs = obs;
    t.last_obs_frame = frame;
    t.obs_history.emplace_back(frame, obs);
    const auto keep = static_cast<std::size_t>(config_.delta_t) + 1;
    if (t.obs_history.size() > keep) {
        t.obs_history.erase(t.obs_history.begin(),
                            t.obs_history.end() - static_cast<std::ptrdiff_t>(keep));
    }
    t.time_since_update = 0;
    t.hits += 1;
    t.hit_streak += 1;
    if (t.status == TrackStatus::lost) {
        t.status = TrackStatus::confirmed;
    } else if (t.status == TrackStatus::tentative &&
               (t.hit_streak >= config_.min_hits || frame <= config_.min_hits)) {
        t.status = TrackStatus::confirmed;
    }
}

void Tracker::spawn(int frame, const BBox& box) {
    Track t;
    t.id = next_id_++;
    const StateBox obs = to_state(box);
    t.kstate = model_.init(obs);
    t.state_at_last_obs = t.kstate;
    t.last_obs = obs;
    t.last_obs_frame = frame;
    t.obs_history.emplace_back(frame, obs);
    t.hits = 1;
    t.hit_streak = 1;
    if (config_.min_hits <= 1 || frame <= config_.min_hits) t.status = TrackStatus::confirmed;
    tracks_.push_back(std::move(t));
}

std::vector<TrackSnapshot> Tracker::tick(int frame, std::span<const Detection> dets) {
    last_frame_ = frame;

    // Degenerate boxes cannot seed or correct a filter, so they are dropped up front.
    std::vector<BBox> high, low;
    for (const Detection& d : dets) {
        if (!is_finite(d.box) || d.box.degenerate()) continue;
        const double score = effective_score(d, config_.fusion);
        if (score >= config_.tau) {
            high.push_back(d.box);
        } else if (config_.strategy == Strategy::byte && score >= config_.tau_low) {
            low.push_back(d.box);
        }
    }

    for (Track& t : tracks_) {
        t.kstate = model_.predict(t.kstate);
        t.time_since_update += 1;
    }

    std::vector<std::size_t> all_tracks(tracks_.size());
    for (std::size_t i = 0; i < all_tracks.size(); ++i) all_tracks[i] = i;

    std::vector<char> track_matched(tracks_.size(), 0);
    std::vector<char> high_used(high.size(), 0);

    auto commit = [&](std::span<const std::size_t> rows, std::span<const std::size_t> cols,
                      const Assignment& a, std::vector<char>& col_used,
                      const std::vector<BBox>& boxes) {
        for (const auto& [r, c] : a.matches) {
            Track& t = tracks_[rows[r]];
            apply_update(t, frame, boxes[cols[c]]);
            track_matched[rows[r]] = 1;
            col_used[cols[c]] = 1;
        }
    };
    auto remaining_tracks = [&] {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            if (!track_matched[i]) out.push_back(i);
        }
        return out;
    };
    auto remaining = [](const std::vector<char>& used) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < used.size(); ++j) {
            if (!used[j]) out.push_back(j);
        }
        return out;
    };
    auto select = [](const std::vector<BBox>& boxes, std::span<const std::size_t> idx) {
        std::vector<BBox> out;
        out.reserve(idx.size());
        for (std::size_t j : idx) out.push_back(boxes[j]);
        return out;
    };
    auto momentum = [&](std::span<const std::size_t> rows, std::span<const BBox> boxes) {
        std::vector<std::optional<ObservedMotion>> motion;
        motion.reserve(rows.size());
        for (std::size_t i : rows) motion.push_back(observed_motion(tracks_[i]));
        return ocm_cost(motion, boxes, config_.ocm_weight);
    };

    std::vector<std::size_t> high_idx(high.size());
    for (std::size_t j = 0; j < high_idx.size(); ++j) high_idx[j] = j;

    CostMatrix first = anchored_iou_cost(all_tracks, high);
    if (config_.strategy == Strategy::ocsort && config_.ocm_weight > 0.0) {
        first += momentum(all_tracks, high);
    }
    commit(all_tracks, high_idx, solve_assignment(first), high_used, high);

    if (config_.strategy == Strategy::byte && !low.empty()) {
        const auto rows = remaining_tracks();
        std::vector<std::size_t> low_idx(low.size());
        for (std::size_t j = 0; j < low_idx.size(); ++j) low_idx[j] = j;
        std::vector<BBox> predicted;
        for (std::size_t i : rows) predicted.push_back(state_to_bbox(tracks_[i].kstate));
        std::vector<char> low_used(low.size(), 0);
        commit(rows, low_idx, solve_assignment(iou_cost(predicted, low, config_.iou_gate)),
               low_used, low);
    }

    if (config_.strategy == Strategy::ocsort && config_.ocr_enabled) {
        const auto rows = remaining_tracks();
        const auto cols = remaining(high_used);
        if (!rows.empty() && !cols.empty()) {
            std::vector<BBox> anchors;
            for (std::size_t i : rows) anchors.push_back(from_state(tracks_[i].last_obs));
            const auto boxes = select(high, cols);
            CostMatrix m = iou_cost(anchors, boxes, config_.iou_gate);
            if (config_.ocm_all_stages && config_.ocm_weight > 0.0) m += momentum(rows, boxes);
            commit(rows, cols, solve_assignment(m), high_used, high);
        }
    }

    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        if (track_matched[i]) continue;
        Track& t = tracks_[i];
        t.hit_streak = 0;
        if (t.status == TrackStatus::confirmed) t.status = TrackStatus::lost;
        if (t.time_since_update > config_.max_age) t.status = TrackStatus::removed;
    }
    std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::removed; });

    for (std::size_t j = 0; j < high.size(); ++j) {
        if (!high_used[j]) spawn(frame, high[j]);
    }

    std::vector<TrackSnapshot> out;
    for (const Track& t : tracks_) {
        if (t.time_since_update == 0 && t.status == TrackStatus::confirmed) {
            out.push_back({t.id, state_to_bbox(t.kstate)});
        }
    }
    return out;
}

TrackSet run(std::span<const std::vector<Detection>> frames, const TrackerConfig& config) {
    Tracker tracker(config);
    TrackSet out;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const int frame = static_cast<int>(k) + 1;
        for (const Detection& d : frames[k]) {
            if (d.frame != frame) {
                throw UsageError("detection for frame " + std::to_string(d.frame) +
                                 " grouped under frame " + std::to_string(frame));
            }
        }
        for (const TrackSnapshot& s : tracker.step(frame, frames[k])) {
            out.push_back({frame, s.id, s.box});
        }
    }
    return out;
}

}  // namespace langtrack
