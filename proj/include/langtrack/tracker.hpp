#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "langtrack/association.hpp"
#include "langtrack/motion.hpp"
#include "langtrack/types.hpp"

namespace langtrack {

enum class Strategy { sort, byte, ocsort };

/// How detector confidence and text-match score combine into the thresholded score.
enum class ScoreFusion { min, product, text_only };

std::string_view to_string(Strategy s) noexcept;
std::string_view to_string(ScoreFusion f) noexcept;
/// Throw UsageError on unknown names.
Strategy parse_strategy(std::string_view name);
ScoreFusion parse_fusion(std::string_view name);

struct TrackerConfig {
    double tau = 0.5;      ///< detections scoring below this never spawn tracks
    double tau_low = 0.1;  ///< byte: floor of the second-pass detections
    int max_age = 30;      ///< frames a lost track is kept for re-association
    int min_hits = 3;
    double iou_gate = 0.3;
    Strategy strategy = Strategy::ocsort;
    double ocm_weight = 0.2;
    int delta_t = 3;
    /// Re-update on re-detection. Unset means "on for ocsort, off otherwise".
    std::optional<bool> oru_enabled;
    /// Apply the momentum term in every ocsort stage, not only the first.
    bool ocm_all_stages = false;
    /// ocsort: extra pass matching leftovers against the tracks' last observations.
    bool ocr_enabled = false;
    ScoreFusion fusion = ScoreFusion::min;
    NoiseConfig noise;

    bool oru() const noexcept { return oru_enabled.value_or(strategy == Strategy::ocsort); }
    /// Throws UsageError when an invariant is broken.
    void validate() const;
};

enum class TrackStatus { tentative, confirmed, lost, removed };

std::string_view to_string(TrackStatus s) noexcept;

struct Track {
    int id = 0;
    TrackStatus status = TrackStatus::tentative;
    KalmanState kstate;
    KalmanState state_at_last_obs;  ///< frozen at the last real update, re-update starts here
    StateBox last_obs;
    int last_obs_frame = 0;
    std::vector<std::pair<int, StateBox>> obs_history;  ///< recent observations, oldest first
    int time_since_update = 0;
    int hit_streak = 0;
    int hits = 0;
};

/// Box reported for a confirmed track in one frame.
struct TrackSnapshot {
    int id = 0;
    BBox box;

    friend bool operator==(const TrackSnapshot&, const TrackSnapshot&) = default;
};

/// Thresholded score of a detection under the given fusion rule.
double effective_score(const Detection& d, ScoreFusion fusion) noexcept;

/// Online tracker for one sequence. Not thread-safe; one instance per sequence.
class Tracker {
public:
    explicit Tracker(TrackerConfig config);

    /// Process one frame. Frame indices must strictly increase (UsageError otherwise);
    /// skipped frames are coasted as empty frames. Returns confirmed tracks updated in this
    /// frame, ascending id.
    std::vector<TrackSnapshot> step(int frame, std::span<const Detection> dets);

    const std::vector<Track>& tracks() const noexcept { return tracks_; }
    const TrackerConfig& config() const noexcept { return config_; }
    int last_frame() const noexcept { return last_frame_; }
    /// Number of tracks created so far.
    int spawned() const noexcept { return next_id_ - 1; }

private:
    std::vector<TrackSnapshot> tick(int frame, std::span<const Detection> dets);
    std::optional<ObservedMotion> observed_motion(const Track& t) const;
    CostMatrix anchored_iou_cost(std::span<const std::size_t> track_idx,
                                 std::span<const BBox> dets) const;
    void apply_update(Track& t, int frame, const BBox& box);
    void spawn(int frame, const BBox& box);

    TrackerConfig config_;
    MotionModel model_;
    std::vector<Track> tracks_;
    int next_id_ = 1;
    int last_frame_ = 0;
};

/// Tracks a whole sequence. frames[k] holds the detections of frame k+1; a detection whose
/// frame field disagrees with its slot is a malformed grouping (UsageError).
TrackSet run(std::span<const std::vector<Detection>> frames, const TrackerConfig& config);

}  // namespace langtrack
