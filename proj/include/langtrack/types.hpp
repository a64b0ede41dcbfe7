#pragma once

#include <optional>
#include <vector>

#include "langtrack/geometry.hpp"

namespace langtrack {

/// One detector output. text_score is the language-grounding score when the detector
/// provides one separately from its box confidence.
struct Detection {
    int frame = 1;
    BBox box;
    double conf = 1.0;
    std::optional<double> text_score;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// One box of one identity in one frame.
struct TrackRecord {
    int frame = 1;
    int id = 1;
    BBox box;

    friend bool operator==(const TrackRecord&, const TrackRecord&) = default;
    friend auto operator<=>(const TrackRecord& a, const TrackRecord& b) {
        if (a.frame != b.frame) return a.frame <=> b.frame;
        return a.id <=> b.id;
    }
};

/// Tracker output or ground truth, ordered by (frame, id).
using TrackSet = std::vector<TrackRecord>;

}  // namespace langtrack
