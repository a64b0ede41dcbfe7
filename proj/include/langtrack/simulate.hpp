#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "langtrack/dataio.hpp"
#include "langtrack/types.hpp"

namespace langtrack {

struct Occlusion {
    int target = 1;       ///< 1-based target id
    int start_frame = 1;
    int length = 1;       ///< frames without any detection of the target
};

/// Lowers the confidence of one target's detections for a frame window.
struct ConfidenceDip {
    int target = 1;
    int start_frame = 1;
    int length = 1;
    double low = 0.3;
};

struct SimConfig {
    std::uint64_t seed = 0;
    int num_targets = 5;
    int num_frames = 100;
    int image_width = 1920;
    int image_height = 1080;
    double speed_min = 1.0;  ///< pixels per frame
    double speed_max = 4.0;
    double box_w_min = 40.0;
    double box_w_max = 90.0;
    double box_h_min = 80.0;
    double box_h_max = 180.0;
    double det_noise_std = 0.0;   ///< pixels, applied to centre and size
    double dropout_prob = 0.0;
    double false_pos_rate = 0.0;  ///< expected false positives per frame
    std::vector<Occlusion> occlusions;
    double confidence = 0.9;      ///< detector confidence outside dips
    std::vector<ConfidenceDip> dips;
    bool curved = false;          ///< heading oscillates sinusoidally
    double curve_amplitude = 0.6; ///< radians
    double curve_period = 50.0;   ///< frames
    std::string sequence_id;      ///< defaults to "sim<seed>"
    std::string scenario = "surveillance";

    /// Throws UsageError when a field is out of range.
    void validate() const;
};

/// A detection together with the target that produced it (0 for false positives).
struct SimDetection {
    Detection det;
    int target = 0;
};

struct SimResult {
    SequenceManifest manifest;
    TrackSet gt;                           ///< ids 1..num_targets, (frame, id) order
    std::vector<SimDetection> detections;  ///< frame order, targets before false positives
    ExpressionFile expressions;

    /// Detections a grounded detector would return for one expression: its targets plus the
    /// false positives, grouped as frames 1..num_frames.
    std::vector<std::vector<Detection>> frames_for(const ExpressionAnnotation& expr) const;
    /// All detections grouped by frame.
    std::vector<std::vector<Detection>> frames() const;
};

/// Deterministic in cfg (including the seed).
SimResult generate(const SimConfig& cfg);

/// Writes the sequence files and one detection file per expression under layout.
void write_dataset(const SimResult& sim, const DatasetLayout& layout);

}  // namespace langtrack
