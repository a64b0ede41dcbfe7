#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "langtrack/types.hpp"

namespace langtrack {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------- MOT text

/// One line of a MOT file: frame,id,x,y,w,h,conf,x3,y3,z3.
/// In detection files id is -1 and x3, when >= 0, carries the text-match score.
struct MotRecord {
    int frame = 1;
    int id = -1;
    BBox box;
    double conf = 1.0;
    double x3 = -1.0;
    double y3 = -1.0;
    double z3 = -1.0;

    friend bool operator==(const MotRecord&, const MotRecord&) = default;
};

/// Records grouped by frame; file order is kept within a frame.
struct MotFile {
    std::map<int, std::vector<MotRecord>> frames;

    std::size_t size() const noexcept;
    bool empty() const noexcept { return frames.empty(); }
    int last_frame() const noexcept { return frames.empty() ? 0 : frames.rbegin()->first; }
};

/// Parses comma-separated MOT lines. At least seven fields are required; missing trailing
/// fields default to -1. Blank lines are skipped. Throws ParseError naming the line.
MotFile parse_mot(std::istream& in, const std::string& source = "<mot>");
MotFile load_mot(const fs::path& path);

/// Writes one line per record in ascending (frame, id) order with conf = 1. Numbers use the
/// shortest text that parses back to the same double.
void emit_mot(std::ostream& out, const TrackSet& tracks);
void save_mot(const fs::path& path, const TrackSet& tracks);

/// Detection lines (id -1), in the given order.
void emit_detections(std::ostream& out, std::span<const Detection> dets);
void save_detections(const fs::path& path, std::span<const Detection> dets);

TrackSet to_track_set(const MotFile& file);

/// Detections grouped as frames 1..max(frame_count, last frame in file).
std::vector<std::vector<Detection>> to_detections(const MotFile& file, int frame_count = 0);

/// Shortest round-trip decimal text for a double.
std::string format_number(double v);

// ---------------------------------------------------------------------------- annotations

struct ExpressionAnnotation {
    std::string id;  ///< zero-padded index, e.g. "0003"
    std::string text;
    std::vector<int> track_ids;

    friend bool operator==(const ExpressionAnnotation&, const ExpressionAnnotation&) = default;
};

struct ExpressionFile {
    std::string sequence;
    std::vector<ExpressionAnnotation> expressions;

    friend bool operator==(const ExpressionFile&, const ExpressionFile&) = default;
};

/// Throws ValidationError for duplicate expression ids, empty or repeated track ids, and
/// (when gt_ids is given) ids missing from the sequence's ground truth.
void validate(const ExpressionFile& file, const std::set<int>* gt_ids = nullptr);

ExpressionFile parse_expressions(std::istream& in, const std::string& source = "<expressions>");
ExpressionFile load_expressions(const fs::path& path, const std::set<int>* gt_ids = nullptr);
void save_expressions(const fs::path& path, const ExpressionFile& file);

/// Zero-padded expression id ("0001" for 1).
std::string expression_id(int index);

inline const std::vector<std::string>& standard_scenarios() {
    static const std::vector<std::string> tags{"surveillance", "autonomous-driving",
                                               "sports-broadcasting", "drone", "daily-life"};
    return tags;
}

struct SequenceManifest {
    std::string sequence_id;
    std::string scenario;
    int frame_count = 1;
    std::optional<std::pair<int, int>> image_size;
    std::string source_dataset;

    friend bool operator==(const SequenceManifest&, const SequenceManifest&) = default;
};

void validate(const SequenceManifest& m);
SequenceManifest parse_manifest(std::istream& in, const std::string& source = "<manifest>");
SequenceManifest load_manifest(const fs::path& path);
void save_manifest(const fs::path& path, const SequenceManifest& m);

// ---------------------------------------------------------------------------- layout

/// On-disk dataset:
///   <root>/sequences/<seq>/manifest.json, gt.txt, expressions.json
///   <root>/detections/<seq>/<expr>.txt      (optional, per unit)
/// Results are <results>/<seq>/<expr>.txt.
struct DatasetLayout {
    fs::path root;

    fs::path sequence_dir(const std::string& seq) const { return root / "sequences" / seq; }
    fs::path manifest_path(const std::string& seq) const { return sequence_dir(seq) / "manifest.json"; }
    fs::path gt_path(const std::string& seq) const { return sequence_dir(seq) / "gt.txt"; }
    fs::path expressions_path(const std::string& seq) const {
        return sequence_dir(seq) / "expressions.json";
    }
    fs::path detections_dir() const { return root / "detections"; }
    fs::path detections_path(const std::string& seq, const std::string& expr) const {
        return detections_dir() / seq / (expr + ".txt");
    }

    /// Sequence ids that have a manifest, ascending.
    std::vector<std::string> sequences() const;
};

inline fs::path unit_path(const fs::path& dir, const std::string& seq, const std::string& expr) {
    return dir / seq / (expr + ".txt");
}

struct SequenceData {
    SequenceManifest manifest;
    TrackSet gt;
    ExpressionFile expressions;
};

/// Loads and cross-validates one sequence (expression ids must exist in gt).
SequenceData load_sequence(const DatasetLayout& layout, const std::string& seq);

/// Ground-truth records of the listed ids.
TrackSet select_tracks(const TrackSet& gt, std::span<const int> ids);

// ---------------------------------------------------------------------------- statistics

struct DatasetStats {
    long long videos = 0;
    long long frames = 0;
    long long boxes = 0;
    long long tracks = 0;
    double min_tracks = 0.0;
    double avg_tracks = 0.0;
    double max_tracks = 0.0;
    long long expressions = 0;
    long long vocabulary = 0;
    std::optional<long long> novel_vocabulary;  ///< set when a reference split is given

    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

/// Lowercased whitespace tokens with leading/trailing punctuation removed.
std::set<std::string> tokenize(const std::string& text);

std::set<std::string> vocabulary(const DatasetLayout& layout);

/// Statistics over every sequence. If any sequence fails to load, throws ValidationError
/// listing all of them instead of returning partial numbers.
DatasetStats compute_stats(const DatasetLayout& layout,
                           const std::optional<DatasetLayout>& reference = std::nullopt);

/// Table-style rendering (#Videos #Frames #Boxes #Tracks Min. Avg. Max. Vocab.).
std::string render_stats(const DatasetStats& s, const std::string& label);
std::string stats_json(const DatasetStats& s);

struct MergeSource {
    std::string name;      ///< prefix of the merged sequence ids
    fs::path root;
    std::string scenario;  ///< applied to every sequence of the source; empty keeps the manifest's
};

/// Copies every source sequence to <out>/sequences/<name>-<original> (detections too),
/// rewrites manifests and expression files, and writes <out>/stats.json. Re-running with the
/// same inputs reproduces the tree byte for byte. Throws ValidationError on id collisions.
DatasetStats merge_datasets(std::span<const MergeSource> sources, const fs::path& out);

}  // namespace langtrack
