#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "langtrack/geometry.hpp"
#include "langtrack/types.hpp"

namespace langtrack {

struct LabeledBox {
    int id = 0;
    BBox box;
};

using FrameBoxes = std::vector<LabeledBox>;

/// One (sequence, expression) pair: the ground-truth tracks named by the expression against
/// the tracker output for it. frames[k] holds frame k+1.
struct EvalUnit {
    std::string sequence_id;
    std::string expression_id;
    std::string scenario;
    std::vector<FrameBoxes> gt;
    std::vector<FrameBoxes> pred;

    std::size_t frame_count() const noexcept { return std::max(gt.size(), pred.size()); }
};

/// Builds a unit from (frame, id, box) records. Frames beyond both sets stay empty up to
/// frame_count. Record order within a frame is preserved.
EvalUnit make_unit(std::string sequence_id, std::string expression_id, std::string scenario,
                   const TrackSet& gt, const TrackSet& pred, std::size_t frame_count = 0);

/// Throws ValidationError when an id repeats within one frame of one side.
void validate(const EvalUnit& unit);

/// The 19 localisation thresholds 0.05, 0.10, ..., 0.95.
inline constexpr std::size_t kAlphaCount = 19;
const std::array<double, kAlphaCount>& alpha_grid() noexcept;

/// Weight of the IoU tie-break added to the association affinity when matching.
inline constexpr double kAffinityTieBreak = 1e-3;
inline constexpr double kClearThreshold = 0.5;

/// Optimal per-frame matching among pairs with IoU >= alpha: maximum match count first, then
/// maximum sum of affinity + kAffinityTieBreak * IoU. affinity is row-major gt x pred; empty
/// means all zeros. Returns (gt index, pred index) pairs.
std::vector<std::pair<std::size_t, std::size_t>> match_frame(std::span<const BBox> gt,
                                                             std::span<const BBox> pred,
                                                             double alpha,
                                                             std::span<const double> affinity = {});

struct UnitKey {
    std::string sequence_id;
    std::string expression_id;

    friend auto operator<=>(const UnitKey&, const UnitKey&) = default;
    friend bool operator==(const UnitKey&, const UnitKey&) = default;
};

/// Per-alpha HOTA counts. Association counts are keyed by unit so that merging accumulators
/// from disjoint units is a plain union; floating sums are kept per unit and reduced in key
/// order, which makes merge exactly associative and commutative.
class HotaAccumulator {
public:
    using Counts = std::array<long long, kAlphaCount>;
    using Sums = std::array<double, kAlphaCount>;

    struct UnitCounts {
        std::map<std::pair<int, int>, Counts> pair_tp;  ///< (gt id, pred id) -> TPs per alpha
        std::map<int, long long> gt_frames;             ///< frames each gt id appears in
        std::map<int, long long> pred_frames;
        Sums iou_sum{};                                  ///< summed TP IoU per alpha

        friend bool operator==(const UnitCounts&, const UnitCounts&) = default;
    };

    /// Accumulates one unit (two-pass scheme: global affinities, then per-frame matching).
    static HotaAccumulator from_unit(const EvalUnit& unit);

    HotaAccumulator& merge(const HotaAccumulator& other);

    const Counts& tp() const noexcept { return tp_; }
    const Counts& fn() const noexcept { return fn_; }
    const Counts& fp() const noexcept { return fp_; }
    const std::map<UnitKey, UnitCounts>& units() const noexcept { return units_; }

    friend bool operator==(const HotaAccumulator&, const HotaAccumulator&) = default;

private:
    Counts tp_{};
    Counts fn_{};
    Counts fp_{};
    std::map<UnitKey, UnitCounts> units_;
};

struct HotaScores {
    double hota = 0.0;
    double deta = 0.0;
    double assa = 0.0;
    double loca = 0.0;
    std::array<double, kAlphaCount> hota_alpha{};
    std::array<double, kAlphaCount> deta_alpha{};
    std::array<double, kAlphaCount> assa_alpha{};
    std::array<double, kAlphaCount> loca_alpha{};
};

/// Averages the per-alpha scores. No gt and no predictions at all gives zeros.
HotaScores compute_hota(const HotaAccumulator& acc);

struct ClearCounts {
    long long tp = 0;
    long long fn = 0;
    long long fp = 0;
    long long id_switches = 0;
    long long gt_boxes = 0;

    ClearCounts& operator+=(const ClearCounts& o);
    friend bool operator==(const ClearCounts&, const ClearCounts&) = default;
};

struct ClearScores {
    double mota = 0.0;  ///< NaN when there are no gt boxes
    long long fn = 0;
    long long fp = 0;
    long long id_switches = 0;
};

ClearCounts clear_counts(const EvalUnit& unit);
ClearScores compute_clear(const ClearCounts& c);
inline ClearScores compute_clear(const EvalUnit& unit) { return compute_clear(clear_counts(unit)); }

struct IdentityCounts {
    long long idtp = 0;
    long long idfp = 0;
    long long idfn = 0;

    IdentityCounts& operator+=(const IdentityCounts& o);
    friend bool operator==(const IdentityCounts&, const IdentityCounts&) = default;
};

struct IdentityScores {
    double idp = 0.0;
    double idr = 0.0;  ///< NaN when there are no gt boxes
    double idf1 = 0.0;
};

IdentityCounts identity_counts(const EvalUnit& unit);
IdentityScores compute_identity(const IdentityCounts& c);
inline IdentityScores compute_identity(const EvalUnit& unit) {
    return compute_identity(identity_counts(unit));
}

/// The eleven reported values, ratios in [0,1].
struct MetricReport {
    double hota = 0.0;
    double assa = 0.0;
    double deta = 0.0;
    double loca = 0.0;
    double mota = 0.0;
    long long fn = 0;
    long long fp = 0;
    long long ids = 0;
    double idr = 0.0;
    double idp = 0.0;
    double idf1 = 0.0;
};

/// Everything needed to score a set of units; merging pools raw counts.
struct UnitAccumulator {
    HotaAccumulator hota;
    ClearCounts clear;
    IdentityCounts identity;

    static UnitAccumulator from_unit(const EvalUnit& unit);
    UnitAccumulator& merge(const UnitAccumulator& other);
    MetricReport report() const;

    friend bool operator==(const UnitAccumulator&, const UnitAccumulator&) = default;
};

inline MetricReport evaluate(const EvalUnit& unit) { return UnitAccumulator::from_unit(unit).report(); }

enum class Grouping { overall, per_scenario };

struct ReportRow {
    std::string group;  ///< "overall" or the scenario tag
    std::size_t units = 0;
    UnitAccumulator counts;
    MetricReport metrics;
};

/// Pools counts over units (sorted by sequence, expression) and reports the overall row,
/// followed by one row per scenario (ascending tag) when grouping is per_scenario.
/// jobs > 1 scores units concurrently; the result does not depend on it.
/// Throws UsageError on an empty unit set.
std::vector<ReportRow> aggregate(std::span<const EvalUnit> units, Grouping grouping,
                                 unsigned jobs = 1);

}  // namespace langtrack
