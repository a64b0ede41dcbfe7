#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "langtrack/dataio.hpp"
#include "langtrack/error.hpp"
#include "langtrack/metrics.hpp"
#include "langtrack/report.hpp"
#include "langtrack/simulate.hpp"
#include "langtrack/tracker.hpp"

namespace langtrack::cli {

using nlohmann::ordered_json;

namespace {

unsigned resolve_jobs(unsigned jobs) {
    if (jobs > 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < n; i = next++) fn(i);
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

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
}

std::pair<std::string, std::string> split_pair(const std::string& s, char sep, const char* what) {
    const auto pos = s.find(sep);
    if (pos == std::string::npos || pos == 0 || pos + 1 == s.size()) {
        throw UsageError(std::string("malformed ") + what + " '" + s + "'");
    }
    return {s.substr(0, pos), s.substr(pos + 1)};
}

std::vector<double> split_numbers(const std::string& s, std::size_t count, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw UsageError(std::string("malformed ") + what + " '" + s + "'");
        }
    }
    if (out.size() != count) throw UsageError(std::string("malformed ") + what + " '" + s + "'");
    return out;
}

// ---------------------------------------------------------------------------- track

struct TrackUnit {
    std::string sequence;
    std::string expression;
    fs::path detections;
    int frame_count = 0;
};

std::vector<fs::path> expression_files(const fs::path& p) {
    if (fs::is_regular_file(p)) return {p};
    if (fs::is_directory(p / "sequences")) {
        std::vector<fs::path> out;
        const DatasetLayout layout{p};
        for (const auto& seq : layout.sequences()) {
            if (fs::exists(layout.expressions_path(seq))) out.push_back(layout.expressions_path(seq));
        }
        return out;
    }
    if (fs::exists(p / "expressions.json")) return {p / "expressions.json"};
    throw Error("no expression annotations at " + p.string());
}

TrackerConfig tracker_config(const TrackOptions& o) {
    TrackerConfig c;
    c.strategy = parse_strategy(o.strategy);
    c.tau = o.tau;
    c.tau_low = o.tau_low;
    c.max_age = o.max_age;
    c.min_hits = o.min_hits;
    c.iou_gate = o.iou_gate;
    c.ocm_weight = o.ocm_weight;
    c.delta_t = o.delta_t;
    if (o.oru == "on") c.oru_enabled = true;
    else if (o.oru == "off") c.oru_enabled = false;
    else if (o.oru != "auto") throw UsageError("--oru must be auto, on or off");
    c.ocr_enabled = o.ocr;
    c.ocm_all_stages = o.ocm_all_stages;
    c.fusion = parse_fusion(o.fusion);
    c.validate();
    return c;
}

}  // namespace

void add_track(CLI::App& app, TrackOptions& o) {
    app.add_option("--detections", o.detections, "Directory of <sequence>/<expression>.txt detection files")
        ->required();
    app.add_option("--expressions", o.expressions, "Expressions file, sequence directory or dataset root")
        ->required();
    app.add_option("--out", o.out, "Results directory")->required();
    app.add_option("--strategy", o.strategy, "Association strategy")
        ->check(CLI::IsMember({"sort", "byte", "ocsort"}))
        ->capture_default_str();
    app.add_option("--tau", o.tau, "Score threshold")->capture_default_str();
    app.add_option("--tau-low", o.tau_low, "Low threshold of the byte strategy")->capture_default_str();
    app.add_option("--max-age", o.max_age, "Frames a lost track is kept")->capture_default_str();
    app.add_option("--min-hits", o.min_hits, "Hits needed to confirm a track")->capture_default_str();
    app.add_option("--iou-gate", o.iou_gate, "Minimum IoU for association")->capture_default_str();
    app.add_option("--ocm-weight", o.ocm_weight, "Momentum cost weight")->capture_default_str();
    app.add_option("--delta-t", o.delta_t, "Observation spacing of the momentum term")->capture_default_str();
    app.add_option("--oru", o.oru, "Re-update after gaps: auto, on, off")
        ->check(CLI::IsMember({"auto", "on", "off"}))
        ->capture_default_str();
    app.add_flag("--ocr", o.ocr, "Extra pass against last observations (ocsort)");
    app.add_flag("--ocm-all-stages", o.ocm_all_stages, "Momentum term in every ocsort stage");
    app.add_option("--fusion", o.fusion, "Score fusion: min, product, text")
        ->check(CLI::IsMember({"min", "product", "text"}))
        ->capture_default_str();
    app.add_option("--jobs", o.jobs, "Parallel units (0 = all processors)")->capture_default_str();
}

int cmd_track(const TrackOptions& o, std::ostream& out, std::ostream& err) {
    const TrackerConfig config = tracker_config(o);
    const unsigned jobs = resolve_jobs(o.jobs);
    {
        ordered_json j{{"detections", o.detections}, {"expressions", o.expressions}, {"out", o.out},
                       {"strategy", o.strategy},     {"tau", o.tau},                 {"tau_low", o.tau_low},
                       {"max_age", o.max_age},       {"min_hits", o.min_hits},       {"iou_gate", o.iou_gate},
                       {"ocm_weight", o.ocm_weight}, {"delta_t", o.delta_t},         {"oru", config.oru()},
                       {"ocr", o.ocr},               {"ocm_all_stages", o.ocm_all_stages},
                       {"fusion", o.fusion},         {"jobs", jobs}};
        log_config(err, "track", j.dump());
    }

    std::vector<TrackUnit> units;
    std::vector<std::string> missing;
    for (const fs::path& file : expression_files(o.expressions)) {
        const fs::path dir = file.parent_path();
        std::set<int> gt_ids;
        const bool have_gt = fs::exists(dir / "gt.txt");
        if (have_gt) {
            for (const auto& r : to_track_set(load_mot(dir / "gt.txt"))) gt_ids.insert(r.id);
        }
        const ExpressionFile ex = load_expressions(file, have_gt ? &gt_ids : nullptr);
        const int frames = fs::exists(dir / "manifest.json") ? load_manifest(dir / "manifest.json").frame_count : 0;
        for (const auto& e : ex.expressions) {
            TrackUnit u{ex.sequence, e.id, unit_path(o.detections, ex.sequence, e.id), frames};
            if (!fs::exists(u.detections)) {
                missing.push_back(u.detections.string());
                continue;
            }
            units.push_back(std::move(u));
        }
    }
    if (!missing.empty()) {
        err << "error: missing detection files:\n";
        for (const auto& m : missing) err << "  " << m << '\n';
        return kUsageError;
    }
    if (units.empty()) {
        err << "error: no (sequence, expression) units to track\n";
        return kUsageError;
    }

    std::vector<std::size_t> boxes(units.size(), 0);
    parallel_for(units.size(), jobs, [&](std::size_t i) {
        const TrackUnit& u = units[i];
        const auto frames = to_detections(load_mot(u.detections), u.frame_count);
        const TrackSet result = run(frames, config);
        save_mot(unit_path(o.out, u.sequence, u.expression), result);
        boxes[i] = result.size();
    });
    std::size_t total = 0;
    for (auto b : boxes) total += b;
    out << "tracked " << units.size() << " units, " << total << " boxes -> " << o.out << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------- eval

void add_eval(CLI::App& app, EvalOptions& o) {
    app.add_option("--gt", o.gt, "Dataset root with sequences/<seq>/{manifest.json,gt.txt,expressions.json}")
        ->required();
    app.add_option("--results", o.results, "Results directory <seq>/<expr>.txt")->required();
    app.add_option("--metrics", o.metrics, "Metric families: hota, clear, identity")
        ->delimiter(',')
        ->check(CLI::IsMember({"hota", "clear", "identity"}))
        ->capture_default_str();
    app.add_flag("--per-scenario", o.per_scenario, "Add one row per scenario tag");
    app.add_option("--json", o.json, "Also write the report as JSON to this file");
    app.add_option("--jobs", o.jobs, "Parallel units (0 = all processors)")->capture_default_str();
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
    const unsigned jobs = resolve_jobs(o.jobs);
    std::vector<std::string_view> columns;
    for (std::string_view col : kReportColumns) {
        for (const auto& fam : o.metrics) {
            const auto fc = family_columns(fam);
            if (std::find(fc.begin(), fc.end(), col) != fc.end()) {
                columns.push_back(col);
                break;
            }
        }
    }
    {
        ordered_json j{{"gt", o.gt},       {"results", o.results}, {"metrics", o.metrics},
                       {"per_scenario", o.per_scenario}, {"json", o.json}, {"jobs", jobs}};
        log_config(err, "eval", j.dump());
    }

    const DatasetLayout layout{o.gt};
    std::vector<EvalUnit> units;
    for (const auto& seq : layout.sequences()) {
        const SequenceData data = load_sequence(layout, seq);
        for (const auto& e : data.expressions.expressions) {
            const fs::path pred_path = unit_path(o.results, seq, e.id);
            TrackSet pred;
            if (fs::exists(pred_path)) {
                pred = to_track_set(load_mot(pred_path));
            } else {
                err << "warning: no results for " << seq << "/" << e.id << ", scoring as empty\n";
            }
            units.push_back(make_unit(seq, e.id, data.manifest.scenario, select_tracks(data.gt, e.track_ids),
                                      pred, static_cast<std::size_t>(data.manifest.frame_count)));
        }
    }
    if (units.empty()) {
        err << "error: no evaluation units under " << o.gt << '\n';
        return kUsageError;
    }
    const auto rows = aggregate(units, o.per_scenario ? Grouping::per_scenario : Grouping::overall, jobs);
    out << render_table(rows, columns);
    if (!o.json.empty()) write_text(o.json, report_json(rows, columns));
    return kOk;
}

// ---------------------------------------------------------------------------- stats

void add_stats(CLI::App& app, StatsOptions& o) {
    app.add_option("--root", o.root, "Dataset root")->required();
    app.add_option("--reference", o.reference, "Reference split for novel-vocabulary counts");
    app.add_option("--json", o.json, "Also write the statistics as JSON to this file");
}

int cmd_stats(const StatsOptions& o, std::ostream& out, std::ostream& err) {
    log_config(err, "stats", ordered_json{{"root", o.root}, {"reference", o.reference}, {"json", o.json}}.dump());
    if (!fs::is_directory(o.root)) throw Error("no dataset at " + o.root);
    std::optional<DatasetLayout> reference;
    if (!o.reference.empty()) reference = DatasetLayout{o.reference};
    const DatasetStats s = compute_stats(DatasetLayout{o.root}, reference);
    out << render_stats(s, fs::path(o.root).filename().string());
    if (!o.json.empty()) write_text(o.json, stats_json(s));
    return kOk;
}

// ---------------------------------------------------------------------------- merge

void add_merge(CLI::App& app, MergeOptions& o) {
    app.add_option("--source", o.sources, "Source dataset as NAME=PATH (repeatable)")->required();
    app.add_option("--scenario", o.scenarios, "Scenario tag for a source as NAME=TAG (repeatable)");
    app.add_option("--out", o.out, "Merged dataset root")->required();
}

int cmd_merge(const MergeOptions& o, std::ostream& out, std::ostream& err) {
    log_config(err, "merge", ordered_json{{"sources", o.sources}, {"scenarios", o.scenarios}, {"out", o.out}}.dump());
    std::map<std::string, std::string> tags;
    for (const auto& s : o.scenarios) {
        auto [name, tag] = split_pair(s, '=', "--scenario");
        tags[name] = tag;
    }
    std::vector<MergeSource> sources;
    for (const auto& s : o.sources) {
        auto [name, path] = split_pair(s, '=', "--source");
        const auto it = tags.find(name);
        sources.push_back({name, path, it == tags.end() ? std::string{} : it->second});
    }
    for (const auto& [name, tag] : tags) {
        if (std::none_of(sources.begin(), sources.end(), [&](const MergeSource& m) { return m.name == name; })) {
            throw UsageError("--scenario names unknown source '" + name + "'");
        }
    }
    const DatasetStats s = merge_datasets(sources, o.out);
    out << render_stats(s, "merged");
    return kOk;
}

// ---------------------------------------------------------------------------- simulate

void add_simulate(CLI::App& app, SimulateOptions& o) {
    app.add_option("--seed", o.seed, "Base random seed; sequence k uses seed + k")->capture_default_str();
    app.add_option("--sequences", o.sequences, "Number of sequences")->capture_default_str();
    app.add_option("--targets", o.targets, "Targets per sequence")->capture_default_str();
    app.add_option("--frames", o.frames, "Frames per sequence")->capture_default_str();
    app.add_option("--width", o.width, "Image width")->capture_default_str();
    app.add_option("--height", o.height, "Image height")->capture_default_str();
    app.add_option("--speed-min", o.speed_min, "Minimum speed, pixels/frame")->capture_default_str();
    app.add_option("--speed-max", o.speed_max, "Maximum speed, pixels/frame")->capture_default_str();
    app.add_option("--noise", o.noise, "Detection jitter std, pixels")->capture_default_str();
    app.add_option("--dropout", o.dropout, "Probability a detection is missed")->capture_default_str();
    app.add_option("--fp-rate", o.fp_rate, "Expected false positives per frame")->capture_default_str();
    app.add_option("--confidence", o.confidence, "Detector confidence of true detections")->capture_default_str();
    app.add_option("--occlusion", o.occlusions, "TARGET:START:LENGTH (repeatable)");
    app.add_option("--dip", o.dips, "TARGET:START:LENGTH:LOW confidence dip (repeatable)");
    app.add_flag("--curved", o.curved, "Sinusoidally varying headings");
    app.add_option("--scenario", o.scenario, "Scenario tag, or 'mixed' to cycle the standard five")
        ->capture_default_str();
    app.add_option("--out", o.out, "Dataset root to write")->required();
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
    {
        ordered_json j{{"seed", o.seed},         {"sequences", o.sequences}, {"targets", o.targets},
                       {"frames", o.frames},     {"width", o.width},         {"height", o.height},
                       {"speed_min", o.speed_min}, {"speed_max", o.speed_max}, {"noise", o.noise},
                       {"dropout", o.dropout},   {"fp_rate", o.fp_rate},     {"confidence", o.confidence},
                       {"occlusions", o.occlusions}, {"dips", o.dips},       {"curved", o.curved},
                       {"scenario", o.scenario}, {"out", o.out}};
        log_config(err, "simulate", j.dump());
    }
    if (o.sequences < 1) throw UsageError("--sequences must be >= 1");
    SimConfig base;
    base.num_targets = o.targets;
    base.num_frames = o.frames;
    base.image_width = o.width;
    base.image_height = o.height;
    base.speed_min = o.speed_min;
    base.speed_max = o.speed_max;
    base.det_noise_std = o.noise;
    base.dropout_prob = o.dropout;
    base.false_pos_rate = o.fp_rate;
    base.confidence = o.confidence;
    base.curved = o.curved;
    for (const auto& s : o.occlusions) {
        const auto v = split_numbers(s, 3, "--occlusion");
        base.occlusions.push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])});
    }
    for (const auto& s : o.dips) {
        const auto v = split_numbers(s, 4, "--dip");
        base.dips.push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), v[3]});
    }

    const DatasetLayout layout{o.out};
    long long boxes = 0;
    for (int k = 0; k < o.sequences; ++k) {
        SimConfig cfg = base;
        cfg.seed = o.seed + static_cast<std::uint64_t>(k);
        cfg.sequence_id = "sim" + std::to_string(o.seed) + "-" + expression_id(k + 1);
        const auto& tags = standard_scenarios();
        cfg.scenario = o.scenario == "mixed" ? tags[static_cast<std::size_t>(k) % tags.size()] : o.scenario;
        const SimResult sim = generate(cfg);
        write_dataset(sim, layout);
        boxes += static_cast<long long>(sim.gt.size());
    }
    out << "simulated " << o.sequences << " sequences, " << boxes << " gt boxes -> " << o.out << '\n';
    return kOk;
}

}  // namespace langtrack::cli
