#include "langtrack/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "langtrack/error.hpp"

namespace langtrack {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json read_json(std::istream& in, const std::string& source) {
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(source, 0, e.what());
    }
}

}  // namespace

std::string format_number(double v) {
    if (v == 0.0) return "0";  // also folds -0
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------- MOT

std::size_t MotFile::size() const noexcept {
    std::size_t n = 0;
    for (const auto& [f, recs] : frames) n += recs.size();
    return n;
}

MotFile parse_mot(std::istream& in, const std::string& source) {
    MotFile out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty()) continue;

        std::vector<double> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = body.find(',', start);
            const std::string_view tok =
                body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            const auto v = to_double(tok);
            if (!v) {
                throw ParseError(source, line_no, "field " + std::to_string(fields.size() + 1) +
                                                      " is not a number: '" + std::string(trim(tok)) + "'");
            }
            fields.push_back(*v);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() < 7) {
            throw ParseError(source, line_no,
                             "expected at least 7 fields, got " + std::to_string(fields.size()));
        }
        if (fields.size() > 10) {
            throw ParseError(source, line_no, "expected at most 10 fields, got " + std::to_string(fields.size()));
        }
        auto integral = [&](double v, const char* what) {
            if (v != std::floor(v) || std::fabs(v) > 1e9) {
                throw ParseError(source, line_no, std::string(what) + " must be an integer");
            }
            return static_cast<int>(v);
        };
        MotRecord r;
        r.frame = integral(fields[0], "frame");
        r.id = integral(fields[1], "id");
        if (r.frame < 1) throw ParseError(source, line_no, "frame must be >= 1");
        r.box = BBox{fields[2], fields[3], fields[4], fields[5]};
        if (r.box.w < 0.0 || r.box.h < 0.0) throw ParseError(source, line_no, "negative box size");
        r.conf = fields[6];
        if (fields.size() > 7) r.x3 = fields[7];
        if (fields.size() > 8) r.y3 = fields[8];
        if (fields.size() > 9) r.z3 = fields[9];
        out.frames[r.frame].push_back(r);
    }
    return out;
}

MotFile load_mot(const fs::path& path) {
    auto in = open_in(path);
    return parse_mot(in, path.string());
}

void emit_mot(std::ostream& out, const TrackSet& tracks) {
    TrackSet sorted = tracks;
    std::stable_sort(sorted.begin(), sorted.end());
    for (const TrackRecord& r : sorted) {
        if (r.id < 1) throw UsageError("emit_mot: track ids must be positive");
        out << r.frame << ',' << r.id << ',' << format_number(r.box.x) << ',' << format_number(r.box.y)
            << ',' << format_number(r.box.w) << ',' << format_number(r.box.h) << ",1,-1,-1,-1\n";
    }
}

void save_mot(const fs::path& path, const TrackSet& tracks) {
    auto out = open_out(path);
    emit_mot(out, tracks);
}

void emit_detections(std::ostream& out, std::span<const Detection> dets) {
    for (const Detection& d : dets) {
        out << d.frame << ",-1," << format_number(d.box.x) << ',' << format_number(d.box.y) << ','
            << format_number(d.box.w) << ',' << format_number(d.box.h) << ',' << format_number(d.conf)
            << ',' << (d.text_score ? format_number(*d.text_score) : std::string("-1")) << ",-1,-1\n";
    }
}

void save_detections(const fs::path& path, std::span<const Detection> dets) {
    auto out = open_out(path);
    emit_detections(out, dets);
}

TrackSet to_track_set(const MotFile& file) {
    TrackSet out;
    out.reserve(file.size());
    for (const auto& [frame, recs] : file.frames) {
        for (const MotRecord& r : recs) out.push_back({r.frame, r.id, r.box});
    }
    return out;
}

std::vector<std::vector<Detection>> to_detections(const MotFile& file, int frame_count) {
    std::vector<std::vector<Detection>> out(
        static_cast<std::size_t>(std::max(frame_count, file.last_frame())));
    for (const auto& [frame, recs] : file.frames) {
        auto& slot = out[static_cast<std::size_t>(frame - 1)];
        for (const MotRecord& r : recs) {
            Detection d;
            d.frame = r.frame;
            d.box = r.box;
            d.conf = r.conf;
            if (r.x3 >= 0.0) d.text_score = r.x3;
            slot.push_back(d);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------- expressions

std::string expression_id(int index) {
    std::ostringstream os;
    os << std::setw(4) << std::setfill('0') << index;
    return os.str();
}

void validate(const ExpressionFile& file, const std::set<int>* gt_ids) {
    std::set<std::string> seen;
    for (const auto& e : file.expressions) {
        if (e.id.empty()) throw ValidationError(file.sequence + ": expression with empty id");
        if (!seen.insert(e.id).second) {
            throw ValidationError(file.sequence + ": duplicate expression id " + e.id);
        }
        if (e.track_ids.empty()) {
            throw ValidationError(file.sequence + "/" + e.id + ": expression names no tracks");
        }
        std::set<int> ids;
        for (int id : e.track_ids) {
            if (!ids.insert(id).second) {
                throw ValidationError(file.sequence + "/" + e.id + ": track id " + std::to_string(id) +
                                      " listed twice");
            }
            if (gt_ids && !gt_ids->contains(id)) {
                throw ValidationError(file.sequence + "/" + e.id + ": unknown track id " +
                                      std::to_string(id));
            }
        }
    }
}

ExpressionFile parse_expressions(std::istream& in, const std::string& source) {
    const json j = read_json(in, source);
    ExpressionFile f;
    try {
        f.sequence = j.at("sequence").get<std::string>();
        for (const auto& e : j.at("expressions")) {
            ExpressionAnnotation a;
            a.id = e.at("id").get<std::string>();
            a.text = e.at("text").get<std::string>();
            a.track_ids = e.at("track_ids").get<std::vector<int>>();
            f.expressions.push_back(std::move(a));
        }
    } catch (const json::exception& e) {
        throw ParseError(source, 0, e.what());
    }
    return f;
}

ExpressionFile load_expressions(const fs::path& path, const std::set<int>* gt_ids) {
    auto in = open_in(path);
    ExpressionFile f = parse_expressions(in, path.string());
    validate(f, gt_ids);
    return f;
}

void save_expressions(const fs::path& path, const ExpressionFile& file) {
    json list = json::array();
    for (const auto& e : file.expressions) {
        list.push_back(json{{"id", e.id}, {"text", e.text}, {"track_ids", e.track_ids}});
    }
    write_json(path, json{{"sequence", file.sequence}, {"expressions", list}});
}

// ---------------------------------------------------------------------------- manifests

void validate(const SequenceManifest& m) {
    if (m.sequence_id.empty()) throw ValidationError("manifest: empty sequence_id");
    if (m.scenario.empty()) throw ValidationError(m.sequence_id + ": empty scenario tag");
    if (m.frame_count < 1) throw ValidationError(m.sequence_id + ": frame_count must be >= 1");
    if (m.image_size && (m.image_size->first < 1 || m.image_size->second < 1)) {
        throw ValidationError(m.sequence_id + ": image size must be positive");
    }
}

SequenceManifest parse_manifest(std::istream& in, const std::string& source) {
    const json j = read_json(in, source);
    SequenceManifest m;
    try {
        m.sequence_id = j.at("sequence_id").get<std::string>();
        m.scenario = j.at("scenario").get<std::string>();
        m.frame_count = j.at("frame_count").get<int>();
        if (j.contains("image_size") && !j.at("image_size").is_null()) {
            const auto sz = j.at("image_size").get<std::vector<int>>();
            if (sz.size() != 2) throw ParseError(source, 0, "image_size must be [width, height]");
            m.image_size = std::make_pair(sz[0], sz[1]);
        }
        m.source_dataset = j.value("source_dataset", std::string{});
    } catch (const json::exception& e) {
        throw ParseError(source, 0, e.what());
    }
    validate(m);
    return m;
}

SequenceManifest load_manifest(const fs::path& path) {
    auto in = open_in(path);
    return parse_manifest(in, path.string());
}

void save_manifest(const fs::path& path, const SequenceManifest& m) {
    json j{{"sequence_id", m.sequence_id},
           {"scenario", m.scenario},
           {"frame_count", m.frame_count},
           {"source_dataset", m.source_dataset}};
    if (m.image_size) j["image_size"] = {m.image_size->first, m.image_size->second};
    write_json(path, j);
}

// ---------------------------------------------------------------------------- layout

std::vector<std::string> DatasetLayout::sequences() const {
    std::vector<std::string> out;
    const fs::path dir = root / "sequences";
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
            out.push_back(entry.path().filename().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

SequenceData load_sequence(const DatasetLayout& layout, const std::string& seq) {
    SequenceData d;
    d.manifest = load_manifest(layout.manifest_path(seq));
    const fs::path gt = layout.gt_path(seq);
    if (fs::exists(gt)) d.gt = to_track_set(load_mot(gt));
    std::set<int> ids;
    for (const auto& r : d.gt) ids.insert(r.id);
    d.expressions = load_expressions(layout.expressions_path(seq), &ids);
    return d;
}

TrackSet select_tracks(const TrackSet& gt, std::span<const int> ids) {
    const std::set<int> wanted(ids.begin(), ids.end());
    TrackSet out;
    for (const auto& r : gt) {
        if (wanted.contains(r.id)) out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------- stats

std::set<std::string> tokenize(const std::string& text) {
    std::set<std::string> out;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
        std::size_t b = 0, e = tok.size();
        while (b < e && std::ispunct(static_cast<unsigned char>(tok[b]))) ++b;
        while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1]))) --e;
        if (b == e) continue;
        std::string word = tok.substr(b, e - b);
        std::transform(word.begin(), word.end(), word.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.insert(std::move(word));
    }
    return out;
}

namespace {

struct LoadedDataset {
    std::vector<SequenceData> sequences;
};

LoadedDataset load_all(const DatasetLayout& layout) {
    LoadedDataset out;
    std::vector<std::string> failures;
    for (const auto& seq : layout.sequences()) {
        try {
            out.sequences.push_back(load_sequence(layout, seq));
        } catch (const std::exception& e) {
            failures.push_back(seq + ": " + e.what());
        }
    }
    if (!failures.empty()) {
        std::string msg = "unreadable sequences (" + std::to_string(failures.size()) + "):";
        for (const auto& f : failures) msg += "\n  " + f;
        throw ValidationError(msg);
    }
    return out;
}

std::set<std::string> vocabulary_of(const LoadedDataset& d) {
    std::set<std::string> vocab;
    for (const auto& s : d.sequences) {
        for (const auto& e : s.expressions.expressions) vocab.merge(tokenize(e.text));
    }
    return vocab;
}

}  // namespace

std::set<std::string> vocabulary(const DatasetLayout& layout) { return vocabulary_of(load_all(layout)); }

DatasetStats compute_stats(const DatasetLayout& layout, const std::optional<DatasetLayout>& reference) {
    const LoadedDataset data = load_all(layout);
    DatasetStats s;
    std::vector<long long> per_video;
    for (const auto& seq : data.sequences) {
        s.videos += 1;
        s.frames += seq.manifest.frame_count;
        s.boxes += static_cast<long long>(seq.gt.size());
        std::set<int> ids;
        for (const auto& r : seq.gt) ids.insert(r.id);
        per_video.push_back(static_cast<long long>(ids.size()));
        s.tracks += static_cast<long long>(ids.size());
        s.expressions += static_cast<long long>(seq.expressions.expressions.size());
    }
    if (!per_video.empty()) {
        s.min_tracks = static_cast<double>(*std::min_element(per_video.begin(), per_video.end()));
        s.max_tracks = static_cast<double>(*std::max_element(per_video.begin(), per_video.end()));
        s.avg_tracks = static_cast<double>(s.tracks) / static_cast<double>(s.videos);
    }
    const auto vocab = vocabulary_of(data);
    s.vocabulary = static_cast<long long>(vocab.size());
    if (reference) {
        const auto ref = vocabulary(*reference);
        s.novel_vocabulary = static_cast<long long>(
            std::count_if(vocab.begin(), vocab.end(), [&](const std::string& w) { return !ref.contains(w); }));
    }
    return s;
}

std::string render_stats(const DatasetStats& s, const std::string& label) {
    std::ostringstream os;
    const int w = 10;
    os << std::left << std::setw(14) << "Split" << std::right << std::setw(w) << "#Videos"
       << std::setw(w) << "#Frames" << std::setw(w) << "#Boxes" << std::setw(w) << "#Tracks"
       << std::setw(w) << "Min." << std::setw(w) << "Avg." << std::setw(w) << "Max."
       << std::setw(w) << "Vocab.";
    if (s.novel_vocabulary) os << std::setw(w) << "Novel";
    os << '\n';
    os << std::left << std::setw(14) << label << std::right << std::setw(w) << s.videos
       << std::setw(w) << s.frames << std::setw(w) << s.boxes << std::setw(w) << s.tracks
       << std::fixed << std::setprecision(1) << std::setw(w) << s.min_tracks << std::setw(w)
       << s.avg_tracks << std::setw(w) << s.max_tracks << std::setw(w) << s.vocabulary;
    if (s.novel_vocabulary) os << std::setw(w) << *s.novel_vocabulary;
    os << '\n';
    return os.str();
}

std::string stats_json(const DatasetStats& s) {
    json j{{"videos", s.videos},         {"frames", s.frames},
           {"boxes", s.boxes},           {"tracks", s.tracks},
           {"min_tracks", s.min_tracks}, {"avg_tracks", s.avg_tracks},
           {"max_tracks", s.max_tracks}, {"expressions", s.expressions},
           {"vocabulary", s.vocabulary}};
    if (s.novel_vocabulary) j["novel_vocabulary"] = *s.novel_vocabulary;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------- merge

DatasetStats merge_datasets(std::span<const MergeSource> sources, const fs::path& out) {
    struct Planned {
        const MergeSource* source;
        std::string original;
        std::string merged;
    };
    std::vector<Planned> plan;
    std::set<std::string> taken;
    for (const MergeSource& src : sources) {
        if (src.name.empty()) throw UsageError("merge: every source needs a name");
        const DatasetLayout layout{src.root};
        const auto seqs = layout.sequences();
        if (seqs.empty() && !fs::is_directory(src.root / "sequences")) {
            throw Error("merge: no dataset at " + src.root.string());
        }
        for (const auto& seq : seqs) {
            std::string merged = src.name + "-" + seq;
            if (!taken.insert(merged).second) {
                throw ValidationError("merge: sequence id collision on '" + merged + "'");
            }
            plan.push_back({&src, seq, std::move(merged)});
        }
    }

    const DatasetLayout target{out};
    for (const Planned& p : plan) {
        const DatasetLayout from{p.source->root};
        SequenceData data = load_sequence(from, p.original);
        data.manifest.sequence_id = p.merged;
        if (!p.source->scenario.empty()) data.manifest.scenario = p.source->scenario;
        data.manifest.source_dataset = p.source->name;
        data.expressions.sequence = p.merged;

        fs::create_directories(target.sequence_dir(p.merged));
        save_manifest(target.manifest_path(p.merged), data.manifest);
        save_expressions(target.expressions_path(p.merged), data.expressions);
        if (fs::exists(from.gt_path(p.original))) {
            fs::copy_file(from.gt_path(p.original), target.gt_path(p.merged),
                          fs::copy_options::overwrite_existing);
        }
        const fs::path det_dir = from.detections_dir() / p.original;
        if (fs::is_directory(det_dir)) {
            const fs::path dst = target.detections_dir() / p.merged;
            fs::create_directories(dst);
            fs::copy(det_dir, dst, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
        }
    }
    const DatasetStats stats = compute_stats(target);
    auto os = open_out(out / "stats.json");
    os << stats_json(stats);
    return stats;
}

}  // namespace langtrack
