#include "langtrack/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "langtrack/error.hpp"

namespace langtrack {

void SimConfig::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (num_targets < 0) throw UsageError("num_targets must be >= 0");
    if (num_frames < 1) throw UsageError("num_frames must be >= 1");
    if (image_width < 1 || image_height < 1) throw UsageError("image size must be positive");
    if (!(speed_min >= 0.0) || speed_max < speed_min) throw UsageError("bad speed range");
    if (!(box_w_min > 0.0) || box_w_max < box_w_min || !(box_h_min > 0.0) || box_h_max < box_h_min) {
        throw UsageError("bad box size range");
    }
    if (box_w_max > image_width || box_h_max > image_height) {
        throw UsageError("boxes must fit inside the image");
    }
    if (!(det_noise_std >= 0.0)) throw UsageError("det_noise_std must be >= 0");
    if (!prob(dropout_prob)) throw UsageError("dropout_prob must lie in [0,1]");
    if (!(false_pos_rate >= 0.0)) throw UsageError("false_pos_rate must be >= 0");
    if (!prob(confidence)) throw UsageError("confidence must lie in [0,1]");
    for (const auto& o : occlusions) {
        if (o.target < 1 || o.target > num_targets || o.length < 0) throw UsageError("bad occlusion");
    }
    for (const auto& d : dips) {
        if (d.target < 1 || d.target > num_targets || d.length < 0 || !prob(d.low)) {
            throw UsageError("bad confidence dip");
        }
    }
    if (curved && !(curve_period > 0.0)) throw UsageError("curve_period must be > 0");
}

namespace {

struct Mover {
    double x, y, w, h;
    double vx, vy;  // base velocity; the curved mode rotates it per frame
};

bool within(int frame, int start, int length) { return frame >= start && frame < start + length; }

void reflect(double& pos, double& vel, double extent, double limit) {
    if (pos < 0.0) {
        pos = -pos;
        vel = -vel;
    } else if (pos + extent > limit) {
        pos = 2.0 * (limit - extent) - pos;
        vel = -vel;
    }
    pos = std::clamp(pos, 0.0, limit - extent);
}

}  // namespace

SimResult generate(const SimConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const double W = cfg.image_width;
    const double H = cfg.image_height;

    std::vector<Mover> movers;
    for (int t = 0; t < cfg.num_targets; ++t) {
        Mover m{};
        m.w = uniform(cfg.box_w_min, cfg.box_w_max);
        m.h = uniform(cfg.box_h_min, cfg.box_h_max);
        m.x = uniform(0.0, W - m.w);
        m.y = uniform(0.0, H - m.h);
        const double speed = uniform(cfg.speed_min, cfg.speed_max);
        const double heading = uniform(0.0, 2.0 * std::numbers::pi);
        m.vx = speed * std::cos(heading);
        m.vy = speed * std::sin(heading);
        movers.push_back(m);
    }

    SimResult out;
    out.manifest.sequence_id = cfg.sequence_id.empty() ? "sim" + std::to_string(cfg.seed) : cfg.sequence_id;
    out.manifest.scenario = cfg.scenario;
    out.manifest.frame_count = cfg.num_frames;
    out.manifest.image_size = std::make_pair(cfg.image_width, cfg.image_height);
    out.manifest.source_dataset = "synthetic";

    std::vector<char> moving_right(movers.size());
    for (std::size_t t = 0; t < movers.size(); ++t) moving_right[t] = movers[t].vx >= 0.0;

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::bernoulli_distribution drop(cfg.dropout_prob);
    std::poisson_distribution<int> fp_count(cfg.false_pos_rate > 0.0 ? cfg.false_pos_rate : 1.0);

    for (int frame = 1; frame <= cfg.num_frames; ++frame) {
        for (std::size_t t = 0; t < movers.size(); ++t) {
            Mover& m = movers[t];
            if (frame > 1) {
                double vx = m.vx, vy = m.vy;
                if (cfg.curved) {
                    const double a = cfg.curve_amplitude *
                                     std::sin(2.0 * std::numbers::pi * frame / cfg.curve_period);
                    vx = m.vx * std::cos(a) - m.vy * std::sin(a);
                    vy = m.vx * std::sin(a) + m.vy * std::cos(a);
                }
                double nx = m.x + vx, ny = m.y + vy;
                double fx = m.vx, fy = m.vy;
                reflect(nx, fx, m.w, W);
                reflect(ny, fy, m.h, H);
                m.x = nx;
                m.y = ny;
                m.vx = fx;
                m.vy = fy;
            }
            const int id = static_cast<int>(t) + 1;
            const BBox truth{m.x, m.y, m.w, m.h};
            out.gt.push_back({frame, id, truth});

            // Draw every random number unconditionally so that toggling one effect does not
            // reshuffle the others.
            const bool dropped = drop(rng);
            double n[4] = {gauss(rng), gauss(rng), gauss(rng), gauss(rng)};
            const bool occluded = std::any_of(cfg.occlusions.begin(), cfg.occlusions.end(), [&](const Occlusion& o) {
                return o.target == id && within(frame, o.start_frame, o.length);
            });
            if (dropped || occluded) continue;

            BBox box = truth;
            if (cfg.det_noise_std > 0.0) {
                const double s = cfg.det_noise_std;
                const double w = std::max(1.0, truth.w + s * n[2]);
                const double h = std::max(1.0, truth.h + s * n[3]);
                const double cx = truth.center_x() + s * n[0];
                const double cy = truth.center_y() + s * n[1];
                box = BBox{cx - w / 2.0, cy - h / 2.0, w, h};
            }
            double conf = cfg.confidence;
            for (const auto& d : cfg.dips) {
                if (d.target == id && within(frame, d.start_frame, d.length)) conf = d.low;
            }
            out.detections.push_back({Detection{frame, box, conf, std::nullopt}, id});
        }
        if (cfg.false_pos_rate > 0.0) {
            const int k = fp_count(rng);
            for (int i = 0; i < k; ++i) {
                const double w = uniform(cfg.box_w_min, cfg.box_w_max);
                const double h = uniform(cfg.box_h_min, cfg.box_h_max);
                const BBox box{uniform(0.0, W - w), uniform(0.0, H - h), w, h};
                const double conf = unit(rng);
                out.detections.push_back({Detection{frame, box, conf, std::nullopt}, 0});
            }
        }
    }

    auto& ex = out.expressions;
    ex.sequence = out.manifest.sequence_id;
    std::vector<int> all, right, left;
    for (std::size_t t = 0; t < movers.size(); ++t) {
        const int id = static_cast<int>(t) + 1;
        all.push_back(id);
        (moving_right[t] ? right : left).push_back(id);
    }
    int next = 1;
    if (!all.empty()) ex.expressions.push_back({expression_id(next++), "all moving objects", all});
    if (!right.empty() && !left.empty()) {
        ex.expressions.push_back({expression_id(next++), "objects heading right at the start", right});
        ex.expressions.push_back({expression_id(next++), "objects heading left at the start", left});
    }
    return out;
}

std::vector<std::vector<Detection>> SimResult::frames_for(const ExpressionAnnotation& expr) const {
    const std::set<int> ids(expr.track_ids.begin(), expr.track_ids.end());
    std::vector<std::vector<Detection>> out(static_cast<std::size_t>(manifest.frame_count));
    for (const auto& d : detections) {
        if (d.target == 0 || ids.contains(d.target)) out[static_cast<std::size_t>(d.det.frame - 1)].push_back(d.det);
    }
    return out;
}

std::vector<std::vector<Detection>> SimResult::frames() const {
    std::vector<std::vector<Detection>> out(static_cast<std::size_t>(manifest.frame_count));
    for (const auto& d : detections) out[static_cast<std::size_t>(d.det.frame - 1)].push_back(d.det);
    return out;
}

void write_dataset(const SimResult& sim, const DatasetLayout& layout) {
    const std::string& seq = sim.manifest.sequence_id;
    fs::create_directories(layout.sequence_dir(seq));
    save_manifest(layout.manifest_path(seq), sim.manifest);
    save_mot(layout.gt_path(seq), sim.gt);
    save_expressions(layout.expressions_path(seq), sim.expressions);
    for (const auto& expr : sim.expressions.expressions) {
        std::vector<Detection> flat;
        for (const auto& frame : sim.frames_for(expr)) flat.insert(flat.end(), frame.begin(), frame.end());
        save_detections(layout.detections_path(seq, expr.id), flat);
    }
}

}  // namespace langtrack
