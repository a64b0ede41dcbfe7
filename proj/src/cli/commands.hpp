#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "langtrack/cli.hpp"

namespace langtrack::cli {

struct TrackOptions {
    std::string detections;
    std::string expressions;
    std::string out;
    std::string strategy = "ocsort";
    double tau = 0.5;
    double tau_low = 0.1;
    int max_age = 30;
    int min_hits = 3;
    double iou_gate = 0.3;
    double ocm_weight = 0.2;
    int delta_t = 3;
    std::string oru = "auto";
    bool ocr = false;
    bool ocm_all_stages = false;
    std::string fusion = "min";
    unsigned jobs = 0;
};

struct EvalOptions {
    std::string gt;
    std::string results;
    std::vector<std::string> metrics{"hota", "clear", "identity"};
    bool per_scenario = false;
    std::string json;
    unsigned jobs = 0;
};

struct StatsOptions {
    std::string root;
    std::string reference;
    std::string json;
};

struct MergeOptions {
    std::vector<std::string> sources;    // NAME=PATH
    std::vector<std::string> scenarios;  // NAME=TAG
    std::string out;
};

struct SimulateOptions {
    std::uint64_t seed = 0;
    int sequences = 1;
    int targets = 5;
    int frames = 100;
    int width = 1920;
    int height = 1080;
    double speed_min = 1.0;
    double speed_max = 4.0;
    double noise = 0.0;
    double dropout = 0.0;
    double fp_rate = 0.0;
    double confidence = 0.9;
    std::vector<std::string> occlusions;  // T:START:LEN
    std::vector<std::string> dips;        // T:START:LEN:LOW
    bool curved = false;
    std::string scenario = "mixed";
    std::string out;
};

void add_track(CLI::App& app, TrackOptions& o);
void add_eval(CLI::App& app, EvalOptions& o);
void add_stats(CLI::App& app, StatsOptions& o);
void add_merge(CLI::App& app, MergeOptions& o);
void add_simulate(CLI::App& app, SimulateOptions& o);

int cmd_track(const TrackOptions& o, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsOptions& o, std::ostream& out, std::ostream& err);
int cmd_merge(const MergeOptions& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err);

/// Writes the single resolved-configuration log line.
void log_config(std::ostream& err, const std::string& command, const std::string& json);

}  // namespace langtrack::cli
