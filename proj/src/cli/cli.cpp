#include "langtrack/cli.hpp"

#include <cstdlib>
#include <exception>
#include <ostream>

#include "commands.hpp"
#include "langtrack/error.hpp"

namespace langtrack::cli {

std::string_view version() noexcept { return LANGTRACK_VERSION; }

void log_config(std::ostream& err, const std::string& command, const std::string& json) {
    err << "[langtrack " << version() << "] " << command << " config=" << json << '\n';
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Language-guided multi-object tracking toolkit", "langtrack"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(version()));
    const char* env = std::getenv("LANGTRACK_CONFIG");
    app.set_config("--config", env ? env : "", "TOML/INI file with per-command defaults ([track], [eval], ...)");

    TrackOptions track;
    EvalOptions eval;
    StatsOptions stats;
    MergeOptions merge;
    SimulateOptions simulate;
    CLI::App* track_cmd = app.add_subcommand("track", "Track every (sequence, expression) unit");
    CLI::App* eval_cmd = app.add_subcommand("eval", "Score results against ground truth");
    CLI::App* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
    CLI::App* merge_cmd = app.add_subcommand("merge", "Merge datasets under prefixed sequence ids");
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic dataset");
    add_track(*track_cmd, track);
    add_eval(*eval_cmd, eval);
    add_stats(*stats_cmd, stats);
    add_merge(*merge_cmd, merge);
    add_simulate(*sim_cmd, simulate);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*track_cmd) return cmd_track(track, out, err);
        if (*eval_cmd) return cmd_eval(eval, out, err);
        if (*stats_cmd) return cmd_stats(stats, out, err);
        if (*merge_cmd) return cmd_merge(merge, out, err);
        if (*sim_cmd) return cmd_simulate(simulate, out, err);
    } catch (const langtrack::Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kUsageError;
}

}  // namespace langtrack::cli
