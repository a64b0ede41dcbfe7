#include "langtrack/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "langtrack/error.hpp"

namespace langtrack {

namespace {

constexpr int kLabelWidth = 22;
constexpr int kCellWidth = 9;

std::string percent(double v) {
    if (!std::isfinite(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

// Ratio columns return the value; count columns return nullopt and fill `count`.
std::optional<double> ratio_value(const MetricReport& r, std::string_view col, long long& count) {
    if (col == "HOTA") return r.hota;
    if (col == "AssA") return r.assa;
    if (col == "DetA") return r.deta;
    if (col == "LocA") return r.loca;
    if (col == "MOTA") return r.mota;
    if (col == "IDR") return r.idr;
    if (col == "IDP") return r.idp;
    if (col == "IDF1") return r.idf1;
    if (col == "FN") count = r.fn;
    else if (col == "FP") count = r.fp;
    else if (col == "IDs") count = r.ids;
    else throw UsageError("unknown report column '" + std::string(col) + "'");
    return std::nullopt;
}

}  // namespace

std::vector<std::string_view> family_columns(std::string_view family) {
    if (family == "hota") return {"HOTA", "AssA", "DetA", "LocA"};
    if (family == "clear") return {"MOTA", "FN", "FP", "IDs"};
    if (family == "identity") return {"IDR", "IDP", "IDF1"};
    throw UsageError("unknown metric family '" + std::string(family) + "' (expected hota, clear, identity)");
}

std::string format_cell(const MetricReport& r, std::string_view column) {
    long long count = 0;
    if (const auto v = ratio_value(r, column, count)) return percent(*v);
    return std::to_string(count);
}

std::string format_row(std::string_view label, const MetricReport& r,
                       std::span<const std::string_view> columns) {
    std::ostringstream os;
    os << std::left << std::setw(kLabelWidth) << label << std::right;
    for (auto col : columns) os << ' ' << std::setw(kCellWidth) << format_cell(r, col);
    return os.str();
}

std::string render_table(std::span<const ReportRow> rows, std::span<const std::string_view> columns) {
    std::ostringstream os;
    os << std::left << std::setw(kLabelWidth) << "Group" << std::right;
    for (auto col : columns) os << ' ' << std::setw(kCellWidth) << col;
    os << '\n';
    for (const ReportRow& row : rows) os << format_row(row.group, row.metrics, columns) << '\n';
    return os.str();
}

std::string report_json(std::span<const ReportRow> rows, std::span<const std::string_view> columns) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const ReportRow& row : rows) {
        nlohmann::ordered_json rec;
        rec["group"] = row.group;
        rec["units"] = row.units;
        for (auto col : columns) {
            long long count = 0;
            const auto v = ratio_value(row.metrics, col, count);
            const std::string key(col);
            if (!v) {
                rec[key] = count;
            } else if (std::isfinite(*v)) {
                rec[key] = *v;
            } else {
                rec[key] = nullptr;
            }
        }
        arr.push_back(std::move(rec));
    }
    return arr.dump(2) + "\n";
}

}  // namespace langtrack
