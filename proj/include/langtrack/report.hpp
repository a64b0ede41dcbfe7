#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "langtrack/metrics.hpp"

namespace langtrack {

/// Column order of the results table.
inline constexpr std::array<std::string_view, 11> kReportColumns{
    "HOTA", "AssA", "DetA", "LocA", "MOTA", "FN", "FP", "IDs", "IDR", "IDP", "IDF1"};

/// Columns of one metric family: "hota", "clear" or "identity". Throws UsageError otherwise.
std::vector<std::string_view> family_columns(std::string_view family);

/// Cell text: ratios as percentages with two decimals, counts as integers, undefined as "-".
std::string format_cell(const MetricReport& r, std::string_view column);

/// One aligned table line.
std::string format_row(std::string_view label, const MetricReport& r,
                       std::span<const std::string_view> columns = kReportColumns);

/// Header line plus one line per row.
std::string render_table(std::span<const ReportRow> rows,
                         std::span<const std::string_view> columns = kReportColumns);

/// JSON array, one object per row: {"group", "units", <columns>...}; ratios in [0,1],
/// null where undefined.
std::string report_json(std::span<const ReportRow> rows,
                        std::span<const std::string_view> columns = kReportColumns);

}  // namespace langtrack
