#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "specgate/metrics.hpp"

namespace specgate {

enum class ReportFormat { Json, Csv };

ReportFormat report_format_from_path(const std::filesystem::path& path);

/// Finite numbers as JSON numbers; +inf, -inf and NaN as the strings "inf", "-inf", "nan".
nlohmann::json number_to_json(double v);
double number_from_json(const nlohmann::json& j);

/// {metric: {items: [{id, value}], mean, sem, n}}, metrics in name order. sem is null for n < 2.
nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

/// Shortest round-trip decimal form, or one of the sentinel strings.
std::string format_number(double v);

/// Columns metric,item_id,value. After each metric's items come summary rows with the
/// item ids "mean", "sem" (empty value when undefined) and "n".
std::string report_to_csv(const MetricsReport& report);

void write_report(const MetricsReport& report, const std::filesystem::path& path, ReportFormat format);
MetricsReport read_report_json(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace specgate
