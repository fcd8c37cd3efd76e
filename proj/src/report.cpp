#include "specgate/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace specgate {

using nlohmann::json;

ReportFormat report_format_from_path(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".json") return ReportFormat::Json;
  if (ext == ".csv") return ReportFormat::Csv;
  throw Error(ErrorKind::InvalidParams, "report path must end in .json or .csv: " + path.string());
}

json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorKind::ParseError, "expected a number or sentinel, got " + j.dump());
}

json report_to_json(const MetricsReport& report) {
  json out = json::object();
  for (const auto& [name, series] : report) {
    json items = json::array();
    for (std::size_t i = 0; i < series.n(); ++i) {
      items.push_back({{"id", series.item_ids[i]}, {"value", number_to_json(series.values[i])}});
    }
    const auto sem = series.sem();
    out[name] = {
        {"items", std::move(items)},
        {"mean", series.n() ? number_to_json(series.mean()) : json(nullptr)},
        {"sem", sem ? number_to_json(*sem) : json(nullptr)},
        {"n", series.n()},
    };
  }
  return out;
}

MetricsReport report_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "report must be a JSON object");
  MetricsReport report;
  try {
    for (const auto& [name, body] : j.items()) {
      MetricSeries& s = report[name];
      for (const auto& item : body.at("items")) {
        s.add(item.at("id").get<std::string>(), number_from_json(item.at("value")));
      }
      if (body.at("n").get<std::size_t>() != s.n()) {
        throw Error(ErrorKind::ParseError, "item count disagrees with n for " + name);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (const char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "metric,item_id,value\n";
  for (const auto& [name, series] : report) {
    const std::string m = csv_field(name);
    for (std::size_t i = 0; i < series.n(); ++i) {
      out << m << ',' << csv_field(series.item_ids[i]) << ',' << format_number(series.values[i]) << '\n';
    }
    const auto sem = series.sem();
    out << m << ",mean," << (series.n() ? format_number(series.mean()) : "") << '\n';
    out << m << ",sem," << (sem ? format_number(*sem) : "") << '\n';
    out << m << ",n," << series.n() << '\n';
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

void write_report(const MetricsReport& report, const std::filesystem::path& path, ReportFormat format) {
  if (report.empty()) throw Error(ErrorKind::EmptyInput, "report has no metrics");
  write_text_file(path, format == ReportFormat::Json ? report_to_json(report).dump(2) + "\n"
                                                     : report_to_csv(report));
}

MetricsReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("invalid JSON: ") + e.what());
  }
  return report_from_json(j);
}

}  // namespace specgate
