#pragma once

#include "strb/campaign.hpp"

#include <filesystem>
#include <utility>

namespace strb {

struct ReportOptions {
  bool timing = true;  // wall-clock columns; off for byte-for-byte comparisons
  std::vector<std::pair<std::string, std::string>> config_echo;
};

/// Header plus one line per record. Floats use %.5e (six significant digits).
std::string to_csv(const std::vector<MetricsRecord>& table, bool timing = true);
/// Inverse of to_csv; the timing columns are optional.
std::vector<MetricsRecord> parse_csv(const std::string& text);

/// Text table grouped as ROM size | efficiency | accuracy, preceded by the config echo.
std::string summary_text(const std::vector<MetricsRecord>& table, const ReportOptions& opts);

/// Writes `path` (CSV) and a sibling `<stem>_summary.txt`.
void emit_report(const std::vector<MetricsRecord>& table, const std::filesystem::path& path, const ReportOptions& opts);

}  // namespace strb
