#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccp/image.hpp"

namespace ccp {

struct ChannelHistogram {
  std::array<std::array<std::uint64_t, 256>, 3> bins{};
  std::uint64_t total = 0;  // pixels per channel

  friend bool operator==(const ChannelHistogram&, const ChannelHistogram&) = default;
};

// 256 bins per channel; bin k counts samples whose rounded value is k.
// A value that rounds outside [0, 255] throws InvariantError.
ChannelHistogram histogram(const Image& image);

// Rows "channel,bin,count" for 3×256 bins, channel as r/g/b.
std::string histogram_csv(const ChannelHistogram& hist);

struct TrialReport {
  std::string attack;
  std::vector<double> accuracies;  // one per trial, each in [0, 1]
  double mean = 0.0;
  double std = 0.0;  // population (divisor N)
  double min = 0.0;
  double max = 0.0;
  double baseline = 0.0;
  double drop_percent = 0.0;  // 100·(baseline − mean)/baseline; 0 when baseline is 0

  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

// Throws DataError for an empty list or accuracies outside [0, 1].
TrialReport aggregate(std::string attack, std::span<const double> accuracies, double baseline);

// Raw block "attack,trial,accuracy" (trial counted from 0), a blank line,
// then "attack,mean,std,min,max,drop_percent". Four decimals, LF endings.
std::string format_reports_csv(std::span<const TrialReport> reports);
void emit_csv(std::span<const TrialReport> reports, const std::filesystem::path& path);

struct CsvTrialRow {
  std::string attack;
  int trial = 0;
  double accuracy = 0.0;
};

struct CsvSummaryRow {
  std::string attack;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  double drop_percent = 0.0;
};

struct ParsedReportsCsv {
  std::vector<CsvTrialRow> trials;
  std::vector<CsvSummaryRow> summaries;
};

// Reads back the format written by format_reports_csv. Throws FormatError
// on anything else.
ParsedReportsCsv parse_reports_csv(std::string_view text);

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace ccp
