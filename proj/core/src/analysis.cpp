#include "ccp/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "ccp/errors.hpp"

namespace ccp {
namespace {

constexpr std::string_view kTrialHeader = "attack,trial,accuracy";
constexpr std::string_view kSummaryHeader = "attack,mean,std,min,max,drop_percent";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    parts.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw FormatError("CSV line " + std::to_string(line_no) + ": bad number '" +
                      std::string(field) + "'");
  }
  return value;
}

}  // namespace

ChannelHistogram histogram(const Image& image) {
  ChannelHistogram hist;
  hist.total = image.plane_size();
  for (int k = 0; k < kChannels; ++k) {
    for (double v : image.plane(k)) {
      const double rounded = std::round(v);
      if (!(rounded >= 0.0 && rounded <= 255.0)) {
        throw InvariantError(fmt::format("histogram: value {} outside the storage domain", v));
      }
      ++hist.bins[k][static_cast<std::size_t>(rounded)];
    }
  }
  return hist;
}

std::string histogram_csv(const ChannelHistogram& hist) {
  static constexpr std::array<char, 3> kNames{'r', 'g', 'b'};
  std::string out = "channel,bin,count\n";
  for (int k = 0; k < kChannels; ++k) {
    for (int b = 0; b < 256; ++b) {
      out += fmt::format("{},{},{}\n", kNames[k], b, hist.bins[k][b]);
    }
  }
  return out;
}

TrialReport aggregate(std::string attack, std::span<const double> accuracies, double baseline) {
  if (accuracies.empty()) throw DataError("aggregate: no trial accuracies for " + attack);
  for (double a : accuracies) {
    if (!(a >= 0.0 && a <= 1.0)) {
      throw DataError(fmt::format("aggregate: accuracy {} outside [0, 1]", a));
    }
  }
  TrialReport r;
  r.attack = std::move(attack);
  r.accuracies.assign(accuracies.begin(), accuracies.end());
  const auto n = static_cast<double>(accuracies.size());

  double sum = 0.0;
  for (double a : accuracies) sum += a;
  r.mean = sum / n;
  double sq = 0.0;
  for (double a : accuracies) sq += (a - r.mean) * (a - r.mean);
  r.std = std::sqrt(sq / n);
  const auto [lo, hi] = std::minmax_element(accuracies.begin(), accuracies.end());
  r.min = *lo;
  r.max = *hi;
  // Rounding can leave the mean one ulp outside [min, max], and a constant
  // list would otherwise report a spread of a few ulps.
  r.mean = std::clamp(r.mean, r.min, r.max);
  if (r.min == r.max) {
    r.mean = r.min;
    r.std = 0.0;
  }
  r.baseline = baseline;
  r.drop_percent = baseline != 0.0 ? 100.0 * (baseline - r.mean) / baseline : 0.0;
  return r;
}

std::string format_reports_csv(std::span<const TrialReport> reports) {
  std::string out(kTrialHeader);
  out += '\n';
  for (const auto& r : reports) {
    for (std::size_t t = 0; t < r.accuracies.size(); ++t) {
      out += fmt::format("{},{},{:.4f}\n", r.attack, t, r.accuracies[t]);
    }
  }
  out += '\n';
  out += kSummaryHeader;
  out += '\n';
  for (const auto& r : reports) {
    out += fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}\n", r.attack, r.mean, r.std, r.min,
                       r.max, r.drop_percent);
  }
  return out;
}

void emit_csv(std::span<const TrialReport> reports, const std::filesystem::path& path) {
  write_text_file(path, format_reports_csv(reports));
}

ParsedReportsCsv parse_reports_csv(std::string_view text) {
  ParsedReportsCsv parsed;
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();

  std::size_t i = 0;
  if (lines.empty() || lines[i] != kTrialHeader) throw FormatError("CSV: missing trial header");
  for (++i; i < lines.size() && !lines[i].empty(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 3) throw FormatError("CSV line " + std::to_string(i + 1) + ": need 3 fields");
    parsed.trials.push_back(
        {std::string(f[0]), parse_number<int>(f[1], i + 1), parse_number<double>(f[2], i + 1)});
  }
  if (i >= lines.size() || !lines[i].empty()) throw FormatError("CSV: missing blank separator");
  ++i;
  if (i >= lines.size() || lines[i] != kSummaryHeader) {
    throw FormatError("CSV: missing summary header");
  }
  for (++i; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 6) throw FormatError("CSV line " + std::to_string(i + 1) + ": need 6 fields");
    parsed.summaries.push_back({std::string(f[0]), parse_number<double>(f[1], i + 1),
                                parse_number<double>(f[2], i + 1),
                                parse_number<double>(f[3], i + 1),
                                parse_number<double>(f[4], i + 1),
                                parse_number<double>(f[5], i + 1)});
  }
  return parsed;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace ccp
