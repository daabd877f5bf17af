#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attribeval/metrics.hpp"

namespace attribeval::report {

struct EvalReport {
  std::string title;
  std::vector<metrics::MetricsRow> rows;
  std::optional<double> id_average;
  std::optional<double> ood_average;
  // Support-weighted companions of the macro averages, shown alongside them.
  std::optional<double> id_average_weighted;
  std::optional<double> ood_average_weighted;
  std::map<std::string, std::string> metadata;
};

/// Splits rows by ID/OOD and attaches both averages of each populated split.
/// Throws on empty rows.
EvalReport build_report(std::string title, std::vector<metrics::MetricsRow> rows,
                        std::map<std::string, std::string> metadata);

enum class Format { Markdown, CSV };

std::optional<Format> parse_format(std::string_view text);
std::string_view file_extension(Format format);

inline constexpr std::string_view kCsvHeader =
    "subset,split,support,f1,fp_rate,fn_rate,unparse_rate,flags";

/// Deterministic serialization; numbers are rounded only here.
std::string emit(const EvalReport& report, Format format);

/// Rounds half-up to two decimals. The tie test runs on the shortest decimal
/// text that round-trips `value`, so 74.935 becomes "74.94".
std::string format_fixed2(double value);

struct CsvRecord {
  std::string subset;
  std::string split;
  std::uint64_t support = 0;
  double f1 = 0;
  double fp_rate = 0;
  double fn_rate = 0;
  double unparse_rate = 0;
  std::string flags;
};

/// Reads CSV produced by emit(). Throws Error on a wrong header or row.
std::vector<CsvRecord> parse_csv(std::string_view text);

}  // namespace attribeval::report
