#include "attribeval/report.hpp"

#include <charconv>
#include <cmath>

namespace attribeval::report {

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw Error("unterminated quoted CSV field");
  return fields;
}

std::string markdown_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& field, const char* name) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw Error(std::string("CSV column ") + name + ": not a number: '" + field + "'");
  return value;
}

}  // namespace

EvalReport build_report(std::string title, std::vector<metrics::MetricsRow> rows,
                        std::map<std::string, std::string> metadata) {
  if (rows.empty()) throw Error("build_report: no rows");
  EvalReport report;
  report.title = std::move(title);
  report.metadata = std::move(metadata);

  std::vector<metrics::MetricsRow> id_rows;
  std::vector<metrics::MetricsRow> ood_rows;
  for (const auto& row : rows) (row.split == Split::ID ? id_rows : ood_rows).push_back(row);
  auto weighted = [](const std::vector<metrics::MetricsRow>& part) -> std::optional<double> {
    for (const auto& row : part)
      if (row.support > 0) return metrics::aggregate_weighted(part);
    return std::nullopt;
  };
  if (!id_rows.empty()) {
    report.id_average = metrics::aggregate(id_rows);
    report.id_average_weighted = weighted(id_rows);
  }
  if (!ood_rows.empty()) {
    report.ood_average = metrics::aggregate(ood_rows);
    report.ood_average_weighted = weighted(ood_rows);
  }
  report.rows = std::move(rows);
  return report;
}

std::optional<Format> parse_format(std::string_view text) {
  if (text == "markdown" || text == "md") return Format::Markdown;
  if (text == "csv") return Format::CSV;
  return std::nullopt;
}

std::string_view file_extension(Format format) {
  return format == Format::Markdown ? ".md" : ".csv";
}

std::string format_fixed2(double value) {
  if (!std::isfinite(value)) throw Error("cannot format a non-finite value");
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof buf, std::abs(value), std::chars_format::fixed);
  if (res.ec != std::errc()) throw Error("value too large to format");
  const std::string_view digits(buf, static_cast<std::size_t>(res.ptr - buf));

  const auto dot = digits.find('.');
  std::string whole(digits.substr(0, dot));
  std::string frac = dot == std::string_view::npos ? "" : std::string(digits.substr(dot + 1));
  const bool round_up = frac.size() > 2 && frac[2] >= '5';
  frac.resize(2, '0');

  // Decimal carry through "whole.frac".
  std::string number = whole + frac;
  if (round_up) {
    std::size_t i = number.size();
    while (i > 0) {
      --i;
      if (number[i] == '9') {
        number[i] = '0';
      } else {
        ++number[i];
        break;
      }
      if (i == 0) number.insert(number.begin(), '1');
    }
  }
  std::string out = number.substr(0, number.size() - 2) + "." + number.substr(number.size() - 2);
  if (std::signbit(value) && out.find_first_not_of("0.") != std::string::npos) out = "-" + out;
  return out;
}

std::string emit(const EvalReport& report, Format format) {
  std::string out;
  if (format == Format::CSV) {
    out += kCsvHeader;
    out += '\n';
    for (const auto& row : report.rows) {
      out += csv_field(row.subset) + ',' + std::string(to_string(row.split)) + ',' +
             std::to_string(row.support) + ',' + format_fixed2(row.f1) + ',' +
             format_fixed2(row.fp_rate) + ',' + format_fixed2(row.fn_rate) + ',' +
             format_fixed2(row.unparse_rate) + ',' +
             csv_field(metrics::flags_to_string(row.flags)) + '\n';
    }
    return out;
  }

  out += "# " + report.title + "\n\n";
  for (const auto& [key, value] : report.metadata)
    out += "- " + markdown_cell(key) + ": " + markdown_cell(value) + "\n";
  if (!report.metadata.empty()) out += "\n";

  out += "| Subset | Split | # | F1 ↑ | FP ↓ | FN ↓ | Unparse | Flags |\n";
  out += "|---|---|---:|---:|---:|---:|---:|---|\n";
  for (const auto& row : report.rows) {
    out += "| " + markdown_cell(row.subset) + " | " + std::string(to_string(row.split)) + " | " +
           std::to_string(row.support) + " | " + format_fixed2(row.f1) + " | " +
           format_fixed2(row.fp_rate) + " | " + format_fixed2(row.fn_rate) + " | " +
           format_fixed2(row.unparse_rate) + " | " + metrics::flags_to_string(row.flags) + " |\n";
  }

  auto average_line = [&](std::string_view label, const std::optional<double>& macro,
                          const std::optional<double>& weighted) {
    if (!macro) return;
    out += "\n" + std::string(label) + " F1 (unweighted mean over subsets): " +
           format_fixed2(*macro) + "\n";
    if (weighted)
      out += std::string(label) + " F1 (support-weighted mean): " + format_fixed2(*weighted) + "\n";
  };
  average_line("ID-Avg.", report.id_average, report.id_average_weighted);
  average_line("OOD-Avg.", report.ood_average, report.ood_average_weighted);
  return out;
}

std::vector<CsvRecord> parse_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto cut = text.find('\n');
    lines.push_back(text.substr(0, cut));
    text = cut == std::string_view::npos ? std::string_view{} : text.substr(cut + 1);
  }
  if (lines.empty() || lines.front() != kCsvHeader) throw Error("CSV header mismatch");

  std::vector<CsvRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 8) throw Error("CSV line " + std::to_string(i + 1) + ": expected 8 fields");
    records.push_back({f[0], f[1], parse_number<std::uint64_t>(f[2], "support"),
                       parse_number<double>(f[3], "f1"), parse_number<double>(f[4], "fp_rate"),
                       parse_number<double>(f[5], "fn_rate"),
                       parse_number<double>(f[6], "unparse_rate"), f[7]});
  }
  return records;
}

}  // namespace attribeval::report
