#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace attribeval {

/// Gold or predicted attribution label. Attributable is the positive class.
enum class Label { Attributable, NotAttributable };

/// Benchmark partition: in-distribution or out-of-distribution.
enum class Split { ID, OOD };

std::string_view to_string(Label label);
std::string_view to_string(Split split);

/// "Y"/"N" wire encoding used by dataset, prediction, and feature files.
std::string_view label_code(Label label);
std::optional<Label> parse_label_code(std::string_view code);

/// Accepts "id"/"ood" in any letter case.
std::optional<Split> parse_split(std::string_view text);

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A malformed line in one of the line-delimited input files.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, std::size_t line, std::string field, const std::string& detail);

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string path_;
  std::size_t line_;
  std::string field_;
};

}  // namespace attribeval
