#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attribeval/types.hpp"

namespace attribeval::dataset {

/// One benchmark example: does `references` entail `claim`?
struct AttributionRecord {
  std::string id;
  std::string question;
  std::string response;  // may be empty
  std::string claim;
  std::vector<std::string> references;
  Label label = Label::NotAttributable;
  std::string subset;
  Split split = Split::ID;

  bool operator==(const AttributionRecord&) const = default;
};

struct SubsetInfo {
  std::string subset;
  Split split = Split::ID;
  std::size_t count = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// Reads a line-delimited JSON dataset. Blank lines are skipped. Every
/// object must carry exactly the keys id, question, response, claim,
/// references, label, subset, split.
///
/// Throws IoError when the file cannot be read, SchemaError for a malformed
/// line (with line number and field), and DuplicateIdError for a repeated id.
std::vector<AttributionRecord> load_dataset(const std::filesystem::path& path);

/// Parses one dataset line. `path` and `line_no` only feed error messages.
AttributionRecord parse_record(std::string_view line, const std::string& path,
                               std::size_t line_no);

class DuplicateIdError : public Error {
 public:
  DuplicateIdError(const std::string& id, std::size_t first_line, std::size_t line);
};

/// Serializes one record as a dataset line (no trailing newline).
std::string to_json_line(const AttributionRecord& record);

/// Order-preserving selection. Logs a warning when `subset` names nothing.
std::vector<AttributionRecord> filter(std::span<const AttributionRecord> records,
                                      const std::optional<std::string>& subset,
                                      const std::optional<Split>& split);

class InsufficientClassError : public Error {
 public:
  InsufficientClassError(Label label, std::size_t available, std::size_t requested);

  std::size_t available() const { return available_; }

 private:
  std::size_t available_;
};

/// Draws exactly `per_class` records of each label without replacement and
/// returns them in a seeded shuffled order.
std::vector<AttributionRecord> balance(std::span<const AttributionRecord> records,
                                       std::size_t per_class, std::uint64_t seed);

/// Per-(subset, split) counts in order of first appearance.
std::vector<SubsetInfo> summarize(std::span<const AttributionRecord> records);

}  // namespace attribeval::dataset
