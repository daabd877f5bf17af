#include "attribeval/types.hpp"

#include <algorithm>
#include <cctype>

namespace attribeval {

std::string_view to_string(Label label) {
  return label == Label::Attributable ? "Attributable" : "NotAttributable";
}

std::string_view to_string(Split split) { return split == Split::ID ? "ID" : "OOD"; }

std::string_view label_code(Label label) { return label == Label::Attributable ? "Y" : "N"; }

std::optional<Label> parse_label_code(std::string_view code) {
  if (code == "Y") return Label::Attributable;
  if (code == "N") return Label::NotAttributable;
  return std::nullopt;
}

std::optional<Split> parse_split(std::string_view text) {
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lowered == "id") return Split::ID;
  if (lowered == "ood") return Split::OOD;
  return std::nullopt;
}

SchemaError::SchemaError(std::string path, std::size_t line, std::string field,
                         const std::string& detail)
    : Error(path + ":" + std::to_string(line) + ": field '" + field + "': " + detail),
      path_(std::move(path)),
      line_(line),
      field_(std::move(field)) {}

}  // namespace attribeval
