#include "attribeval/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "attribeval/rng.hpp"
#include "text_util.hpp"

namespace attribeval::dataset {

using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, 8> kKeys = {
    "id", "question", "response", "claim", "references", "label", "subset", "split"};

std::string require_string(const json& obj, std::string_view key, const std::string& path,
                           std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path, line_no, std::string(key), "missing");
  if (!it->is_string()) throw SchemaError(path, line_no, std::string(key), "expected a string");
  return it->get<std::string>();
}

}  // namespace

AttributionRecord parse_record(std::string_view line, const std::string& path,
                               std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SchemaError(path, line_no, "<line>", std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw SchemaError(path, line_no, "<line>", "expected a JSON object");

  for (const auto& [key, value] : obj.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
      throw SchemaError(path, line_no, key, "unknown key");
  }

  AttributionRecord rec;
  rec.id = require_string(obj, "id", path, line_no);
  if (text::trim(rec.id).empty()) throw SchemaError(path, line_no, "id", "must be non-empty");
  rec.question = require_string(obj, "question", path, line_no);

  const auto response = obj.find("response");
  if (response == obj.end()) throw SchemaError(path, line_no, "response", "missing");
  if (response->is_string()) {
    rec.response = response->get<std::string>();
  } else if (!response->is_null()) {
    throw SchemaError(path, line_no, "response", "expected a string or null");
  }

  rec.claim = require_string(obj, "claim", path, line_no);
  if (text::trim(rec.claim).empty())
    throw SchemaError(path, line_no, "claim", "must be non-empty");

  const auto refs = obj.find("references");
  if (refs == obj.end()) throw SchemaError(path, line_no, "references", "missing");
  if (!refs->is_array() || refs->empty())
    throw SchemaError(path, line_no, "references", "expected a non-empty array of strings");
  for (std::size_t i = 0; i < refs->size(); ++i) {
    const auto& ref = (*refs)[i];
    if (!ref.is_string() || text::trim(ref.get_ref<const std::string&>()).empty())
      throw SchemaError(path, line_no, "references[" + std::to_string(i) + "]",
                        "expected a non-blank string");
    rec.references.push_back(ref.get<std::string>());
  }

  const auto label = parse_label_code(require_string(obj, "label", path, line_no));
  if (!label) throw SchemaError(path, line_no, "label", "expected \"Y\" or \"N\"");
  rec.label = *label;

  rec.subset = require_string(obj, "subset", path, line_no);
  if (text::trim(rec.subset).empty())
    throw SchemaError(path, line_no, "subset", "must be non-empty");

  const auto split = parse_split(require_string(obj, "split", path, line_no));
  if (!split) throw SchemaError(path, line_no, "split", "expected \"id\" or \"ood\"");
  rec.split = *split;
  return rec;
}

DuplicateIdError::DuplicateIdError(const std::string& id, std::size_t first_line,
                                   std::size_t line)
    : Error("duplicate record id '" + id + "' on line " + std::to_string(line) +
            " (first seen on line " + std::to_string(first_line) + ")") {}

std::string to_json_line(const AttributionRecord& record) {
  nlohmann::ordered_json obj;
  obj["id"] = record.id;
  obj["question"] = record.question;
  obj["response"] = record.response;
  obj["claim"] = record.claim;
  obj["references"] = record.references;
  obj["label"] = label_code(record.label);
  obj["subset"] = record.subset;
  obj["split"] = record.split == Split::ID ? "id" : "ood";
  return obj.dump();
}

std::vector<AttributionRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path.string());

  const std::string path_str = path.string();
  std::vector<AttributionRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) text::strip_utf8_bom(line);
    if (text::trim(line).empty()) continue;
    auto rec = parse_record(line, path_str, line_no);
    const auto [it, inserted] = seen.emplace(rec.id, line_no);
    if (!inserted) throw DuplicateIdError(rec.id, it->second, line_no);
    records.push_back(std::move(rec));
  }
  if (in.bad()) throw IoError("read failure on dataset file: " + path_str);
  return records;
}

std::vector<AttributionRecord> filter(std::span<const AttributionRecord> records,
                                      const std::optional<std::string>& subset,
                                      const std::optional<Split>& split) {
  std::vector<AttributionRecord> out;
  bool subset_seen = false;
  for (const auto& rec : records) {
    const bool subset_ok = !subset || rec.subset == *subset;
    subset_seen = subset_seen || (subset && rec.subset == *subset);
    if (subset_ok && (!split || rec.split == *split)) out.push_back(rec);
  }
  if (subset && !subset_seen) spdlog::warn("subset '{}' matches no records", *subset);
  return out;
}

InsufficientClassError::InsufficientClassError(Label label, std::size_t available,
                                               std::size_t requested)
    : Error("cannot draw " + std::to_string(requested) + " " + std::string(to_string(label)) +
            " records: only " + std::to_string(available) + " available"),
      available_(available) {}

std::vector<AttributionRecord> balance(std::span<const AttributionRecord> records,
                                       std::size_t per_class, std::uint64_t seed) {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < records.size(); ++i)
    (records[i].label == Label::Attributable ? positives : negatives).push_back(i);
  if (positives.size() < per_class)
    throw InsufficientClassError(Label::Attributable, positives.size(), per_class);
  if (negatives.size() < per_class)
    throw InsufficientClassError(Label::NotAttributable, negatives.size(), per_class);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(2 * per_class);
  for (auto* pool : {&positives, &negatives}) {
    // Partial Fisher-Yates: the first per_class slots become the sample.
    for (std::size_t i = 0; i < per_class; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool->size() - i));
      std::swap((*pool)[i], (*pool)[j]);
      chosen.push_back((*pool)[i]);
    }
  }
  seeded_shuffle(std::span<std::size_t>(chosen), rng);

  std::vector<AttributionRecord> out;
  out.reserve(chosen.size());
  for (const auto idx : chosen) out.push_back(records[idx]);
  return out;
}

std::vector<SubsetInfo> summarize(std::span<const AttributionRecord> records) {
  std::vector<SubsetInfo> infos;
  for (const auto& rec : records) {
    auto it = std::find_if(infos.begin(), infos.end(), [&](const SubsetInfo& info) {
      return info.subset == rec.subset && info.split == rec.split;
    });
    if (it == infos.end()) {
      infos.push_back({rec.subset, rec.split, 0, 0, 0});
      it = std::prev(infos.end());
    }
    ++it->count;
    ++(rec.label == Label::Attributable ? it->positives : it->negatives);
  }
  return infos;
}

}  // namespace attribeval::dataset
