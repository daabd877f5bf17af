#include "attribeval/features.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "text_util.hpp"

namespace attribeval::probe {

using json = nlohmann::json;

json FeatureManifest::to_json() const {
  return json{{"model_id", model_id},
              {"revision", revision},
              {"layer_sites", layer_sites},
              {"pooling", pooling},
              {"dimension", dimension}};
}

namespace {

FeatureManifest parse_manifest(const json& obj, const std::string& path) {
  auto fail = [&](const std::string& field, const std::string& detail) -> SchemaError {
    return SchemaError(path, 1, field, detail);
  };
  if (!obj.is_object()) throw fail("<manifest>", "expected a JSON object");
  FeatureManifest m;
  for (const char* key : {"model_id", "revision", "pooling"}) {
    if (!obj.contains(key) || !obj[key].is_string()) throw fail(key, "missing or not a string");
  }
  m.model_id = obj["model_id"].get<std::string>();
  m.revision = obj["revision"].get<std::string>();
  m.pooling = obj["pooling"].get<std::string>();
  if (!obj.contains("layer_sites") || !obj["layer_sites"].is_array() || obj["layer_sites"].empty())
    throw fail("layer_sites", "expected a non-empty array");
  m.layer_sites = obj["layer_sites"];
  if (!obj.contains("dimension") || !obj["dimension"].is_number_unsigned() ||
      obj["dimension"].get<std::size_t>() == 0)
    throw fail("dimension", "expected a positive integer");
  m.dimension = obj["dimension"].get<std::size_t>();
  return m;
}

FeatureVector parse_vector(const json& obj, const FeatureManifest& manifest,
                           const std::string& path, std::size_t line_no) {
  auto fail = [&](const std::string& field, const std::string& detail) -> SchemaError {
    return SchemaError(path, line_no, field, detail);
  };
  if (!obj.is_object()) throw fail("<line>", "expected a JSON object");
  FeatureVector fv;
  if (!obj.contains("id") || !obj["id"].is_string() || obj["id"].get<std::string>().empty())
    throw fail("id", "missing or not a non-empty string");
  fv.record_id = obj["id"].get<std::string>();

  if (!obj.contains("layer") || !obj["layer"].is_number_integer())
    throw fail("layer", "missing or not an integer");
  const auto layer = obj["layer"].get<std::int64_t>();
  if (layer < 1 || layer > static_cast<std::int64_t>(manifest.layer_count()))
    throw fail("layer", "index " + std::to_string(layer) + " outside 1.." +
                            std::to_string(manifest.layer_count()));
  fv.layer = static_cast<int>(layer);

  if (!obj.contains("values") || !obj["values"].is_array())
    throw fail("values", "missing or not an array");
  const auto& values = obj["values"];
  if (values.size() != manifest.dimension)
    throw fail("values", "dimension " + std::to_string(values.size()) +
                             " does not match manifest dimension " +
                             std::to_string(manifest.dimension));
  fv.values.reserve(values.size());
  for (const auto& v : values) {
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      throw fail("values", "every value must be a finite number");
    fv.values.push_back(v.get<double>());
  }

  if (!obj.contains("label")) throw fail("label", "missing");
  const auto& label = obj["label"];
  if (label.is_string()) {
    const auto parsed = parse_label_code(label.get<std::string>());
    if (!parsed) throw fail("label", "expected \"Y\" or \"N\"");
    fv.label = *parsed;
  } else if (label.is_number_integer() && (label.get<int>() == 0 || label.get<int>() == 1)) {
    fv.label = label.get<int>() == 1 ? Label::Attributable : Label::NotAttributable;
  } else {
    throw fail("label", "expected \"Y\"/\"N\" or 1/0");
  }
  return fv;
}

void append_number(std::string& out, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.9g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

FeatureFile load_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path.string());
  const std::string path_str = path.string();

  FeatureFile file;
  bool have_manifest = false;
  std::set<std::pair<int, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) text::strip_utf8_bom(line);
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(path_str, line_no, "<line>", std::string("invalid JSON: ") + e.what());
    }
    if (!have_manifest) {
      if (line_no != 1) throw SchemaError(path_str, line_no, "<manifest>", "must be the first line");
      file.manifest = parse_manifest(obj, path_str);
      have_manifest = true;
      continue;
    }
    auto fv = parse_vector(obj, file.manifest, path_str, line_no);
    if (!seen.emplace(fv.layer, fv.record_id).second)
      throw SchemaError(path_str, line_no, "id",
                        "duplicate vector for record '" + fv.record_id + "' at layer " +
                            std::to_string(fv.layer));
    file.by_layer[fv.layer].push_back(std::move(fv));
  }
  if (!have_manifest) throw SchemaError(path_str, 1, "<manifest>", "feature file is empty");
  for (std::size_t layer = 1; layer <= file.manifest.layer_count(); ++layer) {
    if (!file.by_layer.contains(static_cast<int>(layer)) && !file.by_layer.empty())
      throw Error(path_str + ": manifest declares layer " + std::to_string(layer) +
                  " but the file has no vectors for it");
  }
  return file;
}

std::string format_feature_file(const FeatureManifest& manifest,
                                std::span<const FeatureVector> vectors) {
  std::string out = manifest.to_json().dump() + "\n";
  for (const auto& fv : vectors) {
    out += "{\"id\":" + json(fv.record_id).dump() + ",\"layer\":" + std::to_string(fv.layer) +
           ",\"values\":[";
    for (std::size_t k = 0; k < fv.values.size(); ++k) {
      if (k > 0) out += ',';
      append_number(out, fv.values[k]);
    }
    out += "],\"label\":\"" + std::string(label_code(fv.label)) + "\"}\n";
  }
  return out;
}

void write_feature_file(const std::filesystem::path& path, const FeatureManifest& manifest,
                        std::span<const FeatureVector> vectors) {
  text::write_file_atomic(path, format_feature_file(manifest, vectors));
}

}  // namespace attribeval::probe
