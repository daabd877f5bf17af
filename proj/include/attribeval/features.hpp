#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attribeval/probe.hpp"

namespace attribeval::probe {

/// First line of a feature file. `layer_sites` is kept as written; its
/// length fixes the valid 1-based layer indices.
struct FeatureManifest {
  std::string model_id;
  std::string revision;
  nlohmann::json layer_sites = nlohmann::json::array();
  std::string pooling;
  std::size_t dimension = 0;

  std::size_t layer_count() const { return layer_sites.size(); }
  nlohmann::json to_json() const;
};

struct FeatureFile {
  FeatureManifest manifest;
  LayeredFeatures by_layer;  // vectors in file order within each layer
};

/// Parses and validates a feature file: manifest line first, then one
/// {id, layer, values, label} object per line. Labels are "Y"/"N" (1/0 is
/// also accepted). Every layer named by the manifest must have vectors.
/// Errors name the offending line.
FeatureFile load_feature_file(const std::filesystem::path& path);

/// Serializes vectors with 9 significant digits, one per line after the manifest.
std::string format_feature_file(const FeatureManifest& manifest,
                                std::span<const FeatureVector> vectors);

void write_feature_file(const std::filesystem::path& path, const FeatureManifest& manifest,
                        std::span<const FeatureVector> vectors);

}  // namespace attribeval::probe
