#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "attribeval/dataset.hpp"
#include "attribeval/features.hpp"
#include "attribeval/llm_client.hpp"
#include "attribeval/probe.hpp"
#include "attribeval/prompting.hpp"

namespace attribeval::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(ATTRIBEVAL_TEST_DATA_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("attribeval-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Replay fixture answering every record of `records` except `skip_id`.
/// Gold-positive records get "YES"; negatives get "No." except every fourth,
/// which gets "YES" so the table is not trivially perfect.
inline std::string make_replay_fixture(const std::vector<dataset::AttributionRecord>& records,
                                       const llm::ModelConfig& config,
                                       const std::string& skip_id = {}) {
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.id == skip_id) continue;
    const std::string answer =
        rec.label == Label::Attributable ? "YES" : (i % 4 == 0 ? "YES" : "No.");
    const auto digest = llm::cache_key(config, prompting::render_prompt(rec).text);
    out += nlohmann::json{{"digest", digest}, {"raw_text", answer}}.dump() + "\n";
  }
  return out;
}

/// Two Gaussian-free blobs: class Y at x0 >= 0.5, class N at x0 <= -0.5,
/// x1 uniform noise. The margin between classes is 1.
inline std::vector<probe::FeatureVector> separable_2d(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset(0.5, 3.0);
  std::uniform_real_distribution<double> noise(-2.0, 2.0);
  std::vector<probe::FeatureVector> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    out.push_back({"p" + std::to_string(i), 1, {offset(rng), noise(rng)}, Label::Attributable});
    out.push_back({"n" + std::to_string(i), 1, {-offset(rng), noise(rng)}, Label::NotAttributable});
  }
  return out;
}

/// Synthetic layered features for `layers` layers, 84 records per class.
/// Odd layers carry a label-correlated signal in dimension 0, even layers
/// are pure noise, and the last layer is all zeros.
inline probe::FeatureFile synthetic_layers(int layers, std::size_t dim, std::uint64_t seed,
                                           std::size_t per_class = 84) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  probe::FeatureFile file;
  file.manifest.model_id = "synthetic";
  file.manifest.revision = "test";
  file.manifest.pooling = "SegmentMass";
  file.manifest.dimension = dim;
  for (int l = 1; l <= layers; ++l)
    file.manifest.layer_sites.push_back({{"stack", "encoder"}, {"index", l}});
  for (int l = 1; l <= layers; ++l) {
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
      const Label label = i % 2 == 0 ? Label::Attributable : Label::NotAttributable;
      probe::FeatureVector fv{"r" + std::to_string(i), l, std::vector<double>(dim, 0.0), label};
      if (l != layers) {
        for (auto& v : fv.values) v = gauss(rng);
        if (l % 2 == 1) fv.values[0] += label == Label::Attributable ? 1.5 : -1.5;
      }
      file.by_layer[l].push_back(std::move(fv));
    }
  }
  return file;
}

struct GradientCase {
  probe::ProbeParams params;
  std::vector<probe::FeatureVector> batch;
};

/// Random 5-d probe and 16-record batch. Raw features are drawn around the
/// params' own means and spreads and weights are modest, so logits stay in
/// a range where a naive log(1 - p) is still accurate.
inline GradientCase random_gradient_case(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> spread(0.5, 3.0);
  std::bernoulli_distribution coin(0.5);
  GradientCase c;
  for (int k = 0; k < 5; ++k) {
    c.params.weights.push_back(0.5 * g(rng));
    c.params.feature_means.push_back(g(rng));
    c.params.feature_stds.push_back(spread(rng));
  }
  c.params.bias = 0.5 * g(rng);
  for (int i = 0; i < 16; ++i) {
    std::vector<double> x(5);
    for (std::size_t k = 0; k < 5; ++k)
      x[k] = c.params.feature_means[k] + c.params.feature_stds[k] * g(rng);
    c.batch.push_back({"r" + std::to_string(i), 1, std::move(x),
                       coin(rng) ? Label::Attributable : Label::NotAttributable});
  }
  return c;
}

inline std::vector<probe::FeatureVector> flatten(const probe::LayeredFeatures& layers) {
  std::vector<probe::FeatureVector> out;
  for (const auto& [layer, set] : layers) out.insert(out.end(), set.begin(), set.end());
  return out;
}

}  // namespace attribeval::testing
