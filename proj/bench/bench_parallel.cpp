// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <chrono>
#include <random>
#include <thread>

#include "attribeval/llm_client.hpp"
#include "attribeval/probe.hpp"

namespace {

using namespace attribeval;

probe::LayeredFeatures make_layers(int layers, std::size_t dim, std::size_t per_class) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  probe::LayeredFeatures out;
  for (int l = 1; l <= layers; ++l) {
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
      const Label label = i % 2 ? Label::NotAttributable : Label::Attributable;
      probe::FeatureVector fv{"r" + std::to_string(i), l, std::vector<double>(dim), label};
      for (auto& v : fv.values) v = gauss(rng);
      fv.values[0] += label == Label::Attributable ? 1.0 : -1.0;
      out[l].push_back(std::move(fv));
    }
  }
  return out;
}

probe::SweepOptions sweep_options() {
  probe::SweepOptions opts;
  opts.train.epochs = 300;
  return opts;
}

void BM_LayerSweepSerial(benchmark::State& state) {
  const auto layers = make_layers(12, static_cast<std::size_t>(state.range(0)), 84);
  const auto opts = sweep_options();
  for (auto _ : state) benchmark::DoNotOptimize(probe::layer_sweep_serial(layers, opts));
}
BENCHMARK(BM_LayerSweepSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LayerSweepParallel(benchmark::State& state) {
  const auto layers = make_layers(12, static_cast<std::size_t>(state.range(0)), 84);
  const auto opts = sweep_options();
  for (auto _ : state) benchmark::DoNotOptimize(probe::layer_sweep(layers, opts));
}
BENCHMARK(BM_LayerSweepParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

/// Fixed-latency backend standing in for a remote endpoint.
class SleepBackend : public llm::Backend {
 public:
  llm::BackendReply fetch(const llm::ModelConfig&, std::string_view, std::string_view) override {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    return {"YES", {}};
  }
};

void BM_RunBatch(benchmark::State& state) {
  std::vector<prompting::PromptBundle> prompts;
  for (int i = 0; i < 64; ++i) prompts.push_back({"r" + std::to_string(i), "prompt " + std::to_string(i), "v"});
  const int parallelism = static_cast<int>(state.range(0));
  for (auto _ : state) {
    llm::Client client(llm::ModelConfig{}, std::make_shared<SleepBackend>());
    benchmark::DoNotOptimize(client.run_batch(prompts, parallelism));
  }
}
BENCHMARK(BM_RunBatch)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
