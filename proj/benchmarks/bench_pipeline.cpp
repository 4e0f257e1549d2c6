#include <benchmark/benchmark.h>

#include <vector>

#include "psgkit/corpus.hpp"
#include "psgkit/descriptors.hpp"
#include "psgkit/dsp/filters.hpp"
#include "psgkit/features.hpp"
#include "psgkit/metrics.hpp"
#include "psgkit/night.hpp"
#include "psgkit/psg_io.hpp"
#include "psgkit/renderer.hpp"
#include "psgkit/rng.hpp"
#include "psgkit/rule_engine.hpp"
#include "psgkit/synth.hpp"

using namespace psgkit;

namespace {

// A busy N2-like epoch: background on every channel plus a spindle and a KC.
Epoch busy_epoch() {
  using synth::Waveform;
  synth::EpochSpec spec;
  for (Channel c : kMontage) spec.components.push_back({c, Waveform::Noise, 0, 30, 1.0, 8.0, 30.0});
  spec.components.push_back({Channel::C4M1, Waveform::SpindleBurst, 4, 1.0, 13.0, 25.0});
  spec.components.push_back({Channel::F4M1, Waveform::KComplex, 9, 1.0, 1.0, 60.0});
  spec.seed = 9;
  return synth::synthesize_epoch(spec, 1);
}

const std::vector<Epoch>& night_epochs() {
  static const std::vector<Epoch> epochs = [] {
    const auto subject = night::synthetic_cohort().front();
    std::vector<Epoch> out;
    for (std::size_t i = 0; i < subject.script.size(); ++i) out.push_back(synth::synthesize_epoch(subject.script[i].spec, i));
    return out;
  }();
  return epochs;
}

void BM_ConditionChannel(benchmark::State& state) {
  const double fs = 256.0;
  Rng rng(1, 0);
  ChannelSignal s{Channel::C4M1, std::vector<double>(static_cast<std::size_t>(state.range(0) * 30 * fs)), fs};
  for (double& v : s.samples) v = rng.uniform(-50.0, 50.0);
  const io::ConditioningConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(io::condition_channel(s, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.SetLabel("epochs of 256 Hz EEG");
}
BENCHMARK(BM_ConditionChannel)->Arg(1)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_Resample256To100(benchmark::State& state) {
  Rng rng(2, 0);
  ChannelSignal s{Channel::O2M1, std::vector<double>(7680 * 120), 256.0};
  for (double& v : s.samples) v = rng.uniform(-50.0, 50.0);
  for (auto _ : state) benchmark::DoNotOptimize(io::resample_signal(s, 100));
  state.SetItemsProcessed(state.iterations() * 120);
}
BENCHMARK(BM_Resample256To100)->Unit(benchmark::kMillisecond);

void BM_EpochDescriptors(benchmark::State& state) {
  const Epoch ep = busy_epoch();
  for (auto _ : state) benchmark::DoNotOptimize(descriptors::epoch_descriptors(ep));
}
BENCHMARK(BM_EpochDescriptors)->Unit(benchmark::kMicrosecond);

void BM_Phase1Serialize(benchmark::State& state) {
  const auto frame = descriptors::epoch_descriptors(busy_epoch());
  for (auto _ : state) benchmark::DoNotOptimize(descriptors::serialize_phase1_target(frame));
}
BENCHMARK(BM_Phase1Serialize)->Unit(benchmark::kMicrosecond);

void BM_RenderEpoch(benchmark::State& state) {
  const Epoch ep = busy_epoch();
  const render::RenderConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(render::render_epoch(ep, cfg));
}
BENCHMARK(BM_RenderEpoch)->Unit(benchmark::kMicrosecond);

void BM_EncodePng(benchmark::State& state) {
  const auto img = render::render_epoch(busy_epoch());
  for (auto _ : state) benchmark::DoNotOptimize(render::encode_png(img));
}
BENCHMARK(BM_EncodePng)->Unit(benchmark::kMicrosecond);

void BM_ExtractFeatures(benchmark::State& state) {
  const Epoch prev = busy_epoch();
  const Epoch cur = busy_epoch();
  for (auto _ : state) benchmark::DoNotOptimize(features::extract_epoch_features(cur, &prev));
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMillisecond);

void BM_StageRecording(benchmark::State& state) {
  const auto feats = features::extract_recording_features(night_epochs());
  for (auto _ : state) benchmark::DoNotOptimize(rules::stage_recording(feats));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(feats.size()));
}
BENCHMARK(BM_StageRecording)->Unit(benchmark::kMicrosecond);

void BM_BootstrapCi(benchmark::State& state) {
  Rng rng(3, 0);
  metrics::LabeledPredictions data;
  for (int s = 0; s < 20; ++s) {
    metrics::SubjectPredictions sp{"s" + std::to_string(s), {}, {}};
    for (int i = 0; i < 900; ++i) {
      const Stage t = kStages[rng.below(5)];
      sp.truth.push_back(t);
      sp.pred.push_back(rng.uniform01() < 0.8 ? t : kStages[rng.below(5)]);
    }
    data.push_back(std::move(sp));
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::cluster_bootstrap_ci(data, 1000, 0.95, 1));
}
BENCHMARK(BM_BootstrapCi)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
