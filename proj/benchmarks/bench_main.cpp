#include <benchmark/benchmark.h>

#include <random>

#include "rehab/features.hpp"
#include "rehab/hybrid.hpp"
#include "rehab/mlp.hpp"
#include "rehab/rules.hpp"
#include "rehab/synth.hpp"

using namespace rehab;

namespace {

synth::SynthSubject subject() {
  synth::SynthSubject s;
  s.id = "B01";
  s.affected_arm = Arm::Right;
  s.seed = 3;
  return s;
}

MotionClip clip(Exercise e = Exercise::E2) {
  synth::DefectSpec d;
  d.compensation.push_back({synth::CompJoint::Shoulder, Axis::Y, 0.3, 30, 70});
  d.compensation.push_back({synth::CompJoint::Shoulder, Axis::X, 0.25, 30, 70});
  return synth::generate_clip(subject(), e, Side::Affected, d, 17);
}

hybrid::ExerciseModels models(Exercise e, bool reference) {
  auto cfg = [&](Component c) { return reference ? ml::reference_config(e, c) : ml::MlpConfig{}; };
  hybrid::ExerciseModels m;
  m.rom = ml::MlpModel::initialize(cfg(Component::Rom), 30);
  m.smoothness = ml::MlpModel::initialize(cfg(Component::Smoothness), 60);
  for (auto& c : m.compensation) c = ml::MlpModel::initialize(cfg(Component::Compensation), 9);
  for (auto g : {rb::RuleGroup::Rom, rb::RuleGroup::Smoothness, rb::RuleGroup::Head, rb::RuleGroup::Spine,
                 rb::RuleGroup::Shoulder}) {
    m.weights[g] = {0.9, 0.8};
  }
  return m;
}

std::vector<ml::Sample> samples(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<ml::Sample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].label = static_cast<int>(i % 2);
    for (std::size_t d = 0; d < dim; ++d) out[i].x.push_back(g(rng) + (out[i].label ? 1.0 : -1.0));
  }
  return out;
}

}  // namespace

static void BM_GenerateClip(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(synth::generate_clip(subject(), Exercise::E1, Side::Affected, {}, ++seed));
}
BENCHMARK(BM_GenerateClip)->Unit(benchmark::kMicrosecond);

static void BM_AnalyzeClip(benchmark::State& state) {
  const auto c = clip();
  for (auto _ : state) benchmark::DoNotOptimize(features::analyze_clip(c));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.size()));
}
BENCHMARK(BM_AnalyzeClip)->Unit(benchmark::kMicrosecond);

static void BM_CompensationFeatures(benchmark::State& state) {
  const auto c = smooth_clip(clip());
  const double ref = features::torso_reference(c.frame(0));
  std::size_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(features::compensation_features(c.frame(t), c.frame(0), ref, Arm::Right));
    t = (t + 1) % c.size();
  }
}
BENCHMARK(BM_CompensationFeatures);

// Smoothing, features, three networks, rules and voting for one frame.
static void BM_FramePush(benchmark::State& state) {
  const bool reference = state.range(0) != 0;
  const auto m = models(Exercise::E2, reference);
  const auto rules = rb::RuleSet::generic();
  const auto c = clip();
  hybrid::FrameAssessor a(m, rules, Exercise::E2, Arm::Right);
  std::size_t t = 0;
  double offset = 0.0;
  for (auto _ : state) {
    auto f = c.frame(t);
    f.t += offset;
    benchmark::DoNotOptimize(a.push(f));
    if (++t == c.size()) {
      state.PauseTiming();
      t = 0;
      offset += c.frame(c.size() - 1).t + 1.0;
      a.reset();
      state.ResumeTiming();
    }
  }
  state.SetLabel(reference ? "reference networks" : "32-unit networks");
}
BENCHMARK(BM_FramePush)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_MlpPredict(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const auto layers = static_cast<std::size_t>(state.range(1));
  const auto m = ml::MlpModel::initialize({std::vector<std::size_t>(layers, width), 0.005, 1}, 9);
  const auto x = samples(1, 9)[0].x;
  for (auto _ : state) benchmark::DoNotOptimize(m.predict_proba(x));
}
BENCHMARK(BM_MlpPredict)->Args({32, 1})->Args({128, 2})->Args({512, 3})->Unit(benchmark::kMicrosecond);

// One Adam step per sample.
static void BM_TrainStep(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const auto data = samples(256, 9);
  const auto m = ml::train({{width}, 0.005, 1}, data);
  for (auto _ : state) benchmark::DoNotOptimize(ml::finetune(m, data));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_VoteStream(benchmark::State& state) {
  std::mt19937_64 rng(9);
  std::vector<int> preds(4096);
  for (auto& p : preds) p = static_cast<int>(rng() % 2);
  for (auto _ : state) benchmark::DoNotOptimize(hybrid::vote_stream(preds, hybrid::kDefaultVotingWindow));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(preds.size()));
}
BENCHMARK(BM_VoteStream)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
