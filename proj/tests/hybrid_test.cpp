#include <gtest/gtest.h>

#include <algorithm>

#include "rehab/errors.hpp"
#include "rehab/hybrid.hpp"
#include "rehab/random.hpp"
#include "rehab/synth.hpp"
#include "support.hpp"

using namespace rehab;
using namespace rehab::hybrid;

TEST(HybridScore, Examples) {
  EXPECT_NEAR(hybrid_score(0.9, 0.5, {0.8, 0.6}), (0.8 / 1.4) * 0.9 + (0.6 / 1.4) * 0.5, 1e-15);
  EXPECT_NEAR(hybrid_score(0.9, 0.5, {0.8, 0.6}), 0.7285714285714285, 1e-12);
  EXPECT_DOUBLE_EQ(hybrid_score(0.37, 0.37, {0.1, 0.9}), 0.37);
  EXPECT_DOUBLE_EQ(hybrid_score(0.9, 0.1, {0.7, 0.0}), 0.9);
  EXPECT_THROW(hybrid_score(0.5, 0.5, {0.0, 0.0}), InvalidWeightsError);
  EXPECT_THROW(hybrid_score(0.5, 0.5, {-0.1, 0.5}), InvalidWeightsError);
}

TEST(HybridScore, ConvexAndScaleInvariant) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    const ModelWeights w{rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0)};
    const double p = hybrid_score(a, b, w);
    EXPECT_GE(p, std::min(a, b) - 1e-15);
    EXPECT_LE(p, std::max(a, b) + 1e-15);
    const double s = rng.uniform(0.05, 1.0);
    EXPECT_NEAR(p, hybrid_score(a, b, {w.rho_ml * s, w.rho_rb * s}), 1e-12);
    // Same side of the cut for both models keeps the label.
    if (decide(a) == decide(b)) {
      EXPECT_EQ(decide(p), decide(a));
    }
  }
}

TEST(ModelWeightsTest, FromPredictions) {
  const std::vector<int> truth{1, 1, 0, 0, 1};
  auto w = compute_model_weights(truth, truth, truth);
  EXPECT_EQ(w.rho_ml, 1.0);
  EXPECT_EQ(w.rho_rb, 1.0);
  const std::vector<int> none{0, 0, 0, 0, 0};
  w = compute_model_weights(truth, none, truth);
  EXPECT_EQ(w.rho_rb, 0.0);
  const std::vector<int> empty;
  EXPECT_THROW(compute_model_weights(empty, empty, empty), InsufficientDataError);

  const ModelWeights f{0.8, 0.6};
  EXPECT_NEAR(f.rho_ml / (f.rho_ml + f.rho_rb), 4.0 / 7.0, 1e-15);
  EXPECT_NEAR(hybrid_score(1.0, 0.0, f), 4.0 / 7.0, 1e-15);
  EXPECT_NEAR(hybrid_score(0.0, 1.0, f), 3.0 / 7.0, 1e-15);
}

TEST(Voting, Examples) {
  EXPECT_EQ(vote_stream(std::vector<int>{1, 0, 1}, 3).back(), 1);
  EXPECT_EQ(vote_stream(std::vector<int>{0, 1}, 2).back(), 1);
  EXPECT_EQ(vote_stream(std::vector<int>{1, 0}, 2).back(), 0);
  EXPECT_EQ(vote_stream(std::vector<int>(50, 1), 29), std::vector<int>(50, 1));
  EXPECT_THROW(VotingBuffer(0), ConfigurationError);
  EXPECT_THROW(VotingBuffer(31), ConfigurationError);
}

TEST(Voting, PrefixBeforeWarmUp) {
  VotingBuffer b(5);
  EXPECT_EQ(b.push(0), 0);
  EXPECT_EQ(b.push(1), 1);  // tie
  EXPECT_EQ(b.push(1), 1);
  EXPECT_EQ(b.size(), 3u);
  for (int i = 0; i < 10; ++i) b.push(0);
  EXPECT_EQ(b.size(), 5u);
}

TEST(Voting, Properties) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> s(60);
    for (auto& v : s) v = rng.bernoulli(0.4) ? 1 : 0;
    EXPECT_EQ(vote_stream(s, 1), s);
    const int w = 1 + static_cast<int>(rng.index(30));
    const auto voted = vote_stream(s, w);
    // Brute-force oracle over the trailing window.
    for (std::size_t t = 0; t < s.size(); ++t) {
      const std::size_t lo = t + 1 >= static_cast<std::size_t>(w) ? t + 1 - static_cast<std::size_t>(w) : 0;
      int ones = 0;
      for (std::size_t k = lo; k <= t; ++k) ones += s[k];
      const int zeros = static_cast<int>(t - lo + 1) - ones;
      const int expected = ones == zeros ? s[t] : (ones > zeros ? 1 : 0);
      ASSERT_EQ(voted[t], expected) << "w=" << w << " t=" << t;
    }
  }
}

TEST(Voting, FlipNoiseImprovesWithWindow) {
  Rng rng(77);
  double correct1 = 0;
  double correct29 = 0;
  const int n = 3000;
  std::vector<int> s(n);
  for (auto& v : s) v = rng.bernoulli(0.2) ? 0 : 1;
  const auto a = vote_stream(s, 1);
  const auto b = vote_stream(s, 29);
  for (int i = 0; i < n; ++i) {
    correct1 += a[i];
    correct29 += b[i];
  }
  EXPECT_GT(correct29, correct1);
}

TEST(Bundle, SaveLoadRoundTrip) {
  const auto& bundle = rehab::testing::small_bundle();
  const auto dir = rehab::testing::temp_dir("bundle");
  save_bundle(bundle, dir);
  const auto back = load_bundle(dir);
  ASSERT_EQ(back.exercises.size(), 3u);
  for (const auto& [e, m] : bundle.exercises) {
    const auto& b = back.at(e);
    EXPECT_TRUE(b.rom == m.rom);
    EXPECT_TRUE(b.smoothness == m.smoothness);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_TRUE(b.compensation[j] == m.compensation[j]);
    for (const auto& [g, w] : m.weights) {
      EXPECT_EQ(b.weight(g).rho_ml, w.rho_ml);
      EXPECT_EQ(b.weight(g).rho_rb, w.rho_rb);
    }
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_bundle(dir), IoError);
}

class AssessMotion : public ::testing::Test {
 protected:
  const ModelBundle& bundle = rehab::testing::small_bundle();
  const rb::RuleSet rules = rb::RuleSet::generic();
  synth::SynthSubject subject = rehab::testing::test_subject(5);
};

TEST_F(AssessMotion, DefectFreeClip) {
  for (Exercise e : kExercises) {
    const auto clip = synth::generate_clip(subject, e, Side::Affected, {}, 300);
    const auto r = assess_motion(clip, bundle.at(e), rules);
    EXPECT_EQ(r.clip.rom.label, 1) << exercise_name(e);
    EXPECT_EQ(r.clip.smoothness.label, 1) << exercise_name(e);
    std::size_t flagged = 0;
    for (const auto& f : r.frames) flagged += f.compensated() ? 1 : 0;
    EXPECT_EQ(flagged, 0u) << exercise_name(e);
    EXPECT_EQ(r.frames.size(), clip.size());
  }
}

TEST_F(AssessMotion, CompensationInterval) {
  const auto& clip = rehab::testing::single_episode_clip(Exercise::E2);
  const auto ep = rehab::testing::episodes(clip)[0];
  const std::array<std::string, 3> prefix{"head-", "spine-", "shoulder-"};
  for (int window : {1, 9, 29}) {
    const auto slack = static_cast<std::size_t>(window);
    const auto r = assess_motion(clip, bundle.at(Exercise::E2), rules, window);
    std::vector<std::size_t> hits;
    for (const auto& f : r.frames) {
      if (f.joints[ep.joint].label == 0) hits.push_back(f.index);
    }
    ASSERT_FALSE(hits.empty()) << window;
    const auto first = hits.front();
    const auto last = hits.back();
    EXPECT_LE(first, ep.last);
    EXPECT_GE(last, ep.first);
    EXPECT_GE(first + slack, ep.first) << window;
    EXPECT_LE(first, ep.first + slack) << window;
    EXPECT_LE(last, ep.last + slack) << window;
    EXPECT_GE(last + slack, ep.last) << window;
    // Violated rules of the compensating joint are attached on flagged frames.
    const auto& v = r.frames[hits[hits.size() / 2]].joints[ep.joint];
    ASSERT_FALSE(v.violated.empty());
    EXPECT_EQ(v.violated.front().rule_id.rfind(prefix[ep.joint], 0), 0u) << v.violated.front().rule_id;
  }
}

TEST_F(AssessMotion, IncompleteReach) {
  synth::DefectSpec d;
  d.rom_deficit = 0.5;
  const auto clip = synth::generate_clip(subject, Exercise::E1, Side::Affected, d, 302);
  ASSERT_EQ(clip.labels()->rom, 0);
  const auto r = assess_motion(clip, bundle.at(Exercise::E1), rules);
  EXPECT_EQ(r.clip.rom.label, 0);
  EXPECT_EQ(r.clip.rom.rb_label, 0);
  ASSERT_EQ(r.clip.rom.violated.size(), 1u);
  EXPECT_EQ(r.clip.rom.violated[0].rule_id, "rom-e1");
}

TEST_F(AssessMotion, StreamingMatchesBatch) {
  const auto clip = synth::generate_clip(subject, Exercise::E3, Side::Affected, {}, 303);
  const auto batch = assess_motion(clip, bundle.at(Exercise::E3), rules, 7);
  FrameAssessor a(bundle.at(Exercise::E3), rules, Exercise::E3, clip.arm(), 7);
  for (std::size_t i = 0; i < clip.size(); ++i) {
    const auto f = a.push(clip.frame(i));
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(f.joints[j].score, batch.frames[i].joints[j].score);
      EXPECT_EQ(f.joints[j].label, batch.frames[i].joints[j].label);
    }
  }
  EXPECT_EQ(a.finish().rom.score, batch.clip.rom.score);
  auto bad = clip.frame(0);
  EXPECT_THROW(a.push(bad), ValidationError);
}

TEST_F(AssessMotion, HybridVerdictFusesComponentScores) {
  const auto clip = synth::generate_clip(subject, Exercise::E2, Side::Affected, {}, 304);
  const auto r = assess_motion(clip, bundle.at(Exercise::E2), rules);
  const auto& v = r.clip.smoothness;
  EXPECT_EQ(v.source, Source::HM);
  EXPECT_DOUBLE_EQ(v.score, hybrid_score(v.ml_score, v.rb_score, bundle.at(Exercise::E2).weight(rb::RuleGroup::Smoothness)));
}
