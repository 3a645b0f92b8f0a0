#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "rehab/errors.hpp"
#include "rehab/random.hpp"
#include "rehab/rules.hpp"
#include "rehab/synth.hpp"
#include "support.hpp"

using namespace rehab;
using namespace rehab::rb;

namespace {

RuleInputs filled(double v) {
  RuleInputs x;
  x.fill(v);
  return x;
}

std::size_t slot(const RuleSet& rs, std::string_view id) { return rs.rule(*rs.find(id)).input; }

}  // namespace

TEST(RuleSet, FifteenRulesWithOddSubsets) {
  const auto rs = RuleSet::generic();
  EXPECT_EQ(rs.rules().size(), 15u);
  for (Exercise e : kExercises) {
    EXPECT_EQ(rs.applicable(e, RuleGroup::Rom).size(), 1u);
    EXPECT_EQ(rs.applicable(e, RuleGroup::Smoothness).size(), 3u);
    for (auto g : kCompensationGroups) EXPECT_EQ(rs.applicable(e, g).size(), 3u);
  }
  EXPECT_TRUE(rs.find("shoulder-y"));
  EXPECT_FALSE(rs.find("elbow-x"));
}

TEST(RuleSet, EvenSubsetIsConfigurationError) {
  std::vector<Rule> rules{{"a", RuleGroup::Head, std::nullopt, "", Direction::AtMost, 0.1, ThresholdSource::Generic, 6},
                          {"b", RuleGroup::Head, std::nullopt, "", Direction::AtMost, 0.1, ThresholdSource::Generic, 7}};
  const RuleSet rs(rules);
  EXPECT_THROW(rs.applicable(Exercise::E1, RuleGroup::Head), ConfigurationError);
  EXPECT_THROW(rb_predict(rs, Exercise::E1, RuleGroup::Head, filled(0.0)), ConfigurationError);
}

TEST(EvaluateRule, Examples) {
  auto r = evaluate_rule(Direction::AtLeast, 1.0, 2.0);
  EXPECT_TRUE(r.pass);
  EXPECT_DOUBLE_EQ(r.score, 1.0);
  r = evaluate_rule(Direction::AtLeast, 1.0, 0.5);
  EXPECT_FALSE(r.pass);
  EXPECT_DOUBLE_EQ(r.score, 0.5);
  r = evaluate_rule(Direction::AtMost, 0.15, 0.10);
  EXPECT_TRUE(r.pass);
  EXPECT_DOUBLE_EQ(r.score, 1.0);
  r = evaluate_rule(Direction::AtMost, 0.15, 0.30);
  EXPECT_FALSE(r.pass);
  EXPECT_DOUBLE_EQ(r.score, 0.5);
  EXPECT_THROW(evaluate_rule(Direction::AtLeast, 0.0, 1.0), InvalidThresholdError);
  EXPECT_THROW(evaluate_rule(Direction::AtLeast, -1.0, 1.0), InvalidThresholdError);
}

TEST(EvaluateRule, ScoreInUnitIntervalAndPassImpliesOne) {
  Rng rng(12);
  for (int i = 0; i < 2000; ++i) {
    const auto dir = rng.bernoulli(0.5) ? Direction::AtLeast : Direction::AtMost;
    const double tau = rng.uniform(0.01, 2.0);
    const double x = rng.uniform(-1.0, 3.0);
    const auto r = evaluate_rule(dir, tau, x);
    EXPECT_GE(r.score, 0.0);
    EXPECT_LE(r.score, 1.0);
    if (r.pass) {
      EXPECT_EQ(r.score, 1.0);
    }
  }
}

TEST(RbPredict, E1RomExample) {
  // Wrist peaks at 1.40 m and spine-shoulder at 1.35 m above the floor; the
  // base of the spine sits at 0.85 m.
  const auto rs = RuleSet::generic();
  RuleInputs x = empty_inputs();
  x[0] = (1.40 - 0.85) / (1.35 - 0.85);
  EXPECT_EQ(rb_predict(rs, Exercise::E1, RuleGroup::Rom, x), 1);
  x[0] = (1.30 - 0.85) / (1.35 - 0.85);
  EXPECT_EQ(rb_predict(rs, Exercise::E1, RuleGroup::Rom, x), 0);
}

TEST(RbPredict, SmoothnessMajority) {
  const auto rs = RuleSet::generic();
  RuleInputs x = empty_inputs();
  x[3] = 0.1;
  x[4] = 0.3;
  x[5] = 0.4;
  EXPECT_EQ(rb_predict(rs, Exercise::E2, RuleGroup::Smoothness, x), 0);
  x[4] = 0.1;
  EXPECT_EQ(rb_predict(rs, Exercise::E2, RuleGroup::Smoothness, x), 1);
  EXPECT_EQ(rb_predict(rs, Exercise::E3, RuleGroup::Head, filled(0.05)), 1);
}

TEST(RbScore, Examples) {
  // Custom three-rule set gives direct control over per-rule scores.
  std::vector<Rule> rules;
  for (std::size_t i = 0; i < 3; ++i) {
    rules.push_back({"r" + std::to_string(i), RuleGroup::Spine, std::nullopt, "", Direction::AtLeast, 1.0,
                     ThresholdSource::Generic, 9 + i});
  }
  const RuleSet rs(rules);
  RuleInputs x = empty_inputs();
  x[9] = 0.2;
  x[10] = 0.4;
  x[11] = 0.6;
  EXPECT_NEAR(rb_score(rs, Exercise::E1, RuleGroup::Spine, x), 0.4, 1e-12);
  x[9] = x[10] = x[11] = 3.0;
  EXPECT_DOUBLE_EQ(rb_score(rs, Exercise::E1, RuleGroup::Spine, x), 1.0);

  // Head rules at 0.15: scores 1, 1, 0.5 -> mean 5/6.
  const auto g = RuleSet::generic();
  RuleInputs h = filled(0.0);
  h[slot(g, "head-z")] = 0.30;
  EXPECT_NEAR(rb_score(g, Exercise::E1, RuleGroup::Head, h), 2.5 / 3.0, 1e-12);
}

TEST(RbScore, TwoRuleMeanFromPerRuleScores) {
  const double s = (evaluate_rule(Direction::AtLeast, 1.0, 0.5).score + evaluate_rule(Direction::AtLeast, 1.0, 1.2).score) / 2.0;
  EXPECT_DOUBLE_EQ(s, 0.75);
}

TEST(Tuning, HandComputedExample) {
  std::vector<TuningSample> samples;
  for (double v : {0.10, 0.12, 0.14}) {
    RuleInputs x = filled(0.1);
    x[0] = 1.0 + v;
    x[3] = v;
    samples.push_back({Exercise::E1, Side::Unaffected, x});
  }
  const auto p = tune_thresholds("S1", samples, KPolicy::fixed(2));
  const auto& t = p.rules.at(Exercise::E1).at("smooth-x");
  EXPECT_NEAR(t.mu, 0.12, 1e-12);
  EXPECT_NEAR(t.sigma, 0.016330, 1e-6);
  EXPECT_NEAR(t.tau, 0.152660, 1e-6);
  EXPECT_EQ(t.n, 3u);
  // Lower-bound rules subtract.
  const auto& rom = p.rules.at(Exercise::E1).at("rom-e1");
  EXPECT_NEAR(rom.tau, 1.12 - 2.0 * 0.016330, 1e-6);
  EXPECT_FALSE(p.rules.at(Exercise::E1).contains("rom-e2"));
}

TEST(Tuning, DegenerateAndErrors) {
  std::vector<TuningSample> samples(2, {Exercise::E2, Side::Unaffected, filled(0.2)});
  const auto p = tune_thresholds("S", samples);
  EXPECT_EQ(p.rules.at(Exercise::E2).at("head-x").sigma, 0.0);
  EXPECT_EQ(p.rules.at(Exercise::E2).at("head-x").tau, 0.2);

  std::vector<TuningSample> one(1, {Exercise::E2, Side::Unaffected, filled(0.2)});
  EXPECT_THROW(tune_thresholds("S", one), InsufficientDataError);
  samples[1].side = Side::Affected;
  EXPECT_THROW(tune_thresholds("S", samples), SideMismatchError);
  const auto clips = std::vector<MotionClip>{rehab::testing::still_clip(), rehab::testing::still_clip()};
  EXPECT_THROW(tune_thresholds("S", std::span<const MotionClip>(clips)), SideMismatchError);
}

TEST(Tuning, PerComponentKPolicy) {
  const auto k = KPolicy::per_component();
  EXPECT_EQ(k.k_for(Exercise::E1, Component::Rom), 2.0);
  EXPECT_EQ(k.k_for(Exercise::E2, Component::Smoothness), 2.0);
  EXPECT_EQ(k.k_for(Exercise::E1, Component::Compensation), 3.0);
  EXPECT_EQ(k.k_for(Exercise::E3, Component::Rom), 3.0);
  EXPECT_THROW(KPolicy::fixed(2.5), ConfigurationError);
}

TEST(Tuning, LargerKNeverTightensUpperBounds) {
  Rng rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TuningSample> samples;
    const std::size_t n = 2 + rng.index(8);
    for (std::size_t i = 0; i < n; ++i) {
      RuleInputs x;
      for (auto& v : x) v = rng.uniform(0.0, 0.3);
      x[2] = rng.uniform(0.8, 1.2);
      samples.push_back({Exercise::E3, Side::Unaffected, x});
    }
    const auto p2 = tune_thresholds("S", samples, KPolicy::fixed(2));
    const auto p3 = tune_thresholds("S", samples, KPolicy::fixed(3));
    const auto rs2 = RuleSet::personalized(p2);
    const auto rs3 = RuleSet::personalized(p3);
    for (std::size_t i = 0; i < rs2.rules().size(); ++i) {
      const auto& r = rs2.rule(i);
      if (r.scope && *r.scope != Exercise::E3) continue;
      if (r.direction == Direction::AtMost) {
        EXPECT_GE(rs3.threshold(i, Exercise::E3), rs2.threshold(i, Exercise::E3));
      } else {
        EXPECT_LE(rs3.threshold(i, Exercise::E3), rs2.threshold(i, Exercise::E3));
      }
    }
  }
}

TEST(Tuning, ThresholdsScaleWithInputs) {
  // tau is equivariant under rescaling of the measured values.
  Rng rng(45);
  std::vector<TuningSample> a;
  std::vector<TuningSample> b;
  const double s = 1.7;
  for (int i = 0; i < 6; ++i) {
    RuleInputs x;
    for (auto& v : x) v = rng.uniform(0.05, 0.3);
    RuleInputs y = x;
    for (auto& v : y) v *= s;
    a.push_back({Exercise::E1, Side::Unaffected, x});
    b.push_back({Exercise::E1, Side::Unaffected, y});
  }
  const auto pa = tune_thresholds("S", a);
  const auto pb = tune_thresholds("S", b);
  for (const auto& [id, t] : pa.rules.at(Exercise::E1)) {
    EXPECT_NEAR(t.tau * s, pb.rules.at(Exercise::E1).at(id).tau, 1e-12) << id;
  }
}

TEST(Tuning, PersonalizedOverridesOnlyTunedExercise) {
  std::vector<TuningSample> samples(3, {Exercise::E2, Side::Unaffected, filled(0.3)});
  samples[0].inputs[slot(RuleSet::generic(), "head-z")] = 0.4;
  const auto rs = RuleSet::personalized(tune_thresholds("S", samples));
  const auto i = *rs.find("head-z");
  EXPECT_EQ(rs.source(i, Exercise::E2), ThresholdSource::Tuned);
  EXPECT_EQ(rs.source(i, Exercise::E1), ThresholdSource::Generic);
  EXPECT_EQ(rs.threshold(i, Exercise::E1), 0.15);
  EXPECT_GT(rs.threshold(i, Exercise::E2), 0.3);
}

TEST(Tuning, ShiftedBaselineFixture) {
  // A subject who habitually leans the head forward is flagged by generic
  // thresholds on clean unaffected motions; thresholds tuned on other clean
  // motions of the same subject accept them.
  auto subject = rehab::testing::test_subject(31);
  subject.baseline_shift[0] = {0.0, -0.3, -0.3};
  std::vector<MotionClip> train;
  for (std::uint64_t s = 0; s < 6; ++s) {
    train.push_back(synth::generate_clip(subject, Exercise::E2, Side::Unaffected, {}, 100 + s));
  }
  const auto tuned = RuleSet::personalized(tune_thresholds(subject.id, std::span<const MotionClip>(train)));
  const auto generic = RuleSet::generic();
  int generic_flags = 0;
  int tuned_flags = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto clip = synth::generate_clip(subject, Exercise::E2, Side::Unaffected, {}, 200 + s);
    const auto x = clip_rule_inputs(features::analyze_clip(clip));
    generic_flags += 1 - rb_predict(generic, Exercise::E2, RuleGroup::Head, x);
    tuned_flags += 1 - rb_predict(tuned, Exercise::E2, RuleGroup::Head, x);
  }
  EXPECT_EQ(generic_flags, 5);
  EXPECT_EQ(tuned_flags, 0);
}

TEST(Violations, OrderingAndEmpty) {
  const auto rs = RuleSet::generic();
  RuleInputs x = filled(0.0);
  EXPECT_TRUE(violated_rules(rs, Exercise::E1, RuleGroup::Head, x).empty());
  x[slot(rs, "head-z")] = 0.20;
  auto v = violated_rules(rs, Exercise::E1, RuleGroup::Head, x);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rule_id, "head-z");
  EXPECT_NEAR(v[0].magnitude, 1.0 / 3.0, 1e-12);

  RuleInputs y = filled(0.0);
  y[slot(rs, "head-z")] = 0.20;
  y[slot(rs, "head-x")] = 0.40;
  v = violated_rules(rs, Exercise::E1, RuleGroup::Head, y);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].rule_id, "head-x");
  EXPECT_EQ(v[1].rule_id, "head-z");
}

TEST(Profile, JsonRoundTrip) {
  std::vector<TuningSample> samples;
  Rng rng(3);
  for (Exercise e : kExercises) {
    for (int i = 0; i < 4; ++i) {
      RuleInputs x;
      for (auto& v : x) v = rng.uniform(0.1, 1.2);
      samples.push_back({e, Side::Unaffected, x});
    }
  }
  const auto p = tune_thresholds("S9", samples);
  const auto back = profile_from_json(nlohmann::json::parse(profile_to_json(p).dump()));
  EXPECT_EQ(back.subject_id, "S9");
  EXPECT_EQ(back.k_policy, "per-component");
  ASSERT_EQ(back.rules.size(), 3u);
  for (const auto& [e, rules] : p.rules) {
    for (const auto& [id, t] : rules) {
      const auto& b = back.rules.at(e).at(id);
      EXPECT_EQ(b.tau, t.tau);
      EXPECT_EQ(b.sigma, t.sigma);
      EXPECT_EQ(b.k, t.k);
      EXPECT_EQ(b.n, t.n);
    }
  }
  EXPECT_THROW(profile_from_json(nlohmann::json::parse(R"({"subject_id":"x","rules":{"head-x":{}}})")), ParseError);
}
