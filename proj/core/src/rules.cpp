#include "rehab/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "rehab/errors.hpp"

namespace rehab::rb {

namespace {

constexpr double kGenericReachTau = 1.0;
constexpr double kGenericZcrTau = 0.20;
constexpr double kGenericDisplacementTau = 0.15;

std::size_t comp_slot(RuleGroup g, Axis a) {
  const std::size_t joint = g == RuleGroup::Head ? 0 : g == RuleGroup::Spine ? 1 : 2;
  return 6 + joint * 3 + static_cast<std::size_t>(a);
}

std::vector<Rule> therapist_rules() {
  std::vector<Rule> rules;
  rules.push_back({"rom-e1", RuleGroup::Rom, Exercise::E1, "max wrist height / max spine-shoulder height",
                   Direction::AtLeast, kGenericReachTau, ThresholdSource::Generic, 0});
  rules.push_back({"rom-e2", RuleGroup::Rom, Exercise::E2, "max wrist height / max shoulder height",
                   Direction::AtLeast, kGenericReachTau, ThresholdSource::Generic, 1});
  rules.push_back({"rom-e3", RuleGroup::Rom, Exercise::E3, "forward wrist reach past hip / knee offset",
                   Direction::AtLeast, kGenericReachTau, ThresholdSource::Generic, 2});
  for (Axis a : kAxes) {
    const std::size_t i = static_cast<std::size_t>(a);
    rules.push_back({std::string("smooth-") + axis_name(a), RuleGroup::Smoothness, std::nullopt,
                     std::string("wrist acceleration zero-crossing ratio ") + axis_name(a), Direction::AtMost,
                     kGenericZcrTau, ThresholdSource::Generic, 3 + i});
  }
  for (RuleGroup g : kCompensationGroups) {
    for (Axis a : kAxes) {
      rules.push_back({std::string(group_name(g)) + "-" + axis_name(a), g, std::nullopt,
                       std::string(group_name(g)) + " displacement " + axis_name(a) + " / torso",
                       Direction::AtMost, kGenericDisplacementTau, ThresholdSource::Generic, comp_slot(g, a)});
    }
  }
  return rules;
}

double population_sigma(std::span<const double> xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

}  // namespace

Component component_of(RuleGroup g) {
  switch (g) {
    case RuleGroup::Rom: return Component::Rom;
    case RuleGroup::Smoothness: return Component::Smoothness;
    default: return Component::Compensation;
  }
}

std::string_view group_name(RuleGroup g) {
  switch (g) {
    case RuleGroup::Rom: return "rom";
    case RuleGroup::Smoothness: return "smoothness";
    case RuleGroup::Head: return "head";
    case RuleGroup::Spine: return "spine";
    case RuleGroup::Shoulder: return "shoulder";
  }
  return "?";
}

RuleInputs empty_inputs() {
  RuleInputs x;
  x.fill(std::numeric_limits<double>::quiet_NaN());
  return x;
}

RuleOutcome evaluate_rule(Direction direction, double threshold, double x) {
  if (!std::isfinite(x)) throw DataError("rule input must be finite");
  if (!std::isfinite(threshold)) throw InvalidThresholdError("rule threshold must be finite");
  if (direction == Direction::AtLeast) {
    if (!(threshold > 0.0)) throw InvalidThresholdError("lower-bound rule needs a positive threshold");
    return {x >= threshold, std::clamp(x / threshold, 0.0, 1.0)};
  }
  if (threshold < 0.0) throw InvalidThresholdError("upper-bound rule needs a non-negative threshold");
  if (x <= threshold) return {true, 1.0};
  return {false, std::min(threshold / std::max(x, kScoreEpsilon), 1.0)};
}

RuleOutcome evaluate_rule(const Rule& rule, double x) { return evaluate_rule(rule.direction, rule.threshold, x); }

RuleSet::RuleSet(std::vector<Rule> rules) : rules_(std::move(rules)) {
  for (const auto& r : rules_) {
    if (r.input >= kRuleCount) throw ConfigurationError("rule " + r.id + " reads an unknown input slot");
    if (!std::isfinite(r.threshold)) throw ConfigurationError("rule " + r.id + " has a non-finite threshold");
  }
}

RuleSet RuleSet::generic() { return RuleSet(therapist_rules()); }

RuleSet RuleSet::personalized(const UserProfile& profile) {
  RuleSet set = generic();
  set.subject_id_ = profile.subject_id;
  for (const auto& [exercise, entries] : profile.rules) {
    for (const auto& [id, tuned] : entries) {
      auto idx = set.find(id);
      if (!idx) throw ConfigurationError("profile references unknown rule " + id);
      if (!std::isfinite(tuned.tau)) throw ConfigurationError("profile threshold for " + id + " is not finite");
      set.tuned_[{exercise, *idx}] = tuned.tau;
    }
  }
  return set;
}

std::optional<std::size_t> RuleSet::find(std::string_view id) const {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rules_[i].id == id) return i;
  }
  return std::nullopt;
}

double RuleSet::threshold(std::size_t i, Exercise exercise) const {
  if (auto it = tuned_.find({exercise, i}); it != tuned_.end()) return it->second;
  return rules_.at(i).threshold;
}

ThresholdSource RuleSet::source(std::size_t i, Exercise exercise) const {
  return tuned_.contains({exercise, i}) ? ThresholdSource::Tuned : rules_.at(i).source;
}

std::vector<std::size_t> RuleSet::applicable(Exercise exercise, RuleGroup group) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rules_[i].applies_to(exercise, group)) out.push_back(i);
  }
  if (out.empty() || out.size() % 2 == 0) {
    throw ConfigurationError("rule subset for " + std::string(exercise_name(exercise)) + "/" +
                             std::string(group_name(group)) + " has " + std::to_string(out.size()) +
                             " rules; majority voting needs an odd, non-zero count");
  }
  return out;
}

RuleInputs clip_rule_inputs(const features::ClipAnalysis& clip) {
  RuleInputs x = empty_inputs();
  x[static_cast<std::size_t>(clip.smoothed.exercise())] = clip.reach;
  for (std::size_t a = 0; a < 3; ++a) x[3 + a] = clip.wrist_zcr[a];
  for (std::size_t c = 0; c < features::kCompensationDim; ++c) {
    double worst = 0.0;
    for (std::size_t t = 0; t < clip.compensation.rows; ++t) worst = std::max(worst, std::abs(clip.compensation.at(t, c)));
    x[6 + c] = worst;
  }
  return x;
}

RuleInputs frame_rule_inputs(const features::FrameCompFeatures& comp) {
  RuleInputs x = empty_inputs();
  for (std::size_t c = 0; c < features::kCompensationDim; ++c) x[6 + c] = std::abs(comp[c]);
  return x;
}

int rb_predict(const RuleSet& rules, Exercise exercise, RuleGroup group, const RuleInputs& x) {
  const auto idx = rules.applicable(exercise, group);
  std::size_t passed = 0;
  for (std::size_t i : idx) {
    const auto& r = rules.rule(i);
    passed += evaluate_rule(r.direction, rules.threshold(i, exercise), x[r.input]).pass ? 1 : 0;
  }
  return 2 * passed > idx.size() ? 1 : 0;
}

double rb_score(const RuleSet& rules, Exercise exercise, RuleGroup group, const RuleInputs& x) {
  const auto idx = rules.applicable(exercise, group);
  double sum = 0.0;
  for (std::size_t i : idx) {
    const auto& r = rules.rule(i);
    sum += evaluate_rule(r.direction, rules.threshold(i, exercise), x[r.input]).score;
  }
  return sum / static_cast<double>(idx.size());
}

std::vector<Violation> violated_rules(const RuleSet& rules, Exercise exercise, RuleGroup group,
                                      const RuleInputs& x) {
  std::vector<Violation> out;
  for (std::size_t i : rules.applicable(exercise, group)) {
    const auto& r = rules.rule(i);
    const double tau = rules.threshold(i, exercise);
    const double value = x[r.input];
    if (evaluate_rule(r.direction, tau, value).pass) continue;
    out.push_back({r.id, r.direction, value, tau, std::abs(value - tau) / std::max(std::abs(tau), kScoreEpsilon)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Violation& a, const Violation& b) { return a.magnitude > b.magnitude; });
  return out;
}

KPolicy KPolicy::fixed(double k) {
  if (k != 2.0 && k != 3.0) throw ConfigurationError("sigma multiplier must be 2 or 3");
  return KPolicy{k};
}

double KPolicy::k_for(Exercise e, Component c) const {
  if (uniform) return *uniform;
  const bool loose = (e == Exercise::E1 || e == Exercise::E2) && (c == Component::Rom || c == Component::Smoothness);
  return loose ? 2.0 : 3.0;
}

std::string KPolicy::name() const { return uniform ? std::to_string(static_cast<int>(*uniform)) : "per-component"; }

UserProfile tune_thresholds(const std::string& subject_id, std::span<const TuningSample> samples,
                            KPolicy policy) {
  if (samples.size() < 2) throw InsufficientDataError("tuning needs at least two unaffected clips");
  for (const auto& s : samples) {
    if (s.side != Side::Unaffected) throw SideMismatchError("tuning accepts unaffected-side clips only");
  }
  const RuleSet generic = RuleSet::generic();
  UserProfile profile{subject_id, policy.name(), {}};
  for (Exercise e : kExercises) {
    std::vector<const TuningSample*> mine;
    for (const auto& s : samples) {
      if (s.exercise == e) mine.push_back(&s);
    }
    if (mine.empty()) continue;
    if (mine.size() < 2) {
      throw InsufficientDataError("tuning " + std::string(exercise_name(e)) + " needs at least two clips");
    }
    for (const auto& rule : generic.rules()) {
      if (rule.scope && *rule.scope != e) continue;
      std::vector<double> xs;
      xs.reserve(mine.size());
      for (const auto* s : mine) {
        const double v = s->inputs[rule.input];
        if (!std::isfinite(v)) throw DataError("non-finite tuning value for rule " + rule.id);
        xs.push_back(v);
      }
      double mean = 0.0;
      for (double v : xs) mean += v;
      mean /= static_cast<double>(xs.size());
      const double sigma = population_sigma(xs, mean);
      const double k = policy.k_for(e, component_of(rule.group));
      const double tau = rule.direction == Direction::AtMost ? mean + k * sigma : mean - k * sigma;
      profile.rules[e][rule.id] = TunedRule{mean, sigma, tau, k, xs.size()};
    }
  }
  return profile;
}

UserProfile tune_thresholds(const std::string& subject_id, std::span<const MotionClip> unaffected,
                            KPolicy policy) {
  if (unaffected.size() < 2) throw InsufficientDataError("tuning needs at least two unaffected clips");
  std::vector<TuningSample> samples;
  samples.reserve(unaffected.size());
  for (const auto& clip : unaffected) {
    if (clip.side() != Side::Unaffected) throw SideMismatchError("tuning accepts unaffected-side clips only");
    samples.push_back({clip.exercise(), clip.side(), clip_rule_inputs(features::analyze_clip(clip))});
  }
  return tune_thresholds(subject_id, samples, policy);
}

nlohmann::json profile_to_json(const UserProfile& p) {
  nlohmann::json rules = nlohmann::json::object();
  for (const auto& [exercise, entries] : p.rules) {
    for (const auto& [id, r] : entries) {
      rules[std::string(exercise_name(exercise)) + "/" + id] = {
          {"mu", r.mu}, {"sigma", r.sigma}, {"tau", r.tau}, {"k", r.k}, {"n", r.n}};
    }
  }
  return {{"subject_id", p.subject_id}, {"k", p.k_policy}, {"rules", std::move(rules)}};
}

UserProfile profile_from_json(const nlohmann::json& j) {
  try {
    UserProfile p;
    p.subject_id = j.at("subject_id").get<std::string>();
    p.k_policy = j.at("k").get<std::string>();
    for (const auto& [key, r] : j.at("rules").items()) {
      const auto slash = key.find('/');
      if (slash == std::string::npos) throw ParseError("profile rule key '" + key + "' lacks exercise prefix");
      TunedRule t{r.at("mu").get<double>(), r.at("sigma").get<double>(), r.at("tau").get<double>(),
                  r.at("k").get<double>(), r.at("n").get<std::size_t>()};
      if (!std::isfinite(t.tau) || t.sigma < 0.0) throw ParseError("profile rule '" + key + "' is invalid");
      p.rules[parse_exercise(key.substr(0, slash))][key.substr(slash + 1)] = t;
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed profile: ") + e.what());
  }
}

}  // namespace rehab::rb
