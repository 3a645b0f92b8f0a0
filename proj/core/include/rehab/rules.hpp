#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rehab/features.hpp"
#include "rehab/motion.hpp"

namespace rehab::rb {

/// Unit of rule-based prediction. Compensation is judged per joint.
enum class RuleGroup : std::uint8_t { Rom, Smoothness, Head, Spine, Shoulder };
inline constexpr std::array<RuleGroup, 3> kCompensationGroups{RuleGroup::Head, RuleGroup::Spine,
                                                              RuleGroup::Shoulder};
Component component_of(RuleGroup g);
std::string_view group_name(RuleGroup g);

enum class Direction : std::uint8_t { AtLeast, AtMost };
enum class ThresholdSource : std::uint8_t { Generic, Tuned };

inline constexpr std::size_t kRuleCount = 15;

/// Per-rule input values x_r, indexed by Rule::input. NaN where not measured.
using RuleInputs = std::array<double, kRuleCount>;
RuleInputs empty_inputs();

struct Rule {
  std::string id;
  RuleGroup group = RuleGroup::Rom;
  std::optional<Exercise> scope;  // nullopt: every exercise
  std::string feature;
  Direction direction = Direction::AtLeast;
  double threshold = 0.0;
  ThresholdSource source = ThresholdSource::Generic;
  std::size_t input = 0;

  bool applies_to(Exercise e, RuleGroup g) const { return group == g && (!scope || *scope == e); }
};

struct RuleOutcome {
  bool pass = false;
  double score = 0.0;
};

inline constexpr double kScoreEpsilon = 1e-9;

/// Pass test plus the per-rule score of being correct: min(x/tau, 1) for
/// lower-bound rules, and the mirrored min(tau/x, 1) for upper-bound rules
/// (1 whenever the rule passes).
RuleOutcome evaluate_rule(const Rule& rule, double x);
RuleOutcome evaluate_rule(Direction direction, double threshold, double x);

struct TunedRule {
  double mu = 0.0;
  double sigma = 0.0;
  double tau = 0.0;
  double k = 3.0;
  std::size_t n = 0;
};

/// Per-user thresholds from Gaussian MLE over unaffected-side motions, keyed
/// by exercise then rule id.
struct UserProfile {
  std::string subject_id;
  std::string k_policy;  // "per-component", "2" or "3"
  std::map<Exercise, std::map<std::string, TunedRule>> rules;
};

nlohmann::json profile_to_json(const UserProfile& p);
UserProfile profile_from_json(const nlohmann::json& j);

class RuleSet {
 public:
  explicit RuleSet(std::vector<Rule> rules);

  /// The fifteen therapist rules with generic thresholds.
  static RuleSet generic();
  /// Generic rules with the profile's tuned thresholds layered on top.
  static RuleSet personalized(const UserProfile& profile);

  std::span<const Rule> rules() const noexcept { return rules_; }
  const Rule& rule(std::size_t i) const { return rules_.at(i); }
  std::optional<std::size_t> find(std::string_view id) const;

  /// Threshold of rule i when assessing `exercise`.
  double threshold(std::size_t i, Exercise exercise) const;
  ThresholdSource source(std::size_t i, Exercise exercise) const;

  /// Indices of rules applying to (exercise, group). Throws ConfigurationError
  /// when the subset is empty or has even size (majority needs no tie-break).
  std::vector<std::size_t> applicable(Exercise exercise, RuleGroup group) const;

  const std::string& subject_id() const noexcept { return subject_id_; }

 private:
  std::vector<Rule> rules_;
  std::map<std::pair<Exercise, std::size_t>, double> tuned_;
  std::string subject_id_;
};

/// x_r values for clip-level rules: reach ratio, wrist zero-crossing ratios,
/// and the largest absolute compensation displacement per joint axis.
RuleInputs clip_rule_inputs(const features::ClipAnalysis& clip);

/// x_r values for frame-level compensation rules (absolute displacement).
RuleInputs frame_rule_inputs(const features::FrameCompFeatures& comp);

/// 1 iff strictly more than half of the applicable rules pass.
int rb_predict(const RuleSet& rules, Exercise exercise, RuleGroup group, const RuleInputs& x);

/// Mean per-rule score over the applicable rules.
double rb_score(const RuleSet& rules, Exercise exercise, RuleGroup group, const RuleInputs& x);

struct Violation {
  std::string rule_id;
  Direction direction = Direction::AtMost;  // AtMost: value was above tau
  double value = 0.0;
  double threshold = 0.0;
  double magnitude = 0.0;  // |x - tau| / tau
};

/// Failing applicable rules, largest normalized excess first.
std::vector<Violation> violated_rules(const RuleSet& rules, Exercise exercise, RuleGroup group,
                                      const RuleInputs& x);

/// Sigma multiplier per (exercise, component).
struct KPolicy {
  std::optional<double> uniform;

  /// 2 sigma for ROM and Smoothness of E1 and E2, 3 sigma elsewhere.
  static KPolicy per_component() { return {}; }
  static KPolicy fixed(double k);

  double k_for(Exercise e, Component c) const;
  std::string name() const;
};

struct TuningSample {
  Exercise exercise;
  Side side;
  RuleInputs inputs;
};

/// Gaussian MLE (mean, divide-by-n sigma) of each rule's per-clip value;
/// tau = mu + k sigma for upper-bound rules, mu - k sigma for lower-bound.
/// Every exercise present needs at least two clips.
UserProfile tune_thresholds(const std::string& subject_id, std::span<const TuningSample> samples,
                            KPolicy policy = KPolicy::per_component());
UserProfile tune_thresholds(const std::string& subject_id, std::span<const MotionClip> unaffected,
                            KPolicy policy = KPolicy::per_component());

}  // namespace rehab::rb
