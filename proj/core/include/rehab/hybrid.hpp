#pragma once

#include <array>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rehab/features.hpp"
#include "rehab/mlp.hpp"
#include "rehab/rules.hpp"

namespace rehab::hybrid {

inline constexpr int kDefaultVotingWindow = 29;
inline constexpr int kMaxVotingWindow = 30;

/// F1 of each model on training data, used as fusion weights.
struct ModelWeights {
  double rho_ml = 1.0;
  double rho_rb = 1.0;

  void validate() const;
};

/// F1-weighted average of the two scores.
double hybrid_score(double p_ml, double p_rb, const ModelWeights& w);

inline int decide(double p) { return p >= 0.5 ? 1 : 0; }

ModelWeights compute_model_weights(std::span<const int> ml_preds, std::span<const int> rb_preds,
                                   std::span<const int> truths);

/// Majority vote over the last V_f frame predictions. Ties go to the newest
/// prediction; until V_f predictions exist the vote covers what is there.
class VotingBuffer {
 public:
  explicit VotingBuffer(int window = kDefaultVotingWindow);

  int push(int prediction);
  void reset();
  int window() const noexcept { return window_; }
  std::size_t size() const noexcept { return ring_.size(); }

 private:
  int window_;
  std::deque<int> ring_;
  int ones_ = 0;
};

std::vector<int> vote_stream(std::span<const int> predictions, int window);

enum class Source : std::uint8_t { ML, RB, HM };
std::string_view source_name(Source s);

struct Verdict {
  Component component = Component::Rom;
  std::optional<rb::RuleGroup> joint;  // set for compensation verdicts
  int label = 1;
  double score = 1.0;
  Source source = Source::HM;
  double ml_score = 1.0;
  double rb_score = 1.0;
  int rb_label = 1;
  std::vector<rb::Violation> violated;
};

struct ExerciseModels {
  ml::MlpModel rom;
  ml::MlpModel smoothness;
  std::array<ml::MlpModel, 3> compensation;  // head, spine, shoulder
  std::map<rb::RuleGroup, ModelWeights> weights;

  const ModelWeights& weight(rb::RuleGroup g) const;
};

struct ModelBundle {
  std::map<Exercise, ExerciseModels> exercises;

  const ExerciseModels& at(Exercise e) const;
};

/// One JSON file per network plus weights.json, all under `dir`.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir);

/// ML, RB and fused scores for one prediction unit.
struct UnitScores {
  double ml = 0.5;
  double rb = 1.0;
  int rb_label = 1;
};

UnitScores clip_unit_scores(const ExerciseModels& models, const rb::RuleSet& rules, Exercise exercise,
                            rb::RuleGroup group, const features::ClipAnalysis& clip);
std::array<UnitScores, 3> frame_unit_scores(const ExerciseModels& models, const rb::RuleSet& rules,
                                            Exercise exercise, const features::FrameCompFeatures& comp);

struct ClipVerdicts {
  Verdict rom;
  Verdict smoothness;
};

struct FrameResult {
  std::size_t index = 0;
  double t = 0.0;
  features::FrameCompFeatures features{};
  std::array<int, 3> raw_labels{1, 1, 1};  // HM label before voting
  std::array<Verdict, 3> joints;           // voted
  bool compensated() const;
};

/// Streaming per-frame assessment: smoothing, compensation features against
/// the first frame, HM scoring, and voting. ROM and Smoothness are judged
/// once the motion ends.
class FrameAssessor {
 public:
  FrameAssessor(const ExerciseModels& models, const rb::RuleSet& rules, Exercise exercise, Arm arm,
                int voting_window = kDefaultVotingWindow, int smoothing_window = kDefaultSmoothingWindow);

  FrameResult push(const SkeletonFrame& raw);
  ClipVerdicts finish() const;
  std::size_t frames() const noexcept { return smoothed_.size(); }
  Exercise exercise() const noexcept { return exercise_; }
  void reset();

 private:
  const ExerciseModels* models_;
  const rb::RuleSet* rules_;
  Exercise exercise_;
  Arm arm_;
  TrailingSmoother smoother_;
  std::array<VotingBuffer, 3> votes_;
  std::vector<SkeletonFrame> smoothed_;
  double torso_ref_ = 0.0;
};

struct ClipAssessment {
  ClipVerdicts clip;
  std::vector<FrameResult> frames;
};

ClipAssessment assess_motion(const MotionClip& clip, const ExerciseModels& models, const rb::RuleSet& rules,
                             int voting_window = kDefaultVotingWindow);

}  // namespace rehab::hybrid
