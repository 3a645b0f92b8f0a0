#include "rehab/hybrid.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "rehab/errors.hpp"
#include "rehab/metrics.hpp"

namespace rehab::hybrid {

namespace {

constexpr std::array<rb::RuleGroup, 5> kAllGroups{rb::RuleGroup::Rom, rb::RuleGroup::Smoothness, rb::RuleGroup::Head,
                                                  rb::RuleGroup::Spine, rb::RuleGroup::Shoulder};

rb::RuleGroup parse_group(std::string_view s) {
  for (auto g : kAllGroups) {
    if (rb::group_name(g) == s) return g;
  }
  throw ParseError("unknown rule group '" + std::string(s) + "'");
}

std::string model_file(Exercise e, std::string_view unit) {
  return std::string(exercise_name(e)) + "-" + std::string(unit) + ".json";
}

Verdict make_verdict(Component c, std::optional<rb::RuleGroup> joint, const UnitScores& s, const ModelWeights& w,
                     std::vector<rb::Violation> violated) {
  Verdict v;
  v.component = c;
  v.joint = joint;
  v.score = hybrid_score(s.ml, s.rb, w);
  v.label = decide(v.score);
  v.source = Source::HM;
  v.ml_score = s.ml;
  v.rb_score = s.rb;
  v.rb_label = s.rb_label;
  v.violated = std::move(violated);
  return v;
}

}  // namespace

void ModelWeights::validate() const {
  if (!std::isfinite(rho_ml) || !std::isfinite(rho_rb) || rho_ml < 0.0 || rho_rb < 0.0 || rho_ml > 1.0 ||
      rho_rb > 1.0) {
    throw InvalidWeightsError("model weights must lie in [0, 1]");
  }
  if (rho_ml + rho_rb <= 0.0) throw InvalidWeightsError("model weights sum to zero");
}

double hybrid_score(double p_ml, double p_rb, const ModelWeights& w) {
  w.validate();
  const double total = w.rho_ml + w.rho_rb;
  return (w.rho_ml / total) * p_ml + (w.rho_rb / total) * p_rb;
}

ModelWeights compute_model_weights(std::span<const int> ml_preds, std::span<const int> rb_preds,
                                   std::span<const int> truths) {
  if (truths.empty()) throw InsufficientDataError("model weights need at least one labelled prediction");
  return {f1_score(ml_preds, truths), f1_score(rb_preds, truths)};
}

VotingBuffer::VotingBuffer(int window) : window_(window) {
  if (window < 1 || window > kMaxVotingWindow) throw ConfigurationError("voting window must be 1..30");
}

int VotingBuffer::push(int prediction) {
  const int p = prediction == 1 ? 1 : 0;
  ring_.push_back(p);
  ones_ += p;
  if (static_cast<int>(ring_.size()) > window_) {
    ones_ -= ring_.front();
    ring_.pop_front();
  }
  const int zeros = static_cast<int>(ring_.size()) - ones_;
  if (ones_ == zeros) return p;
  return ones_ > zeros ? 1 : 0;
}

void VotingBuffer::reset() {
  ring_.clear();
  ones_ = 0;
}

std::vector<int> vote_stream(std::span<const int> predictions, int window) {
  VotingBuffer buf(window);
  std::vector<int> out;
  out.reserve(predictions.size());
  for (int p : predictions) out.push_back(buf.push(p));
  return out;
}

std::string_view source_name(Source s) {
  switch (s) {
    case Source::ML: return "ML";
    case Source::RB: return "RB";
    case Source::HM: return "HM";
  }
  return "?";
}

const ModelWeights& ExerciseModels::weight(rb::RuleGroup g) const {
  auto it = weights.find(g);
  if (it == weights.end()) throw ConfigurationError("no fusion weights for " + std::string(rb::group_name(g)));
  return it->second;
}

const ExerciseModels& ModelBundle::at(Exercise e) const {
  auto it = exercises.find(e);
  if (it == exercises.end()) throw ConfigurationError("no models for exercise " + std::string(exercise_name(e)));
  return it->second;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [e, m] : bundle.exercises) {
    ml::save_model(m.rom, dir / model_file(e, "rom"));
    ml::save_model(m.smoothness, dir / model_file(e, "smoothness"));
    for (std::size_t j = 0; j < 3; ++j) {
      ml::save_model(m.compensation[j], dir / model_file(e, rb::group_name(rb::kCompensationGroups[j])));
    }
    auto& ew = weights[std::string(exercise_name(e))];
    for (const auto& [g, w] : m.weights) ew[std::string(rb::group_name(g))] = {{"rho_ml", w.rho_ml}, {"rho_rb", w.rho_rb}};
  }
  const auto path = dir / "weights.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << weights.dump(2) << '\n';
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  const auto path = dir / "weights.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json weights;
  try {
    in >> weights;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed weights file: ") + e.what());
  }
  ModelBundle bundle;
  for (const auto& [ename, groups] : weights.items()) {
    const Exercise e = parse_exercise(ename);
    ExerciseModels m;
    m.rom = ml::load_model(dir / model_file(e, "rom"));
    m.smoothness = ml::load_model(dir / model_file(e, "smoothness"));
    for (std::size_t j = 0; j < 3; ++j) {
      m.compensation[j] = ml::load_model(dir / model_file(e, rb::group_name(rb::kCompensationGroups[j])));
    }
    for (const auto& [gname, w] : groups.items()) {
      ModelWeights mw{w.at("rho_ml").get<double>(), w.at("rho_rb").get<double>()};
      mw.validate();
      m.weights[parse_group(gname)] = mw;
    }
    bundle.exercises.emplace(e, std::move(m));
  }
  return bundle;
}

UnitScores clip_unit_scores(const ExerciseModels& models, const rb::RuleSet& rules, Exercise exercise,
                            rb::RuleGroup group, const features::ClipAnalysis& clip) {
  const auto x = rb::clip_rule_inputs(clip);
  UnitScores s;
  s.rb = rb::rb_score(rules, exercise, group, x);
  s.rb_label = rb::rb_predict(rules, exercise, group, x);
  if (group == rb::RuleGroup::Rom) {
    s.ml = models.rom.predict_proba(clip.rom_summary.values);
  } else if (group == rb::RuleGroup::Smoothness) {
    s.ml = models.smoothness.predict_proba(clip.smoothness_summary.values);
  } else {
    throw ConfigurationError("compensation is scored per frame");
  }
  return s;
}

std::array<UnitScores, 3> frame_unit_scores(const ExerciseModels& models, const rb::RuleSet& rules, Exercise exercise,
                                            const features::FrameCompFeatures& comp) {
  const auto x = rb::frame_rule_inputs(comp);
  std::array<UnitScores, 3> out;
  for (std::size_t j = 0; j < 3; ++j) {
    const auto g = rb::kCompensationGroups[j];
    out[j].ml = models.compensation[j].predict_proba(comp);
    out[j].rb = rb::rb_score(rules, exercise, g, x);
    out[j].rb_label = rb::rb_predict(rules, exercise, g, x);
  }
  return out;
}

bool FrameResult::compensated() const {
  for (const auto& v : joints) {
    if (v.label == 0) return true;
  }
  return false;
}

FrameAssessor::FrameAssessor(const ExerciseModels& models, const rb::RuleSet& rules, Exercise exercise, Arm arm,
                             int voting_window, int smoothing_window)
    : models_(&models),
      rules_(&rules),
      exercise_(exercise),
      arm_(arm),
      smoother_(smoothing_window),
      votes_{VotingBuffer(voting_window), VotingBuffer(voting_window), VotingBuffer(voting_window)} {}

FrameResult FrameAssessor::push(const SkeletonFrame& raw) {
  for (const auto& p : raw.joints) {
    if (!p.finite()) throw ValidationError("frame contains non-finite coordinates");
  }
  if (!smoothed_.empty() && !(raw.t > smoothed_.back().t)) throw ValidationError("frame timestamps must increase");
  smoothed_.push_back(smoother_.push(raw));
  const auto& cur = smoothed_.back();
  if (smoothed_.size() == 1) torso_ref_ = features::torso_reference(cur);

  FrameResult r;
  r.index = smoothed_.size() - 1;
  r.t = cur.t;
  r.features = features::compensation_features(cur, smoothed_.front(), torso_ref_, arm_);
  const auto scores = frame_unit_scores(*models_, *rules_, exercise_, r.features);
  const auto x = rb::frame_rule_inputs(r.features);
  for (std::size_t j = 0; j < 3; ++j) {
    const auto g = rb::kCompensationGroups[j];
    auto v = make_verdict(Component::Compensation, g, scores[j], models_->weight(g),
                          rb::violated_rules(*rules_, exercise_, g, x));
    r.raw_labels[j] = v.label;
    v.label = votes_[j].push(v.label);
    r.joints[j] = std::move(v);
  }
  return r;
}

ClipVerdicts FrameAssessor::finish() const {
  MotionClip smoothed("", exercise_, Side::Affected, arm_, smoothed_);
  require_valid(smoothed);
  const auto clip = features::analyze_smoothed(std::move(smoothed));
  const auto x = rb::clip_rule_inputs(clip);
  ClipVerdicts out;
  const auto rom = clip_unit_scores(*models_, *rules_, exercise_, rb::RuleGroup::Rom, clip);
  out.rom = make_verdict(Component::Rom, std::nullopt, rom, models_->weight(rb::RuleGroup::Rom),
                         rb::violated_rules(*rules_, exercise_, rb::RuleGroup::Rom, x));
  const auto sm = clip_unit_scores(*models_, *rules_, exercise_, rb::RuleGroup::Smoothness, clip);
  out.smoothness = make_verdict(Component::Smoothness, std::nullopt, sm, models_->weight(rb::RuleGroup::Smoothness),
                                rb::violated_rules(*rules_, exercise_, rb::RuleGroup::Smoothness, x));
  return out;
}

void FrameAssessor::reset() {
  smoother_.reset();
  for (auto& v : votes_) v.reset();
  smoothed_.clear();
  torso_ref_ = 0.0;
}

ClipAssessment assess_motion(const MotionClip& clip, const ExerciseModels& models, const rb::RuleSet& rules,
                             int voting_window) {
  require_valid(clip);
  FrameAssessor assessor(models, rules, clip.exercise(), clip.arm(), voting_window);
  ClipAssessment out;
  out.frames.reserve(clip.size());
  for (const auto& f : clip.frames()) out.frames.push_back(assessor.push(f));
  out.clip = assessor.finish();
  return out;
}

}  // namespace rehab::hybrid
