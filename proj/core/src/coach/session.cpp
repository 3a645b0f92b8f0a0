#include "rehab/coach/session.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rehab/errors.hpp"

namespace rehab::coach {

namespace {

std::string_view exercise_phrase(Exercise e) {
  switch (e) {
    case Exercise::E1: return "bringing your hand to your mouth";
    case Exercise::E2: return "reaching forward";
    case Exercise::E3: return "reaching down toward your knee";
  }
  return "the exercise";
}

}  // namespace

Session::Session(SessionConfig config, SessionResources resources, SessionOptions options, Sink sink)
    : config_(std::move(config)),
      resources_(std::move(resources)),
      options_(std::move(options)),
      sink_(std::move(sink)),
      rules_(rb::RuleSet::generic()) {
  config_.validate();
  if (resources_.models == nullptr) throw ConfigurationError("session needs trained models");
  for (const auto& p : config_.prescription) resources_.models->at(p.exercise);
}

Exercise Session::exercise() const {
  return config_.prescription[std::min(entry_, config_.prescription.size() - 1)].exercise;
}

std::int64_t Session::now_ns() const {
  if (options_.clock) return options_.clock();
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void Session::emit(nlohmann::json message) {
  log_.append(std::move(message));
  if (sink_) sink_(log_.entries().back());
}

void Session::say(FeedbackKind kind, std::string text, std::vector<std::string> rules) {
  FeedbackEvent e;
  e.kind = kind;
  e.text = std::move(text);
  e.rules = std::move(rules);
  e.t = now_;
  e.state = fsm_.state();
  emit(feedback_message(e));
}

void Session::step(const Event& ev) {
  const Position before = fsm_.position();
  const auto t = fsm_.step(ev);
  if (!t.accepted) return;
  if (!(t.next == before)) emit(state_message(t.next.state, now_));
  for (auto cue : t.cues) apply_cue(cue);
}

void Session::resolve_profile() {
  std::optional<rb::UserProfile> profile = resources_.profile;
  if (!profile && resources_.profiles != nullptr && !config_.subject_id.empty()) {
    auto found = resources_.profiles->load(config_.subject_id);
    switch (found.status) {
      case ProfileStatus::Found:
        profile = std::move(found.profile);
        break;
      case ProfileStatus::Missing:
        break;
      case ProfileStatus::Corrupt:
      case ProfileStatus::Unreadable:
        spdlog::error("profile for {}: {}", config_.subject_id, found.message);
        say(FeedbackKind::Alert, "Your saved profile could not be read; standard thresholds are used today.");
        return;
    }
  }
  if (!profile) {
    say(FeedbackKind::Instruction,
        "No personal thresholds yet: please perform each exercise with your unaffected side first.");
    return;
  }
  try {
    rules_ = rb::RuleSet::personalized(*profile);
  } catch (const Error& e) {
    spdlog::error("profile for {} rejected: {}", config_.subject_id, e.what());
    say(FeedbackKind::Alert, "Your saved profile could not be used; standard thresholds are used today.");
  }
}

void Session::start() {
  if (fsm_.state() != State::Greeting || !log_.entries().empty()) {
    spdlog::warn("session already started");
    return;
  }
  emit(state_message(State::Greeting, now_));
  std::string plan;
  for (const auto& p : config_.prescription) {
    if (!plan.empty()) plan += ", then ";
    plan += fmt::format("{} repetitions of {}", p.reps, exercise_phrase(p.exercise));
  }
  say(FeedbackKind::Instruction, "Today we will practice " + plan + ".");
  resolve_profile();
  step({EventKind::SessionStart, config_.demo, false});
}

void Session::control(EventKind kind) {
  switch (kind) {
    case EventKind::DemoRequest:
    case EventKind::DemoSkip:
    case EventKind::DemoEnd:
    case EventKind::ReadyConfirm:
    case EventKind::StartCue:
    case EventKind::UserQuit:
      step({kind, false, false});
      return;
    default:
      spdlog::warn("{} is not an external control", event_name(kind));
  }
}

std::vector<std::string> Session::implicated_rules(const hybrid::FrameResult& r) const {
  std::vector<std::pair<double, std::string>> ranked;
  const auto x = rb::frame_rule_inputs(r.features);
  const Exercise e = exercise();
  for (std::size_t j = 0; j < 3; ++j) {
    if (r.joints[j].label != 0) continue;
    const auto& violated = r.joints[j].violated;
    if (!violated.empty()) {
      for (const auto& v : violated) ranked.emplace_back(v.magnitude, v.rule_id);
      continue;
    }
    // The fused score flagged the joint without a failing rule: name the
    // rule closest to failing.
    std::optional<std::pair<double, std::string>> best;
    for (auto i : rules_.applicable(e, rb::kCompensationGroups[j])) {
      const auto& rule = rules_.rule(i);
      const double tau = std::max(rules_.threshold(i, e), rb::kScoreEpsilon);
      const double m = (x[rule.input] - tau) / tau;
      if (!best || m > best->first) best = {m, rule.id};
    }
    if (best) ranked.push_back(*best);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> ids;
  for (auto& [m, id] : ranked) {
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(std::move(id));
  }
  return ids;
}

void Session::apply_cue(Cue cue) {
  const Exercise e = exercise();
  const int reps = config_.prescription[std::min(entry_, config_.prescription.size() - 1)].reps;
  switch (cue) {
    case Cue::Demonstrate:
      say(FeedbackKind::Instruction, fmt::format("Watch how to do {}.", exercise_phrase(e)));
      break;
    case Cue::AskReady:
      say(FeedbackKind::Instruction, fmt::format("Are you ready for repetition {} of {}?", rep_, reps));
      break;
    case Cue::StartMonitoring:
      emit(progress_message(e, rep_, reps, now_));
      say(FeedbackKind::Instruction, "I am watching now. Start on the cue.");
      assessor_ = std::make_unique<hybrid::FrameAssessor>(resources_.models->at(e), rules_, e, config_.arm,
                                                          config_.voting_window);
      motion_base_ = now_;
      first_t_.reset();
      busy_until_ = -INFINITY;
      last_.reset();
      in_episode_ = false;
      normal_run_ = 0;
      joint_flagged_ = {};
      normal_frames_ = {};
      ml_sum_ = {};
      rb_sum_ = {};
      motion_frames_ = 0;
      verdicts_.reset();
      assessed_ = false;
      break;
    case Cue::Correct: {
      if (!last_) break;
      auto ids = implicated_rules(*last_);
      if (ids.empty()) ids.emplace_back("compensation");
      say(FeedbackKind::Corrective, feedback_text(ids, Component::Compensation, e, config_.verbosity), ids);
      break;
    }
    case Cue::Verdicts:
      if (!verdicts_) break;
      emit(verdict_message(verdicts_->rom, now_));
      emit(verdict_message(verdicts_->smoothness, now_));
      for (std::size_t j = 0; j < 3; ++j) {
        hybrid::Verdict v;
        v.component = Component::Compensation;
        v.joint = rb::kCompensationGroups[j];
        v.label = joint_flagged_[j] ? 0 : 1;
        v.score = motion_frames_ == 0 ? 1.0 : static_cast<double>(normal_frames_[j]) / motion_frames_;
        v.ml_score = motion_frames_ == 0 ? 1.0 : ml_sum_[j] / motion_frames_;
        v.rb_score = motion_frames_ == 0 ? 1.0 : rb_sum_[j] / motion_frames_;
        v.rb_label = v.label;
        emit(verdict_message(v, now_));
      }
      break;
    case Cue::Summarize:
      if (verdicts_) {
        std::vector<rb::RuleGroup> joints;
        for (std::size_t j = 0; j < 3; ++j) {
          if (joint_flagged_[j]) joints.push_back(rb::kCompensationGroups[j]);
        }
        say(FeedbackKind::Summary, summary_text(*verdicts_, joints, config_.verbosity));
      } else {
        say(FeedbackKind::Summary, "This repetition could not be assessed; let us try it again.");
      }
      break;
    case Cue::Encourage:
      say(FeedbackKind::Encouragement, encouragement_text(completed_, config_.total_reps()));
      break;
    case Cue::WrapUp: {
      std::size_t rom = 0;
      std::size_t smooth = 0;
      std::size_t clean = 0;
      for (const auto& r : results_) {
        rom += r.rom == 1;
        smooth += r.smoothness == 1;
        clean += !r.compensated;
      }
      const auto summary = session_summary_text(completed_, config_.total_reps(), rom, smooth, clean);
      say(FeedbackKind::Summary, summary);
      say(FeedbackKind::Encouragement, encouragement_text(config_.total_reps(), config_.total_reps()));
      emit(end_message(summary, now_));
      break;
    }
  }
}

void Session::frame(const SkeletonFrame& raw) {
  ++stats_.frames_received;
  const State s = fsm_.state();
  if ((s != State::Movement && s != State::Correction) || !assessor_) {
    ++stats_.frames_ignored;
    return;
  }
  if (!first_t_) first_t_ = raw.t;
  if (raw.t < busy_until_) {
    ++stats_.frames_dropped;
    return;
  }
  const auto start = now_ns();
  hybrid::FrameResult r;
  try {
    r = assessor_->push(raw);
  } catch (const ValidationError& e) {
    spdlog::warn("frame at t={} dropped: {}", raw.t, e.what());
    ++stats_.frames_dropped;
    return;
  }
  now_ = std::max(now_, motion_base_ + (raw.t - *first_t_));
  ++stats_.frames_assessed;
  ++motion_frames_;

  std::array<int, 3> flags{};
  bool compensated = false;
  for (std::size_t j = 0; j < 3; ++j) {
    flags[j] = r.joints[j].label;
    ml_sum_[j] += r.joints[j].ml_score;
    rb_sum_[j] += r.joints[j].rb_score;
    if (flags[j] == 0) {
      compensated = true;
      joint_flagged_[j] = true;
    } else {
      ++normal_frames_[j];
    }
  }
  emit(assessment_message(flags, now_));
  last_ = std::move(r);

  if (!in_episode_) {
    if (compensated) {
      in_episode_ = true;
      normal_run_ = 0;
      step({EventKind::CompensationDetected, false, false});
    } else {
      step({EventKind::FrameAssessed, false, true});
    }
  } else if (compensated) {
    normal_run_ = 0;
    step({EventKind::FrameAssessed, false, false});
  } else if (++normal_run_ >= config_.voting_window) {
    in_episode_ = false;
    step({EventKind::FrameAssessed, false, true});
  } else {
    step({EventKind::FrameAssessed, false, false});
  }

  const auto elapsed = now_ns() - start;
  stats_.latency_ms.push_back(static_cast<double>(elapsed) / 1e6);
  if (elapsed > options_.deadline.count()) {
    ++stats_.overruns;
    spdlog::warn("frame at t={} took {:.1f} ms, over the {:.1f} ms budget", raw.t, elapsed / 1e6,
                 options_.deadline.count() / 1e6);
  }
  busy_until_ = raw.t + static_cast<double>(elapsed) / 1e9;
}

void Session::motion_end() {
  const State s = fsm_.state();
  if (s != State::Movement && s != State::Correction) {
    spdlog::warn("motion end ignored in state {}", state_name(s));
    return;
  }
  step({EventKind::MotionComplete, false, false});
  try {
    if (!assessor_) throw ValidationError("no motion in progress");
    verdicts_ = assessor_->finish();
    assessed_ = true;
  } catch (const Error& e) {
    spdlog::warn("motion could not be assessed: {}", e.what());
    say(FeedbackKind::Alert, "The motion was too short or incomplete to assess.");
    verdicts_.reset();
    assessed_ = false;
  }
  if (assessed_) {
    ++completed_;
    results_.push_back({verdicts_->rom.label, verdicts_->smoothness.label,
                        joint_flagged_[0] || joint_flagged_[1] || joint_flagged_[2]});
    if (++rep_ > config_.prescription[entry_].reps) {
      ++entry_;
      rep_ = 1;
    }
  }
  step({EventKind::Advance, false, false});  // Feedback
  step({EventKind::Advance, false, false});  // Notify
  step({EventKind::Advance, false, false});  // Encourage
  assessor_.reset();
  step({entry_ >= config_.prescription.size() ? EventKind::PrescriptionComplete : EventKind::RepRemaining, false,
        false});
}

void Session::abort(const std::string& reason) {
  if (finished()) return;
  say(FeedbackKind::Alert, reason);
  step({EventKind::UserQuit, false, false});
}

ReplaySource::ReplaySource(std::vector<MotionClip> clips) : clips_(std::move(clips)) {}

bool ReplaySource::begin_motion() {
  if (started_) ++clip_;
  started_ = true;
  frame_ = 0;
  return clip_ < clips_.size();
}

std::optional<SkeletonFrame> ReplaySource::next_frame() {
  if (!started_ || clip_ >= clips_.size()) return std::nullopt;
  const auto& c = clips_[clip_];
  if (frame_ >= c.size()) return std::nullopt;
  return c.frame(frame_++);
}

SessionLog run_session(const SessionConfig& config, const SessionResources& resources, FrameSource& source,
                       const SessionOptions& options, const RunScript& script, SessionStats* stats) {
  Session s(config, resources, options);
  s.start();
  if (s.state() == State::Demonstration) s.control(EventKind::DemoEnd);
  std::size_t frames = 0;
  bool any_motion = false;
  try {
    while (!s.finished()) {
      if (!source.begin_motion()) {
        s.abort(any_motion ? "The frame source ended before the prescription was complete."
                           : "No frames available: the frame source is empty.");
        break;
      }
      any_motion = true;
      s.control(EventKind::ReadyConfirm);
      s.control(EventKind::StartCue);
      while (auto f = source.next_frame()) {
        s.frame(*f);
        if (script.quit_after_frames && ++frames >= *script.quit_after_frames) {
          s.control(EventKind::UserQuit);
          break;
        }
      }
      if (s.finished()) break;
      s.motion_end();
    }
  } catch (const std::exception& e) {
    spdlog::error("frame source failed: {}", e.what());
    s.abort("The motion sensor stopped working; ending the session.");
  }
  if (stats != nullptr) *stats = s.stats();
  return s.log();
}

}  // namespace rehab::coach
