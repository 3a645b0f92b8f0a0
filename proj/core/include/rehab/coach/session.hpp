#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rehab/coach/feedback.hpp"
#include "rehab/coach/fsm.hpp"
#include "rehab/coach/profile_store.hpp"
#include "rehab/coach/protocol.hpp"
#include "rehab/hybrid.hpp"
#include "rehab/rules.hpp"

namespace rehab::coach {

inline constexpr std::chrono::nanoseconds kFrameDeadline{33'000'000};

struct SessionResources {
  const hybrid::ModelBundle* models = nullptr;
  /// Consulted for config.subject_id when `profile` is unset.
  const ProfileStore* profiles = nullptr;
  std::optional<rb::UserProfile> profile;
};

struct SessionOptions {
  std::chrono::nanoseconds deadline = kFrameDeadline;
  /// Monotonic nanoseconds; steady_clock when empty.
  std::function<std::int64_t()> clock;
};

struct SessionStats {
  std::size_t frames_received = 0;
  std::size_t frames_assessed = 0;
  std::size_t frames_dropped = 0;
  std::size_t frames_ignored = 0;  // outside Movement/Correction
  std::size_t overruns = 0;
  std::vector<double> latency_ms;  // per assessed frame
};

/// One coaching session. Inputs arrive through the methods below; every
/// outbound message is appended to the log and handed to the sink.
class Session {
 public:
  using Sink = std::function<void(const nlohmann::json&)>;

  /// Throws ValidationError for a bad config and ConfigurationError when
  /// the models do not cover the prescription.
  Session(SessionConfig config, SessionResources resources, SessionOptions options = {}, Sink sink = {});

  /// Greets, resolves the user's thresholds, and applies session-start.
  void start();
  /// Operator or user controls: DemoRequest, DemoSkip, DemoEnd,
  /// ReadyConfirm, StartCue or UserQuit. Other kinds are rejected with a warning.
  void control(EventKind kind);
  void frame(const SkeletonFrame& raw);
  /// The current motion ended: verdicts, summary, encouragement, then the
  /// next repetition or wrap-up.
  void motion_end();
  /// Alert and wrap up, e.g. after a frame-source failure.
  void abort(const std::string& reason);

  State state() const { return fsm_.state(); }
  bool finished() const { return fsm_.finished(); }
  const SessionLog& log() const { return log_; }
  const SessionStats& stats() const { return stats_; }
  const rb::RuleSet& rules() const { return rules_; }
  /// Current prescription entry and 1-based repetition.
  Exercise exercise() const;
  int rep() const { return rep_; }
  std::size_t completed() const { return completed_; }

 private:
  struct RepResult {
    int rom = 1;
    int smoothness = 1;
    bool compensated = false;
  };

  void step(const Event& ev);
  void emit(nlohmann::json message);
  void say(FeedbackKind kind, std::string text, std::vector<std::string> rules = {});
  void apply_cue(Cue cue);
  std::vector<std::string> implicated_rules(const hybrid::FrameResult& r) const;
  void resolve_profile();
  std::int64_t now_ns() const;

  SessionConfig config_;
  SessionResources resources_;
  SessionOptions options_;
  Sink sink_;
  Fsm fsm_;
  rb::RuleSet rules_;
  SessionLog log_;
  SessionStats stats_;

  std::size_t entry_ = 0;  // prescription index
  int rep_ = 1;
  std::size_t completed_ = 0;
  std::vector<RepResult> results_;

  // Session clock: stream time of the latest frame, offset so that every
  // motion continues where the previous one ended.
  double now_ = 0.0;
  double motion_base_ = 0.0;
  std::optional<double> first_t_;
  double busy_until_ = -1.0;

  std::unique_ptr<hybrid::FrameAssessor> assessor_;
  std::optional<hybrid::FrameResult> last_;
  bool in_episode_ = false;
  int normal_run_ = 0;
  std::array<bool, 3> joint_flagged_{};
  std::array<std::size_t, 3> normal_frames_{};
  std::array<double, 3> ml_sum_{};
  std::array<double, 3> rb_sum_{};
  std::size_t motion_frames_ = 0;
  std::optional<hybrid::ClipVerdicts> verdicts_;
  bool assessed_ = false;
};

/// Supplies the frames of successive motions.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Starts the next motion; false once the source is exhausted.
  virtual bool begin_motion() = 0;
  /// Next frame of the current motion; nullopt at its end.
  virtual std::optional<SkeletonFrame> next_frame() = 0;
};

/// Plays recorded clips, one per motion.
class ReplaySource : public FrameSource {
 public:
  explicit ReplaySource(std::vector<MotionClip> clips);
  bool begin_motion() override;
  std::optional<SkeletonFrame> next_frame() override;

 private:
  std::vector<MotionClip> clips_;
  std::size_t clip_ = 0;
  std::size_t frame_ = 0;
  bool started_ = false;
};

struct RunScript {
  /// Quit after this many frames of the whole session.
  std::optional<std::size_t> quit_after_frames;
};

/// Drives a session with a scripted operator: demo end (when requested),
/// ready and start cue before each motion, motion end after the source's
/// last frame. A failing or empty source aborts to Wrap-up with an Alert.
SessionLog run_session(const SessionConfig& config, const SessionResources& resources, FrameSource& source,
                       const SessionOptions& options = {}, const RunScript& script = {},
                       SessionStats* stats = nullptr);

}  // namespace rehab::coach
