#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace rehab::coach {

enum class State : std::uint8_t {
  Greeting,  // "Greeting/Briefing"
  Demonstration,
  Initial,
  Movement,
  Terminate,
  Feedback,
  Notify,
  Encourage,
  Correction,
  WrapUp,
};
inline constexpr std::size_t kStateCount = 10;
inline constexpr std::array<State, kStateCount> kStates{
    State::Greeting, State::Demonstration, State::Initial,   State::Movement,   State::Terminate,
    State::Feedback, State::Notify,        State::Encourage, State::Correction, State::WrapUp};
std::string_view state_name(State s);
State parse_state(std::string_view s);

enum class EventKind : std::uint8_t {
  SessionStart,
  DemoRequest,
  DemoSkip,
  DemoEnd,
  ReadyConfirm,
  StartCue,
  FrameAssessed,
  CompensationDetected,
  MotionComplete,
  /// Completion of an automatic state (Terminate, Feedback, Notify after a motion).
  Advance,
  RepRemaining,
  PrescriptionComplete,
  UserQuit,
};
inline constexpr std::array<EventKind, 13> kEventKinds{
    EventKind::SessionStart,   EventKind::DemoRequest,  EventKind::DemoSkip,
    EventKind::DemoEnd,        EventKind::ReadyConfirm, EventKind::StartCue,
    EventKind::FrameAssessed,  EventKind::CompensationDetected, EventKind::MotionComplete,
    EventKind::Advance,        EventKind::RepRemaining, EventKind::PrescriptionComplete,
    EventKind::UserQuit};
std::string_view event_name(EventKind e);

struct Event {
  EventKind kind = EventKind::SessionStart;
  bool demo = false;    // SessionStart: the user asked for the demonstration
  bool normal = false;  // FrameAssessed: the compensation episode is over
};

/// Notify is visited twice per repetition: before Movement to announce
/// monitoring and after Terminate to announce the result. `reviewing`
/// tells the two apart.
struct Position {
  State state = State::Greeting;
  bool reviewing = false;

  bool operator==(const Position&) const = default;
};

/// What the session says when a state is entered.
enum class Cue : std::uint8_t {
  Demonstrate,
  AskReady,
  StartMonitoring,
  Correct,
  Verdicts,
  Summarize,
  Encourage,
  WrapUp,
};

struct Transition {
  Position next;
  bool accepted = false;  // false: unknown pair, position unchanged
  std::vector<Cue> cues;
};

/// Pure transition function. Unknown pairs leave the position unchanged and
/// return accepted = false; the caller decides how to log it.
Transition step_fsm(Position from, const Event& event);

/// Every position reachable from Greeting/Briefing.
std::vector<Position> reachable_positions();
/// Positions from which no event sequence reaches Wrap-up.
std::vector<Position> dead_positions();

/// Stateful wrapper that logs ignored events.
class Fsm {
 public:
  const Position& position() const { return pos_; }
  State state() const { return pos_.state; }
  /// Applies `event`; an unknown pair is ignored with a warning.
  Transition step(const Event& event);
  bool finished() const { return pos_.state == State::WrapUp; }

 private:
  Position pos_;
};

}  // namespace rehab::coach
