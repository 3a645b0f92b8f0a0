#include "rehab/coach/fsm.hpp"

#include <deque>
#include <set>
#include <spdlog/spdlog.h>

#include "rehab/errors.hpp"

namespace rehab::coach {

std::string_view state_name(State s) {
  switch (s) {
    case State::Greeting: return "Greeting/Briefing";
    case State::Demonstration: return "Demonstration";
    case State::Initial: return "Initial";
    case State::Movement: return "Movement";
    case State::Terminate: return "Terminate";
    case State::Feedback: return "Feedback";
    case State::Notify: return "Notify";
    case State::Encourage: return "Encourage";
    case State::Correction: return "Correction";
    case State::WrapUp: return "Wrap-up";
  }
  return "?";
}

State parse_state(std::string_view s) {
  for (auto st : kStates) {
    if (state_name(st) == s) return st;
  }
  throw ParseError("unknown state '" + std::string(s) + "'");
}

std::string_view event_name(EventKind e) {
  switch (e) {
    case EventKind::SessionStart: return "session-start";
    case EventKind::DemoRequest: return "demo-request";
    case EventKind::DemoSkip: return "demo-skip";
    case EventKind::DemoEnd: return "demo-end";
    case EventKind::ReadyConfirm: return "ready-confirm";
    case EventKind::StartCue: return "start-cue";
    case EventKind::FrameAssessed: return "frame-assessed";
    case EventKind::CompensationDetected: return "compensation-detected";
    case EventKind::MotionComplete: return "motion-complete";
    case EventKind::Advance: return "advance";
    case EventKind::RepRemaining: return "rep-remaining";
    case EventKind::PrescriptionComplete: return "prescription-complete";
    case EventKind::UserQuit: return "user-quit";
  }
  return "?";
}

namespace {

Transition to(State s, std::vector<Cue> cues, bool reviewing = false) {
  return {{s, reviewing}, true, std::move(cues)};
}

}  // namespace

Transition step_fsm(Position from, const Event& ev) {
  using E = EventKind;
  if (from.state == State::WrapUp) return {from, false, {}};
  if (ev.kind == E::UserQuit) return to(State::WrapUp, {Cue::WrapUp});

  switch (from.state) {
    case State::Greeting:
      if (ev.kind == E::SessionStart) {
        return ev.demo ? to(State::Demonstration, {Cue::Demonstrate}) : to(State::Initial, {Cue::AskReady});
      }
      if (ev.kind == E::DemoRequest) return to(State::Demonstration, {Cue::Demonstrate});
      break;
    case State::Demonstration:
      if (ev.kind == E::DemoSkip || ev.kind == E::DemoEnd) return to(State::Initial, {Cue::AskReady});
      break;
    case State::Initial:
      if (ev.kind == E::ReadyConfirm) return to(State::Notify, {Cue::StartMonitoring});
      if (ev.kind == E::DemoRequest) return to(State::Demonstration, {Cue::Demonstrate});
      break;
    case State::Notify:
      if (!from.reviewing && ev.kind == E::StartCue) return to(State::Movement, {});
      if (from.reviewing && ev.kind == E::Advance) return to(State::Encourage, {Cue::Encourage});
      break;
    case State::Movement:
      if (ev.kind == E::FrameAssessed) return to(State::Movement, {});
      if (ev.kind == E::CompensationDetected) return to(State::Correction, {Cue::Correct});
      if (ev.kind == E::MotionComplete) return to(State::Terminate, {});
      break;
    case State::Correction:
      if (ev.kind == E::FrameAssessed) return ev.normal ? to(State::Movement, {}) : to(State::Correction, {});
      if (ev.kind == E::CompensationDetected) return to(State::Correction, {});
      if (ev.kind == E::MotionComplete) return to(State::Terminate, {});
      break;
    case State::Terminate:
      if (ev.kind == E::Advance) return to(State::Feedback, {Cue::Verdicts});
      break;
    case State::Feedback:
      if (ev.kind == E::Advance) return to(State::Notify, {Cue::Summarize}, true);
      break;
    case State::Encourage:
      if (ev.kind == E::RepRemaining) return to(State::Initial, {Cue::AskReady});
      if (ev.kind == E::PrescriptionComplete) return to(State::WrapUp, {Cue::WrapUp});
      break;
    case State::WrapUp:
      break;
  }
  return {from, false, {}};
}

namespace {

std::vector<Event> all_events() {
  std::vector<Event> out;
  for (auto k : kEventKinds) {
    for (bool flag : {false, true}) out.push_back({k, flag, flag});
  }
  return out;
}

}  // namespace

std::vector<Position> reachable_positions() {
  auto key = [](Position p) { return static_cast<int>(p.state) * 2 + (p.reviewing ? 1 : 0); };
  std::set<int> seen;
  std::vector<Position> out;
  std::deque<Position> queue{Position{}};
  seen.insert(key(Position{}));
  const auto events = all_events();
  while (!queue.empty()) {
    const Position p = queue.front();
    queue.pop_front();
    out.push_back(p);
    for (const auto& ev : events) {
      const auto t = step_fsm(p, ev);
      if (t.accepted && seen.insert(key(t.next)).second) queue.push_back(t.next);
    }
  }
  return out;
}

std::vector<Position> dead_positions() {
  const auto positions = reachable_positions();
  const auto events = all_events();
  std::vector<Position> dead;
  for (const auto& start : positions) {
    std::vector<Position> frontier{start};
    std::vector<Position> visited{start};
    bool found = start.state == State::WrapUp;
    while (!found && !frontier.empty()) {
      const Position p = frontier.back();
      frontier.pop_back();
      for (const auto& ev : events) {
        // A user can always quit; searching without it proves the regular flow terminates too.
        if (ev.kind == EventKind::UserQuit) continue;
        const auto t = step_fsm(p, ev);
        if (!t.accepted) continue;
        if (t.next.state == State::WrapUp) {
          found = true;
          break;
        }
        if (std::find(visited.begin(), visited.end(), t.next) == visited.end()) {
          visited.push_back(t.next);
          frontier.push_back(t.next);
        }
      }
    }
    if (!found) dead.push_back(start);
  }
  return dead;
}

Transition Fsm::step(const Event& event) {
  auto t = step_fsm(pos_, event);
  if (!t.accepted) {
    spdlog::warn("ignoring {} in state {}", event_name(event.kind), state_name(pos_.state));
    return t;
  }
  pos_ = t.next;
  return t;
}

}  // namespace rehab::coach
