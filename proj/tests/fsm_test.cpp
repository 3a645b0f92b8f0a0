#include <gtest/gtest.h>

#include <set>

#include "rehab/coach/fsm.hpp"

using namespace rehab::coach;
using E = EventKind;

namespace {

Transition step(Position p, EventKind k, bool flag = false) { return step_fsm(p, {k, flag, flag}); }

Position at(State s, bool reviewing = false) { return {s, reviewing}; }

}  // namespace

TEST(Fsm, TenNamedStates) {
  std::set<std::string_view> names;
  for (State s : kStates) {
    names.insert(state_name(s));
    EXPECT_EQ(parse_state(state_name(s)), s);
  }
  EXPECT_EQ(names.size(), 10u);
  EXPECT_EQ(state_name(State::Greeting), "Greeting/Briefing");
  EXPECT_EQ(state_name(State::WrapUp), "Wrap-up");
}

TEST(Fsm, SessionStartBranchesOnDemo) {
  auto t = step(at(State::Greeting), E::SessionStart, true);
  EXPECT_EQ(t.next.state, State::Demonstration);
  EXPECT_EQ(t.cues, std::vector<Cue>{Cue::Demonstrate});
  t = step(at(State::Greeting), E::SessionStart, false);
  EXPECT_EQ(t.next.state, State::Initial);
  EXPECT_EQ(step(at(State::Demonstration), E::DemoSkip).next.state, State::Initial);
  EXPECT_EQ(step(at(State::Demonstration), E::DemoEnd).next.state, State::Initial);
}

TEST(Fsm, ReadyThenStartCue) {
  auto t = step(at(State::Initial), E::ReadyConfirm);
  EXPECT_EQ(t.next, at(State::Notify));
  EXPECT_EQ(t.cues, std::vector<Cue>{Cue::StartMonitoring});
  EXPECT_EQ(step(t.next, E::StartCue).next.state, State::Movement);
}

TEST(Fsm, CompensationEntersCorrection) {
  auto t = step(at(State::Movement), E::CompensationDetected);
  EXPECT_EQ(t.next.state, State::Correction);
  EXPECT_EQ(t.cues, std::vector<Cue>{Cue::Correct});
  // Still compensating: stay, no new cue.
  t = step(t.next, E::FrameAssessed, false);
  EXPECT_EQ(t.next.state, State::Correction);
  EXPECT_TRUE(t.cues.empty());
  t = step(t.next, E::CompensationDetected);
  EXPECT_TRUE(t.cues.empty());
  EXPECT_EQ(step(t.next, E::FrameAssessed, true).next.state, State::Movement);
  EXPECT_EQ(step(at(State::Correction), E::MotionComplete).next.state, State::Terminate);
}

TEST(Fsm, TerminateToWrapUpEmitsSummaryThenEncouragement) {
  std::vector<Cue> cues;
  Position p = at(State::Terminate);
  for (auto k : {E::Advance, E::Advance, E::Advance, E::PrescriptionComplete}) {
    const auto t = step(p, k);
    ASSERT_TRUE(t.accepted) << event_name(k);
    cues.insert(cues.end(), t.cues.begin(), t.cues.end());
    p = t.next;
  }
  EXPECT_EQ(p.state, State::WrapUp);
  EXPECT_EQ(cues, (std::vector<Cue>{Cue::Verdicts, Cue::Summarize, Cue::Encourage, Cue::WrapUp}));
}

TEST(Fsm, RepRemainingReturnsToInitial) {
  EXPECT_EQ(step(at(State::Encourage), E::RepRemaining).next.state, State::Initial);
}

TEST(Fsm, QuitFromEveryStateEndsSession) {
  for (const auto& p : reachable_positions()) {
    if (p.state == State::WrapUp) continue;
    const auto t = step(p, E::UserQuit);
    EXPECT_EQ(t.next.state, State::WrapUp);
    EXPECT_EQ(t.cues, std::vector<Cue>{Cue::WrapUp});
  }
  EXPECT_FALSE(step(at(State::WrapUp), E::UserQuit).accepted);
}

TEST(Fsm, UnknownPairsAreIgnored) {
  auto t = step(at(State::Movement), E::StartCue);
  EXPECT_FALSE(t.accepted);
  EXPECT_EQ(t.next, at(State::Movement));
  EXPECT_FALSE(step(at(State::Greeting), E::FrameAssessed).accepted);
  EXPECT_FALSE(step(at(State::Notify, true), E::StartCue).accepted);
  EXPECT_FALSE(step(at(State::Notify, false), E::Advance).accepted);

  Fsm fsm;
  EXPECT_FALSE(fsm.step({E::MotionComplete}).accepted);
  EXPECT_EQ(fsm.state(), State::Greeting);
}

TEST(Fsm, AllTenStatesReachable) {
  std::set<State> states;
  for (const auto& p : reachable_positions()) states.insert(p.state);
  EXPECT_EQ(states.size(), kStateCount);
}

TEST(Fsm, NoDeadPositions) { EXPECT_TRUE(dead_positions().empty()); }

TEST(Fsm, ExhaustiveTableIsDeterministic) {
  for (const auto& p : reachable_positions()) {
    for (auto k : kEventKinds) {
      for (bool f : {false, true}) {
        const auto a = step(p, k, f);
        const auto b = step(p, k, f);
        EXPECT_EQ(a.next, b.next);
        EXPECT_EQ(a.cues, b.cues);
        if (!a.accepted) EXPECT_EQ(a.next, p);
      }
    }
  }
}

TEST(Fsm, StatefulWrapperRunsAFullRepetition) {
  Fsm fsm;
  std::vector<State> seen{fsm.state()};
  for (Event ev : std::vector<Event>{{E::SessionStart, true}, {E::DemoEnd}, {E::ReadyConfirm}, {E::StartCue},
                                     {E::CompensationDetected}, {E::FrameAssessed, false, true}, {E::MotionComplete},
                                     {E::Advance}, {E::Advance}, {E::Advance}, {E::PrescriptionComplete}}) {
    ASSERT_TRUE(fsm.step(ev).accepted) << event_name(ev.kind);
    seen.push_back(fsm.state());
  }
  EXPECT_TRUE(fsm.finished());
  EXPECT_EQ(std::set<State>(seen.begin(), seen.end()).size(), kStateCount);
}
