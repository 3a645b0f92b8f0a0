#include <gtest/gtest.h>

#include "rehab/coach/feedback.hpp"
#include "rehab/errors.hpp"

using namespace rehab;
using namespace rehab::coach;

namespace {

std::string text_for(std::vector<std::string> ids, Verbosity v = Verbosity::Normal) {
  return feedback_text(std::span<const std::string>(ids), Component::Compensation, Exercise::E1, v);
}

hybrid::ClipVerdicts verdicts(int rom, int smooth) {
  hybrid::ClipVerdicts v;
  v.rom.label = rom;
  v.rom.score = rom ? 0.91 : 0.2;
  v.smoothness.label = smooth;
  v.smoothness.score = smooth ? 0.8 : 0.3;
  return v;
}

}  // namespace

TEST(Feedback, RuleTemplates) {
  EXPECT_EQ(text_for({"head-z"}), "Keep your head straight.");
  EXPECT_EQ(text_for({"shoulder-y"}), "Do not raise your shoulder.");
  EXPECT_EQ(text_for({"head-z", "shoulder-y"}), "Keep your head straight. Do not raise your shoulder.");
  for (const char* id : {"rom-e1", "rom-e2", "rom-e3", "smooth-x", "smooth-y", "smooth-z", "head-x", "head-y", "head-z",
                         "spine-x", "spine-y", "spine-z", "shoulder-x", "shoulder-y", "shoulder-z"}) {
    EXPECT_TRUE(rule_template(id)) << id;
  }
}

TEST(Feedback, OrderFollowsInputAndDeduplicates) {
  EXPECT_EQ(text_for({"shoulder-y", "head-z"}), "Do not raise your shoulder. Keep your head straight.");
  EXPECT_EQ(text_for({"elbow-q", "wrist-q"}), std::string(kGenericCorrection));
  EXPECT_EQ(text_for({"head-z", "bogus"}), "Keep your head straight. Please correct your posture.");
  EXPECT_EQ(text_for({"head-z", "shoulder-y"}, Verbosity::Brief), "Keep your head straight.");
}

TEST(Feedback, EmptyListIsAnError) { EXPECT_THROW(text_for({}), ValidationError); }

TEST(Feedback, FromViolations) {
  std::vector<rb::Violation> v{{"spine-z", rb::Direction::AtMost, 0.3, 0.15, 1.0}};
  EXPECT_EQ(feedback_text(std::span<const rb::Violation>(v), Component::Compensation, Exercise::E2),
            "Do not lean your trunk forward.");
}

TEST(Feedback, Stable) { EXPECT_EQ(text_for({"spine-x", "head-y"}), text_for({"spine-x", "head-y"})); }

TEST(Summary, PerComponentSentence) {
  EXPECT_EQ(summary_text(verdicts(1, 1), {}), "ROM achieved; motion smooth; no compensation.");
  const std::vector<rb::RuleGroup> two{rb::RuleGroup::Head, rb::RuleGroup::Shoulder};
  EXPECT_EQ(summary_text(verdicts(0, 1), two), "ROM not achieved; motion smooth; compensation at head and shoulder.");
  const std::vector<rb::RuleGroup> three{rb::RuleGroup::Head, rb::RuleGroup::Spine, rb::RuleGroup::Shoulder};
  EXPECT_EQ(summary_text(verdicts(1, 0), three),
            "ROM achieved; motion not smooth; compensation at head, spine and shoulder.");
  EXPECT_EQ(summary_text(verdicts(1, 1), {}, Verbosity::Detailed),
            "ROM achieved (0.91); motion smooth (0.80); no compensation.");
}

TEST(Summary, SessionAndEncouragement) {
  EXPECT_EQ(encouragement_text(3, 3), "Great work today!");
  EXPECT_EQ(encouragement_text(1, 3), "Well done, 2 to go.");
  EXPECT_EQ(session_summary_text(0, 4, 0, 0, 0), "No repetitions completed out of 4. See you next session.");
  EXPECT_NE(session_summary_text(2, 4, 1, 2, 0).find("2 of 4"), std::string::npos);
}

TEST(Names, RoundTrip) {
  for (auto k : {FeedbackKind::Corrective, FeedbackKind::Summary, FeedbackKind::Encouragement, FeedbackKind::Instruction,
                 FeedbackKind::Alert}) {
    EXPECT_EQ(parse_feedback_kind(feedback_kind_name(k)), k);
  }
  for (auto v : {Verbosity::Brief, Verbosity::Normal, Verbosity::Detailed}) EXPECT_EQ(parse_verbosity(verbosity_name(v)), v);
  EXPECT_THROW(parse_verbosity("loud"), ParseError);
}
