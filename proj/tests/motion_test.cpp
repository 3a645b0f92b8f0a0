#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "rehab/clip_io.hpp"
#include "rehab/errors.hpp"
#include "rehab/random.hpp"
#include "support.hpp"

using namespace rehab;
using rehab::testing::rest_frame;
using rehab::testing::still_clip;

namespace {

MotionClip ramp_clip(std::size_t n) {
  std::vector<SkeletonFrame> frames;
  for (std::size_t i = 0; i < n; ++i) {
    auto f = rest_frame(static_cast<double>(i) / 30.0);
    f[Joint::WristRight].x = static_cast<double>(i + 1);
    frames.push_back(f);
  }
  return MotionClip("ramp", Exercise::E1, Side::Affected, Arm::Right, std::move(frames));
}

std::vector<SkeletonFrame> frames_of(const MotionClip& c) { return {c.frames().begin(), c.frames().end()}; }

}  // namespace

TEST(Joint, TwentyFiveNamedJoints) {
  EXPECT_EQ(kJointCount, 25u);
  EXPECT_EQ(joint_name(Joint::WristRight), "wrist-right");
  EXPECT_EQ(joint_name(Joint::SpineShoulder), "spine-shoulder");
}

TEST(Smoothing, ConstantClipIsUnchanged) {
  const auto c = still_clip(20);
  const auto s = smooth_clip(c);
  ASSERT_EQ(s.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      for (Axis a : kAxes) EXPECT_NEAR(s.frame(i).p(static_cast<Joint>(j), a), c.frame(i).p(static_cast<Joint>(j), a), 1e-12);
    }
  }
}

TEST(Smoothing, WindowOneIsIdentity) {
  const auto c = ramp_clip(12);
  const auto s = smooth_clip(c, 1);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      for (Axis a : kAxes) EXPECT_NEAR(s.frame(i).p(static_cast<Joint>(j), a), c.frame(i).p(static_cast<Joint>(j), a), 1e-12);
    }
  }
}

TEST(Smoothing, TrailingMeanOfLastFive) {
  const auto s = smooth_clip(ramp_clip(12), 5);
  EXPECT_DOUBLE_EQ(s.frame(5).p(Joint::WristRight, Axis::X), 4.0);
  // Fewer samples at the start are averaged without padding.
  EXPECT_DOUBLE_EQ(s.frame(0).p(Joint::WristRight, Axis::X), 1.0);
  EXPECT_DOUBLE_EQ(s.frame(1).p(Joint::WristRight, Axis::X), 1.5);
}

TEST(Smoothing, KeepsTimestampsAndLabels) {
  auto c = still_clip(15);
  PerformanceLabels l;
  l.rom = 0;
  l.compensation.assign(15, {});
  c = c.with_labels(l);
  const auto s = smooth_clip(c);
  EXPECT_EQ(s.labels(), c.labels());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(s.frame(i).t, c.frame(i).t);
}

TEST(Smoothing, RejectsEmptyClipAndBadWindow) {
  const MotionClip empty("x", Exercise::E1, Side::Affected, Arm::Right, {});
  EXPECT_THROW(smooth_clip(empty), ValidationError);
  EXPECT_THROW(smooth_clip(still_clip(12), 0), ValidationError);
}

TEST(Smoothing, CausalProperty) {
  // Output at frame t must not depend on frames after t.
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SkeletonFrame> frames;
    for (int i = 0; i < 30; ++i) {
      auto f = rest_frame(i / 30.0);
      for (auto& p : f.joints) p = p + Vec3{rng.normal(), rng.normal(), rng.normal()};
      frames.push_back(f);
    }
    const std::size_t cut = 10 + rng.index(20);
    const MotionClip full("p", Exercise::E2, Side::Affected, Arm::Left, frames);
    std::vector<SkeletonFrame> altered = frames;
    for (std::size_t i = cut; i < altered.size(); ++i) altered[i][Joint::Head].y += 5.0;
    const auto a = smooth_clip(full);
    const auto b = smooth_clip(full.with_frames(altered));
    for (std::size_t i = 0; i < cut; ++i) EXPECT_EQ(a.frame(i).joints, b.frame(i).joints);
  }
}

TEST(Smoothing, StreamingMatchesBatch) {
  const auto c = ramp_clip(25);
  TrailingSmoother s(5);
  const auto batch = smooth_clip(c, 5);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(s.push(c.frame(i)).joints, batch.frame(i).joints);
}

TEST(Validation, WellFormedClipHasNoFindings) { EXPECT_TRUE(validate_clip(still_clip(30)).ok()); }

TEST(Validation, NanIsOneNonFiniteFinding) {
  auto frames = frames_of(still_clip(30));
  frames[7][Joint::Head].y = std::nan("");
  const auto r = validate_clip(still_clip(30).with_frames(frames));
  EXPECT_EQ(r.count(FindingKind::NonFinite), 1u);
  EXPECT_EQ(r.findings.size(), 1u);
}

TEST(Validation, DuplicateTimestampIsMonotonicityFinding) {
  auto frames = frames_of(still_clip(30));
  frames[4].t = frames[3].t;
  const auto r = validate_clip(still_clip(30).with_frames(frames));
  EXPECT_EQ(r.count(FindingKind::NonMonotonicTimestamp), 1u);
}

TEST(Validation, GapsAndLengthAndLabels) {
  auto frames = frames_of(still_clip(30));
  for (std::size_t i = 10; i < frames.size(); ++i) frames[i].t += 0.2;
  EXPECT_EQ(validate_clip(still_clip(30).with_frames(frames)).count(FindingKind::TimestampGap), 1u);
  EXPECT_EQ(validate_clip(still_clip(9)).count(FindingKind::TooShort), 1u);
  PerformanceLabels l;
  l.compensation.assign(3, {});
  EXPECT_EQ(validate_clip(still_clip(12).with_labels(l)).count(FindingKind::LabelLengthMismatch), 1u);
  EXPECT_THROW(require_valid(still_clip(9)), ValidationError);
}

TEST(ClipIo, RoundTripIsBitExact) {
  Rng rng(5);
  std::vector<SkeletonFrame> frames;
  for (int i = 0; i < 15; ++i) {
    auto f = rest_frame(i / 30.0 + 1e-7 * rng.uniform());
    for (auto& p : f.joints) p = p + Vec3{rng.normal(0, 0.1), rng.normal(0, 0.1), rng.normal(0, 0.1)};
    frames.push_back(f);
  }
  PerformanceLabels l;
  l.rom = 0;
  l.smoothness = 1;
  for (int i = 0; i < 15; ++i) l.compensation.push_back({static_cast<std::uint8_t>(i % 2), 1, 0});
  const MotionClip c("S07", Exercise::E3, Side::Unaffected, Arm::Left, frames, l);
  std::stringstream ss;
  write_clip(c, ss);
  const auto back = read_clip(ss);
  EXPECT_EQ(back.subject_id(), "S07");
  EXPECT_EQ(back.exercise(), Exercise::E3);
  EXPECT_EQ(back.side(), Side::Unaffected);
  EXPECT_EQ(back.arm(), Arm::Left);
  EXPECT_EQ(back.labels(), c.labels());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(back.frame(i).t, c.frame(i).t);
    EXPECT_EQ(back.frame(i).joints, c.frame(i).joints);
  }
  std::stringstream again;
  write_clip(back, again);
  std::stringstream first;
  write_clip(c, first);
  EXPECT_EQ(first.str(), again.str());
}

TEST(ClipIo, UnlabelledClipLoadsWithoutLabels) {
  std::stringstream ss;
  write_clip(still_clip(12), ss);
  EXPECT_FALSE(read_clip(ss).labels().has_value());
}

TEST(ClipIo, TruncatedFileNamesTheLine) {
  std::stringstream ss;
  write_clip(still_clip(12), ss);
  std::string text = ss.str();
  text.resize(text.size() - 40);
  std::stringstream cut(text);
  try {
    read_clip(cut);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 13u);
  }
}

TEST(ClipIo, SchemaVersionMismatch) {
  std::stringstream ss(R"({"schema_version":2,"subject_id":"a","exercise":"E1","side":"affected","has_labels":false})");
  EXPECT_THROW(read_clip(ss), VersionError);
}

TEST(ClipIo, ArmInferredWhenAbsent) {
  std::vector<SkeletonFrame> frames;
  for (int i = 0; i < 12; ++i) {
    auto f = rest_frame(i / 30.0);
    f[Joint::WristLeft].y += 0.02 * i;
    frames.push_back(f);
  }
  std::stringstream out;
  write_clip(MotionClip("a", Exercise::E1, Side::Affected, Arm::Right, frames), out);
  std::string text = out.str();
  const auto pos = text.find(R"("arm":"right",)");
  ASSERT_NE(pos, std::string::npos);
  text.erase(pos, std::string(R"("arm":"right",)").size());
  std::stringstream in(text);
  EXPECT_EQ(read_clip(in).arm(), Arm::Left);
}

TEST(ClipIo, FileRoundTrip) {
  const auto dir = rehab::testing::temp_dir("clipio");
  const auto c = still_clip(14, Exercise::E2);
  save_clip(c, dir / "c.jsonl");
  const auto back = load_clip(dir / "c.jsonl");
  EXPECT_EQ(back.size(), 14u);
  EXPECT_THROW(load_clip(dir / "missing.jsonl"), IoError);
  std::filesystem::remove_all(dir);
}
