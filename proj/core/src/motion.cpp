#include "rehab/motion.hpp"

#include <sstream>

#include "rehab/errors.hpp"

namespace rehab {

namespace {

constexpr std::array<std::string_view, kJointCount> kJointNames{
    "spine-base",     "spine-mid",      "neck",          "head",
    "shoulder-left",  "elbow-left",     "wrist-left",    "hand-left",
    "shoulder-right", "elbow-right",    "wrist-right",   "hand-right",
    "hip-left",       "knee-left",      "ankle-left",    "foot-left",
    "hip-right",      "knee-right",     "ankle-right",   "foot-right",
    "spine-shoulder", "hand-tip-left",  "thumb-left",    "hand-tip-right",
    "thumb-right",
};

std::string_view finding_name(FindingKind k) {
  switch (k) {
    case FindingKind::TooShort: return "too-short";
    case FindingKind::NonFinite: return "non-finite";
    case FindingKind::NonMonotonicTimestamp: return "non-monotonic-timestamp";
    case FindingKind::TimestampGap: return "timestamp-gap";
    case FindingKind::LabelLengthMismatch: return "label-length-mismatch";
  }
  return "unknown";
}

}  // namespace

std::string_view joint_name(Joint j) { return kJointNames[static_cast<std::size_t>(j)]; }

char axis_name(Axis a) {
  switch (a) {
    case Axis::X: return 'x';
    case Axis::Y: return 'y';
    case Axis::Z: return 'z';
  }
  return '?';
}

std::string_view exercise_name(Exercise e) {
  switch (e) {
    case Exercise::E1: return "E1";
    case Exercise::E2: return "E2";
    case Exercise::E3: return "E3";
  }
  return "?";
}

Exercise parse_exercise(std::string_view s) {
  if (s == "E1") return Exercise::E1;
  if (s == "E2") return Exercise::E2;
  if (s == "E3") return Exercise::E3;
  throw ParseError("unknown exercise '" + std::string(s) + "'");
}

std::string_view side_name(Side s) { return s == Side::Affected ? "affected" : "unaffected"; }

Side parse_side(std::string_view s) {
  if (s == "affected") return Side::Affected;
  if (s == "unaffected") return Side::Unaffected;
  throw ParseError("unknown side '" + std::string(s) + "'");
}

std::string_view component_name(Component c) {
  switch (c) {
    case Component::Rom: return "rom";
    case Component::Smoothness: return "smoothness";
    case Component::Compensation: return "compensation";
  }
  return "?";
}

Component parse_component(std::string_view s) {
  if (s == "rom") return Component::Rom;
  if (s == "smoothness") return Component::Smoothness;
  if (s == "compensation") return Component::Compensation;
  throw ParseError("unknown component '" + std::string(s) + "'");
}

std::string_view arm_name(Arm a) { return a == Arm::Left ? "left" : "right"; }

Arm parse_arm(std::string_view s) {
  if (s == "left") return Arm::Left;
  if (s == "right") return Arm::Right;
  throw ParseError("unknown arm '" + std::string(s) + "'");
}

MotionClip::MotionClip(std::string subject_id, Exercise exercise, Side side, Arm arm,
                       std::vector<SkeletonFrame> frames,
                       std::optional<PerformanceLabels> labels)
    : subject_id_(std::move(subject_id)),
      exercise_(exercise),
      side_(side),
      arm_(arm),
      frames_(std::move(frames)),
      labels_(std::move(labels)) {}

MotionClip MotionClip::with_frames(std::vector<SkeletonFrame> frames) const {
  return MotionClip(subject_id_, exercise_, side_, arm_, std::move(frames), labels_);
}

MotionClip MotionClip::with_labels(std::optional<PerformanceLabels> labels) const {
  return MotionClip(subject_id_, exercise_, side_, arm_, frames_, std::move(labels));
}

std::size_t ValidationReport::count(FindingKind kind) const {
  std::size_t n = 0;
  for (const auto& f : findings) n += f.kind == kind ? 1 : 0;
  return n;
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  out << findings.size() << " finding(s)";
  for (const auto& f : findings) {
    out << "; " << finding_name(f.kind) << " at frame " << f.frame;
    if (!f.detail.empty()) out << " (" << f.detail << ")";
  }
  return out.str();
}

ValidationReport validate_clip(const MotionClip& clip) {
  ValidationReport report;
  const auto frames = clip.frames();
  if (frames.size() < kMinClipFrames) {
    report.findings.push_back({FindingKind::TooShort, 0,
                               std::to_string(frames.size()) + " frames, need " +
                                   std::to_string(kMinClipFrames)});
  }
  const double max_gap = kMaxGapIntervals * kNominalFrameInterval;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (!std::isfinite(f.t)) {
      report.findings.push_back({FindingKind::NonFinite, i, "timestamp"});
    }
    for (std::size_t j = 0; j < kJointCount; ++j) {
      if (!f.joints[j].finite()) {
        report.findings.push_back(
            {FindingKind::NonFinite, i, std::string(joint_name(static_cast<Joint>(j)))});
      }
    }
    if (i > 0) {
      const double dt = f.t - frames[i - 1].t;
      if (!(dt > 0.0)) {
        report.findings.push_back({FindingKind::NonMonotonicTimestamp, i, ""});
      } else if (dt > max_gap + 1e-9) {
        report.findings.push_back({FindingKind::TimestampGap, i, std::to_string(dt) + " s"});
      }
    }
  }
  if (clip.labels() && clip.labels()->compensation.size() != frames.size()) {
    report.findings.push_back({FindingKind::LabelLengthMismatch, 0,
                               std::to_string(clip.labels()->compensation.size()) +
                                   " compensation labels"});
  }
  return report;
}

void require_valid(const MotionClip& clip) {
  auto report = validate_clip(clip);
  if (!report.ok()) throw ValidationError("invalid clip: " + report.summary());
}

TrailingSmoother::TrailingSmoother(int window) : window_(window) {
  if (window < 1) throw ValidationError("smoothing window must be >= 1");
  ring_.resize(static_cast<std::size_t>(window));
}

SkeletonFrame TrailingSmoother::push(const SkeletonFrame& raw) {
  const auto w = ring_.size();
  ring_[next_] = raw.joints;
  next_ = (next_ + 1) % w;
  filled_ = std::min(filled_ + 1, w);

  SkeletonFrame out;
  out.t = raw.t;
  // Oldest to newest so batch and streaming sums agree bit for bit.
  const std::size_t oldest = (next_ + w - filled_) % w;
  for (std::size_t j = 0; j < kJointCount; ++j) {
    Vec3 sum;
    for (std::size_t k = 0; k < filled_; ++k) sum += ring_[(oldest + k) % w][j];
    out.joints[j] = sum / static_cast<double>(filled_);
  }
  return out;
}

void TrailingSmoother::reset() {
  next_ = 0;
  filled_ = 0;
}

MotionClip smooth_clip(const MotionClip& clip, int window) {
  if (clip.size() == 0) throw ValidationError("cannot smooth an empty clip");
  TrailingSmoother smoother(window);
  std::vector<SkeletonFrame> out;
  out.reserve(clip.size());
  for (const auto& f : clip.frames()) out.push_back(smoother.push(f));
  return clip.with_frames(std::move(out));
}

}  // namespace rehab
