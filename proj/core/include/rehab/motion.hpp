#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rehab {

/// Tracked joints in the fixed order used by clip files (Kinect v2 body order).
enum class Joint : std::uint8_t {
  SpineBase,
  SpineMid,
  Neck,
  Head,
  ShoulderLeft,
  ElbowLeft,
  WristLeft,
  HandLeft,
  ShoulderRight,
  ElbowRight,
  WristRight,
  HandRight,
  HipLeft,
  KneeLeft,
  AnkleLeft,
  FootLeft,
  HipRight,
  KneeRight,
  AnkleRight,
  FootRight,
  SpineShoulder,
  HandTipLeft,
  ThumbLeft,
  HandTipRight,
  ThumbRight,
};

inline constexpr std::size_t kJointCount = 25;

std::string_view joint_name(Joint j);

enum class Axis : std::uint8_t { X, Y, Z };
inline constexpr std::array<Axis, 3> kAxes{Axis::X, Axis::Y, Axis::Z};
char axis_name(Axis a);

enum class Exercise : std::uint8_t { E1, E2, E3 };
inline constexpr std::array<Exercise, 3> kExercises{Exercise::E1, Exercise::E2, Exercise::E3};
std::string_view exercise_name(Exercise e);
Exercise parse_exercise(std::string_view s);

enum class Side : std::uint8_t { Affected, Unaffected };
std::string_view side_name(Side s);
Side parse_side(std::string_view s);

/// Assessed performance component.
enum class Component : std::uint8_t { Rom, Smoothness, Compensation };
inline constexpr std::array<Component, 3> kComponents{Component::Rom, Component::Smoothness,
                                                      Component::Compensation};
std::string_view component_name(Component c);
Component parse_component(std::string_view s);

/// Which arm performs the exercise.
enum class Arm : std::uint8_t { Left, Right };
std::string_view arm_name(Arm a);
Arm parse_arm(std::string_view s);

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](Axis a) const {
    switch (a) {
      case Axis::X: return x;
      case Axis::Y: return y;
      case Axis::Z: return z;
    }
    return x;
  }
  double& operator[](Axis a) {
    switch (a) {
      case Axis::X: return x;
      case Axis::Y: return y;
      case Axis::Z: return z;
    }
    return x;
  }

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  Vec3& operator+=(Vec3 o) { x += o.x; y += o.y; z += o.z; return *this; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

using JointPositions = std::array<Vec3, kJointCount>;

struct SkeletonFrame {
  double t = 0.0;  // seconds
  JointPositions joints{};

  const Vec3& operator[](Joint j) const { return joints[static_cast<std::size_t>(j)]; }
  Vec3& operator[](Joint j) { return joints[static_cast<std::size_t>(j)]; }
  double p(Joint j, Axis c) const { return (*this)[j][c]; }
};

/// Per-frame compensation flags, 1 = normal, 0 = compensated.
struct CompensationFlags {
  std::uint8_t head = 1;
  std::uint8_t spine = 1;
  std::uint8_t shoulder = 1;

  friend bool operator==(const CompensationFlags&, const CompensationFlags&) = default;
};

/// Ground-truth labels, 1 = correct/normal, 0 = incorrect/abnormal.
struct PerformanceLabels {
  std::uint8_t rom = 1;
  std::uint8_t smoothness = 1;
  std::vector<CompensationFlags> compensation;

  friend bool operator==(const PerformanceLabels&, const PerformanceLabels&) = default;
};

/// One exercise trial. Identity fields are fixed at construction.
class MotionClip {
 public:
  MotionClip(std::string subject_id, Exercise exercise, Side side, Arm arm,
             std::vector<SkeletonFrame> frames,
             std::optional<PerformanceLabels> labels = std::nullopt);

  const std::string& subject_id() const noexcept { return subject_id_; }
  Exercise exercise() const noexcept { return exercise_; }
  Side side() const noexcept { return side_; }
  Arm arm() const noexcept { return arm_; }
  std::span<const SkeletonFrame> frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.size(); }
  const SkeletonFrame& frame(std::size_t i) const { return frames_.at(i); }
  const std::optional<PerformanceLabels>& labels() const noexcept { return labels_; }

  /// Copy with the same identity and labels but different frames.
  MotionClip with_frames(std::vector<SkeletonFrame> frames) const;
  MotionClip with_labels(std::optional<PerformanceLabels> labels) const;

 private:
  std::string subject_id_;
  Exercise exercise_;
  Side side_;
  Arm arm_;
  std::vector<SkeletonFrame> frames_;
  std::optional<PerformanceLabels> labels_;
};

inline constexpr double kNominalFrameInterval = 1.0 / 30.0;
inline constexpr double kMaxGapIntervals = 3.0;
inline constexpr std::size_t kMinClipFrames = 10;
inline constexpr int kDefaultSmoothingWindow = 5;

enum class FindingKind : std::uint8_t {
  TooShort,
  NonFinite,
  NonMonotonicTimestamp,
  TimestampGap,
  LabelLengthMismatch,
};

struct ValidationFinding {
  FindingKind kind;
  std::size_t frame = 0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;

  bool ok() const noexcept { return findings.empty(); }
  std::size_t count(FindingKind kind) const;
  std::string summary() const;
};

ValidationReport validate_clip(const MotionClip& clip);

/// Throws ValidationError with the report summary if the clip is not valid.
void require_valid(const MotionClip& clip);

/// Causal trailing moving average over the last `window` raw frames.
/// Streaming counterpart of smooth_clip; both produce identical values.
class TrailingSmoother {
 public:
  explicit TrailingSmoother(int window = kDefaultSmoothingWindow);

  SkeletonFrame push(const SkeletonFrame& raw);
  void reset();
  int window() const noexcept { return window_; }

 private:
  int window_;
  std::vector<JointPositions> ring_;
  std::size_t next_ = 0;
  std::size_t filled_ = 0;
};

/// Trailing moving-average smoothing of every coordinate; fewer samples at
/// the start of the clip are averaged without padding.
MotionClip smooth_clip(const MotionClip& clip, int window = kDefaultSmoothingWindow);

}  // namespace rehab
