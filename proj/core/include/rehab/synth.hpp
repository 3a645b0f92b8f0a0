#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rehab/motion.hpp"

namespace rehab::synth {

enum class CompJoint : std::uint8_t { Head, Spine, Shoulder };
std::string_view comp_joint_name(CompJoint j);

/// Compensation labels flip where the smoothed offset exceeds this (torso units).
inline constexpr double kCompensationThreshold = 0.15;
/// ROM label is 1 iff the withheld reach fraction is at most this.
inline constexpr double kRomDeficitThreshold = 0.2;
/// Smoothness label is 1 iff every wrist acceleration zero-crossing ratio is at most this.
inline constexpr double kSmoothnessZcrThreshold = 0.2;

/// Tremor that the 30 Hz trailing average cannot hide and the label
/// derivation can therefore see.
inline constexpr double kTremorMinAmplitude = 0.010;  // m
inline constexpr double kTremorMaxAmplitude = 0.025;
inline constexpr double kTremorMinHz = 4.0;
inline constexpr double kTremorMaxHz = 5.0;

inline constexpr double kSensorNoise = 0.0005;  // m, per coordinate
inline constexpr double kFrameRate = 30.0;

struct SynthSubject {
  std::string id;
  double torso = 0.5;               // spine-base to spine-shoulder, m
  double upper_arm = 0.29;          // m
  double forearm = 0.26;            // m
  double shoulder_half_width = 0.18;
  double hip_half_width = 0.10;
  double knee_forward = 0.35;       // knee ahead of hip, m
  double shin = 0.42;
  Arm affected_arm = Arm::Left;
  double severity = 0.5;            // 0 mild .. 1 severe
  /// Habitual offset per compensation joint (torso units) reached at full
  /// reach; zero for typical subjects.
  std::array<Vec3, 3> baseline_shift{};
  double sway = 0.01;               // torso units
  std::uint64_t seed = 0;

  bool shifted_baseline() const;
  Arm arm_for(Side side) const;
  /// Same subject with every length multiplied by `factor`.
  SynthSubject scaled(double factor) const;
};

struct Tremor {
  double amplitude = 0.0;  // m, 0 = none
  double hz = 0.0;
};

struct CompSegment {
  CompJoint joint = CompJoint::Head;
  Axis axis = Axis::Z;
  double magnitude = 0.25;  // signed, torso units
  std::size_t first = 0;    // inclusive frame range where labels are 0
  std::size_t last = 0;
};

struct DefectSpec {
  double rom_deficit = 0.0;        // fraction of the reach withheld
  std::array<Tremor, 3> tremor{};  // wrist, per axis
  std::vector<CompSegment> compensation;

  /// Throws SpecError for values outside the documented envelopes.
  void validate() const;
  bool has_tremor() const;
};

/// Phase boundaries in frames, fixed by the clip seed.
struct Timing {
  std::size_t reach_start = 0;
  std::size_t reach_end = 0;
  std::size_t return_start = 0;
  std::size_t return_end = 0;
  std::size_t frames = 0;
};
Timing clip_timing(std::uint64_t seed);

/// Seated skeleton performing one repetition with the defects superimposed,
/// labels attached. Deterministic in (subject, exercise, side, defects, seed);
/// sensor noise depends on the seed alone.
MotionClip generate_clip(const SynthSubject& subject, Exercise exercise, Side side, const DefectSpec& defects,
                         std::uint64_t seed);

/// Labels recomputed from a clip through the feature pipeline. `twin` is the
/// same clip generated without compensation segments.
PerformanceLabels measure_labels(const MotionClip& clip, const MotionClip& twin);

struct ClipPlan {
  std::size_t subject = 0;
  Exercise exercise = Exercise::E1;
  Side side = Side::Unaffected;
  int rep = 0;
  DefectSpec defects;
  std::uint64_t seed = 0;
  std::string path;  // relative to the corpus root
};

struct CorpusOptions {
  std::size_t subjects = 15;
  int unaffected_reps = 10;
  int affected_reps = 10;
  std::uint64_t seed = 7;
  /// Every `shifted_every`-th subject (offset 1) gets a habitual baseline shift.
  std::size_t shifted_every = 3;
};

struct CorpusPlan {
  CorpusOptions options;
  std::vector<SynthSubject> subjects;
  std::vector<ClipPlan> clips;
};

CorpusPlan plan_corpus(const CorpusOptions& options);
MotionClip generate(const CorpusPlan& plan, const ClipPlan& clip);
/// Clip with the same plan minus compensation segments.
MotionClip generate_twin(const CorpusPlan& plan, const ClipPlan& clip);

/// Writes every clip plus manifest.jsonl; returns the number of clips.
std::size_t write_corpus(const CorpusPlan& plan, const std::filesystem::path& root, unsigned jobs = 1);

}  // namespace rehab::synth
