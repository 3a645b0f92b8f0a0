#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "rehab/motion.hpp"

namespace rehab::features {

inline constexpr std::size_t kRomBaseDim = 6;
inline constexpr std::size_t kSmoothnessBaseDim = 12;
inline constexpr std::size_t kCompensationDim = 9;
inline constexpr std::size_t kSummaryStats = 5;
inline constexpr std::size_t kRomSummaryDim = kRomBaseDim * kSummaryStats;                // 30
inline constexpr std::size_t kSmoothnessSummaryDim = kSmoothnessBaseDim * kSummaryStats;  // 60

/// Accelerations with magnitude below this (m/s^2) count as zero when
/// detecting sign changes; keeps sensor jitter from registering as tremor.
inline constexpr double kAccelDeadband = 0.5;

/// Row-major T x d matrix with named columns.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> column_names, std::size_t row_count);

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::vector<double> column(std::size_t c) const;
};

/// 5 statistics per base feature, ordered (max, min, range, mean, std).
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
};

/// Head, spine-mid, exercising shoulder displacement in x/y/z from the
/// initial frame, divided by the torso reference.
using FrameCompFeatures = std::array<double, kCompensationDim>;

/// Joints of the exercising limb.
struct LimbJoints {
  Joint shoulder;
  Joint elbow;
  Joint wrist;
  Joint hip;
  Joint knee;
};
LimbJoints limb_joints(Arm arm);

/// Angle at `vertex` between (a - vertex) and (b - vertex), degrees in [0, 180].
double joint_angle(Vec3 a, Vec3 vertex, Vec3 b);

/// Adjacent strict sign changes / (n - 1). Zeros keep the previous sign.
double zero_crossing_ratio(std::span<const double> signal);

/// ||spine-base - spine-shoulder||.
double torso_reference(const SkeletonFrame& frame);
/// Shoulder-elbow plus elbow-wrist length of the exercising arm.
double arm_length(const SkeletonFrame& frame, Arm arm);
/// Horizontal unit vector the body faces, from the shoulder line.
Vec3 body_forward(const SkeletonFrame& frame);
inline constexpr Vec3 kUp{0.0, 1.0, 0.0};

/// Body-relative exercise target for the wrist, from the initial frame.
///   E1: head centre lowered by 0.08 torso (mouth proxy)
///   E2: one arm length forward of the shoulder at shoulder height
///   E3: one arm length from the shoulder, 45 degrees forward-down
Vec3 target_point(Exercise exercise, const SkeletonFrame& initial, Arm arm);

/// Per-frame ROM features (d=6): elbow flexion, shoulder flexion, elbow
/// extension (degrees), wrist-target distance (m), head-wrist and head-elbow
/// distance over the torso reference.
FeatureMatrix rom_features(const MotionClip& smoothed);

/// Per-frame smoothness features (d=12): wrist then elbow velocity x/y/z
/// (m/s), then wrist then elbow acceleration sign-change indicators x/y/z.
FeatureMatrix smoothness_features(const MotionClip& smoothed);

FrameCompFeatures compensation_features(const SkeletonFrame& frame, const SkeletonFrame& initial,
                                        double torso_ref, Arm arm);

/// compensation_features for every frame (T x 9) against the first frame.
FeatureMatrix compensation_matrix(const MotionClip& smoothed);

FeatureVector summarize(const FeatureMatrix& m);

/// Finite-difference acceleration of one coordinate, samples for frames 2..T-1.
std::vector<double> acceleration_series(const MotionClip& smoothed, Joint joint, Axis axis);

/// Dead-banded acceleration zero-crossing ratio of one coordinate.
double acceleration_zcr(const MotionClip& smoothed, Joint joint, Axis axis);

/// Body-relative reach of the wrist, 1.0 meaning the therapist reference is met:
///   E1: max wrist height / max spine-shoulder height
///   E2: max wrist height / max shoulder height
///   E3: max forward wrist travel past the hip / knee forward offset
/// Heights are measured above the initial spine-base.
double reach_ratio(const MotionClip& smoothed);

/// Everything downstream models need from one clip.
struct ClipAnalysis {
  MotionClip smoothed;
  FeatureMatrix rom;
  FeatureMatrix smoothness;
  FeatureMatrix compensation;
  FeatureVector rom_summary;
  FeatureVector smoothness_summary;
  double reach = 0.0;
  std::array<double, 3> wrist_zcr{};  // x, y, z
  double torso_ref = 0.0;
};

/// Validates, smooths, and extracts all feature families.
ClipAnalysis analyze_clip(const MotionClip& raw, int window = kDefaultSmoothingWindow);
/// Same extraction for a clip that is already smoothed.
ClipAnalysis analyze_smoothed(MotionClip smoothed);

}  // namespace rehab::features
