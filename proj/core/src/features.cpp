#include "rehab/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rehab/errors.hpp"

namespace rehab::features {

namespace {

constexpr double kDegenerateLength = 1e-12;

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double deadband(double a) { return std::abs(a) < kAccelDeadband ? 0.0 : a; }

Vec3 unit(Vec3 v, const char* what) {
  const double n = norm(v);
  if (n < kDegenerateLength) throw GeometryError(std::string("zero-length vector: ") + what);
  return v / n;
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::vector<std::string> column_names, std::size_t row_count)
    : names(std::move(column_names)), rows(row_count), cols(names.size()), values(rows * cols, 0.0) {}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
  return out;
}

LimbJoints limb_joints(Arm arm) {
  if (arm == Arm::Left) {
    return {Joint::ShoulderLeft, Joint::ElbowLeft, Joint::WristLeft, Joint::HipLeft, Joint::KneeLeft};
  }
  return {Joint::ShoulderRight, Joint::ElbowRight, Joint::WristRight, Joint::HipRight, Joint::KneeRight};
}

double joint_angle(Vec3 a, Vec3 vertex, Vec3 b) {
  const Vec3 u = a - vertex;
  const Vec3 v = b - vertex;
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu < kDegenerateLength || nv < kDegenerateLength) {
    throw GeometryError("joint angle with a zero-length limb vector");
  }
  const double c = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

double zero_crossing_ratio(std::span<const double> signal) {
  if (signal.size() < 2) throw InsufficientDataError("zero-crossing ratio needs at least 2 samples");
  int held = 0;
  std::size_t changes = 0;
  for (double v : signal) {
    const int s = sign_of(v);
    if (s == 0) continue;
    if (held != 0 && s != held) ++changes;
    held = s;
  }
  return static_cast<double>(changes) / static_cast<double>(signal.size() - 1);
}

double torso_reference(const SkeletonFrame& frame) {
  return distance(frame[Joint::SpineBase], frame[Joint::SpineShoulder]);
}

double arm_length(const SkeletonFrame& frame, Arm arm) {
  const auto limb = limb_joints(arm);
  return distance(frame[limb.shoulder], frame[limb.elbow]) + distance(frame[limb.elbow], frame[limb.wrist]);
}

Vec3 body_forward(const SkeletonFrame& frame) {
  Vec3 across = frame[Joint::ShoulderLeft] - frame[Joint::ShoulderRight];
  across.y = 0.0;
  Vec3 fwd = cross(across, kUp);
  fwd.y = 0.0;
  return unit(fwd, "shoulder line");
}

Vec3 target_point(Exercise exercise, const SkeletonFrame& initial, Arm arm) {
  const auto limb = limb_joints(arm);
  const Vec3 shoulder = initial[limb.shoulder];
  switch (exercise) {
    case Exercise::E1: {
      const double torso = torso_reference(initial);
      return initial[Joint::Head] - kUp * (0.08 * torso);
    }
    case Exercise::E2:
      return shoulder + body_forward(initial) * arm_length(initial, arm);
    case Exercise::E3: {
      const Vec3 dir = unit(body_forward(initial) - kUp, "cane line");
      return shoulder + dir * arm_length(initial, arm);
    }
  }
  return shoulder;
}

FeatureMatrix rom_features(const MotionClip& smoothed) {
  if (smoothed.size() == 0) throw InsufficientDataError("ROM features need at least one frame");
  const auto limb = limb_joints(smoothed.arm());
  const auto& initial = smoothed.frame(0);
  const double torso = torso_reference(initial);
  if (!(torso > kDegenerateLength)) throw GeometryError("degenerate torso reference");
  const Vec3 target = target_point(smoothed.exercise(), initial, smoothed.arm());

  FeatureMatrix m({"elbow_flexion", "shoulder_flexion", "elbow_extension", "target_distance",
                   "head_wrist_norm", "head_elbow_norm"},
                  smoothed.size());
  for (std::size_t t = 0; t < smoothed.size(); ++t) {
    const auto& f = smoothed.frame(t);
    const double elbow = joint_angle(f[limb.shoulder], f[limb.elbow], f[limb.wrist]);
    m.at(t, 0) = elbow;
    m.at(t, 1) = joint_angle(f[limb.elbow], f[limb.shoulder], f[limb.hip]);
    m.at(t, 2) = 180.0 - elbow;
    m.at(t, 3) = distance(f[limb.wrist], target);
    m.at(t, 4) = distance(f[Joint::Head], f[limb.wrist]) / torso;
    m.at(t, 5) = distance(f[Joint::Head], f[limb.elbow]) / torso;
  }
  return m;
}

std::vector<double> acceleration_series(const MotionClip& smoothed, Joint joint, Axis axis) {
  const auto frames = smoothed.frames();
  if (frames.size() < 3) throw InsufficientDataError("acceleration needs at least 3 frames");
  std::vector<double> vel(frames.size());
  for (std::size_t t = 1; t < frames.size(); ++t) {
    vel[t] = (frames[t].p(joint, axis) - frames[t - 1].p(joint, axis)) / (frames[t].t - frames[t - 1].t);
  }
  std::vector<double> acc;
  acc.reserve(frames.size() - 2);
  for (std::size_t t = 2; t < frames.size(); ++t) {
    acc.push_back((vel[t] - vel[t - 1]) / (frames[t].t - frames[t - 1].t));
  }
  return acc;
}

double acceleration_zcr(const MotionClip& smoothed, Joint joint, Axis axis) {
  auto acc = acceleration_series(smoothed, joint, axis);
  for (double& a : acc) a = deadband(a);
  return zero_crossing_ratio(acc);
}

FeatureMatrix smoothness_features(const MotionClip& smoothed) {
  const auto frames = smoothed.frames();
  if (frames.size() < 3) throw InsufficientDataError("smoothness features need at least 3 frames");
  const auto limb = limb_joints(smoothed.arm());
  const std::array<Joint, 2> joints{limb.wrist, limb.elbow};

  FeatureMatrix m({"wrist_vx", "wrist_vy", "wrist_vz", "elbow_vx", "elbow_vy", "elbow_vz",
                   "wrist_ax_change", "wrist_ay_change", "wrist_az_change", "elbow_ax_change",
                   "elbow_ay_change", "elbow_az_change"},
                  frames.size());
  for (std::size_t ji = 0; ji < joints.size(); ++ji) {
    for (std::size_t ai = 0; ai < 3; ++ai) {
      const Axis axis = kAxes[ai];
      const Joint j = joints[ji];
      const std::size_t vcol = ji * 3 + ai;
      for (std::size_t t = 1; t < frames.size(); ++t) {
        m.at(t, vcol) = (frames[t].p(j, axis) - frames[t - 1].p(j, axis)) / (frames[t].t - frames[t - 1].t);
      }
      m.at(0, vcol) = m.at(1, vcol);

      const std::size_t ccol = 6 + ji * 3 + ai;
      const auto acc = acceleration_series(smoothed, j, axis);
      int held = 0;
      for (std::size_t k = 0; k < acc.size(); ++k) {
        const int s = sign_of(deadband(acc[k]));
        if (s == 0) continue;
        if (held != 0 && s != held) m.at(k + 2, ccol) = 1.0;
        held = s;
      }
    }
  }
  return m;
}

FrameCompFeatures compensation_features(const SkeletonFrame& frame, const SkeletonFrame& initial,
                                        double torso_ref, Arm arm) {
  if (!(torso_ref > 0.0)) throw InvalidReferenceError("torso reference must be positive");
  const std::array<Joint, 3> joints{Joint::Head, Joint::SpineMid, limb_joints(arm).shoulder};
  FrameCompFeatures out{};
  for (std::size_t ji = 0; ji < 3; ++ji) {
    const Vec3 d = frame[joints[ji]] - initial[joints[ji]];
    out[ji * 3 + 0] = d.x / torso_ref;
    out[ji * 3 + 1] = d.y / torso_ref;
    out[ji * 3 + 2] = d.z / torso_ref;
  }
  return out;
}

FeatureMatrix compensation_matrix(const MotionClip& smoothed) {
  if (smoothed.size() == 0) throw InsufficientDataError("compensation features need at least one frame");
  const auto& initial = smoothed.frame(0);
  const double torso = torso_reference(initial);
  FeatureMatrix m({"head_dx", "head_dy", "head_dz", "spine_dx", "spine_dy", "spine_dz", "shoulder_dx",
                   "shoulder_dy", "shoulder_dz"},
                  smoothed.size());
  for (std::size_t t = 0; t < smoothed.size(); ++t) {
    const auto f = compensation_features(smoothed.frame(t), initial, torso, smoothed.arm());
    std::copy(f.begin(), f.end(), m.values.begin() + static_cast<std::ptrdiff_t>(t * m.cols));
  }
  return m;
}

FeatureVector summarize(const FeatureMatrix& m) {
  FeatureVector out;
  out.names.reserve(m.cols * kSummaryStats);
  out.values.reserve(m.cols * kSummaryStats);
  static constexpr std::array<const char*, kSummaryStats> kStatNames{"max", "min", "range", "mean", "std"};
  for (std::size_t c = 0; c < m.cols; ++c) {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      const double v = m.at(r, c);
      hi = std::max(hi, v);
      lo = std::min(lo, v);
      sum += v;
    }
    const double n = static_cast<double>(m.rows);
    const double mean = m.rows ? sum / n : 0.0;
    double ss = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      const double d = m.at(r, c) - mean;
      ss += d * d;
    }
    const double sd = m.rows ? std::sqrt(ss / n) : 0.0;
    if (m.rows == 0) hi = lo = 0.0;
    for (const char* stat : kStatNames) out.names.push_back(m.names[c] + "." + stat);
    out.values.insert(out.values.end(), {hi, lo, hi - lo, mean, sd});
  }
  return out;
}

double reach_ratio(const MotionClip& smoothed) {
  if (smoothed.size() == 0) throw InsufficientDataError("reach ratio needs frames");
  const auto limb = limb_joints(smoothed.arm());
  const auto& initial = smoothed.frame(0);
  const double base = initial[Joint::SpineBase].y;

  auto max_over = [&](auto&& value) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& f : smoothed.frames()) best = std::max(best, value(f));
    return best;
  };

  double numerator = 0.0;
  double denominator = 0.0;
  switch (smoothed.exercise()) {
    case Exercise::E1:
      numerator = max_over([&](const SkeletonFrame& f) { return f[limb.wrist].y - base; });
      denominator = max_over([&](const SkeletonFrame& f) { return f[Joint::SpineShoulder].y - base; });
      break;
    case Exercise::E2:
      numerator = max_over([&](const SkeletonFrame& f) { return f[limb.wrist].y - base; });
      denominator = max_over([&](const SkeletonFrame& f) { return f[limb.shoulder].y - base; });
      break;
    case Exercise::E3: {
      const Vec3 fwd = body_forward(initial);
      const Vec3 hip = initial[limb.hip];
      numerator = max_over([&](const SkeletonFrame& f) { return dot(f[limb.wrist] - hip, fwd); });
      denominator = dot(initial[limb.knee] - hip, fwd);
      break;
    }
  }
  if (!(denominator > kDegenerateLength)) throw GeometryError("reach reference is not above/ahead of the base");
  return numerator / denominator;
}

ClipAnalysis analyze_clip(const MotionClip& raw, int window) {
  require_valid(raw);
  return analyze_smoothed(smooth_clip(raw, window));
}

ClipAnalysis analyze_smoothed(MotionClip smoothed) {
  const Arm arm = smoothed.arm();
  ClipAnalysis a{std::move(smoothed), {}, {}, {}, {}, {}, 0.0, {}, 0.0};
  a.rom = rom_features(a.smoothed);
  a.smoothness = smoothness_features(a.smoothed);
  a.compensation = compensation_matrix(a.smoothed);
  a.rom_summary = summarize(a.rom);
  a.smoothness_summary = summarize(a.smoothness);
  a.reach = reach_ratio(a.smoothed);
  const Joint wrist = limb_joints(arm).wrist;
  for (std::size_t i = 0; i < 3; ++i) a.wrist_zcr[i] = acceleration_zcr(a.smoothed, wrist, kAxes[i]);
  a.torso_ref = torso_reference(a.smoothed.frame(0));
  return a;
}

}  // namespace rehab::features
