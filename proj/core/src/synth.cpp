#include "rehab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "rehab/clip_io.hpp"
#include "rehab/errors.hpp"
#include "rehab/features.hpp"
#include "rehab/parallel.hpp"
#include "rehab/random.hpp"

namespace rehab::synth {

namespace {

constexpr Vec3 kUp{0.0, 1.0, 0.0};
constexpr Vec3 kForward{0.0, 0.0, -1.0};
constexpr Vec3 kSeatOrigin{0.0, 0.45, 2.2};
constexpr double kLabelMargin = 0.01;
constexpr std::size_t kSmoothing = kDefaultSmoothingWindow;

enum : std::uint64_t { kTimingStream = 1, kNoiseStream, kTremorStream, kSwayStream, kSubjectStream, kPlanStream };

/// Outward direction for an arm: the subject's left is -x.
Vec3 outward(Arm arm) { return arm == Arm::Left ? Vec3{-1.0, 0.0, 0.0} : Vec3{1.0, 0.0, 0.0}; }

double min_jerk(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  return tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

double progress(const Timing& tm, std::size_t k) {
  if (k <= tm.reach_start) return 0.0;
  if (k < tm.reach_end) {
    return min_jerk(static_cast<double>(k - tm.reach_start) / static_cast<double>(tm.reach_end - tm.reach_start));
  }
  if (k <= tm.return_start) return 1.0;
  if (k < tm.return_end) {
    return 1.0 - min_jerk(static_cast<double>(k - tm.return_start) /
                          static_cast<double>(tm.return_end - tm.return_start));
  }
  return 0.0;
}

Vec3 normalized(Vec3 v) {
  const double n = norm(v);
  return n > 0.0 ? v / n : v;
}

/// Elbow position for a two-link arm from shoulder to wrist; `pole` picks
/// the bending plane. The wrist stays where it is even when out of reach.
Vec3 solve_elbow(Vec3 shoulder, Vec3 wrist, double upper, double fore, Vec3 pole) {
  const Vec3 to_wrist = wrist - shoulder;
  double d = norm(to_wrist);
  const Vec3 n = d > 1e-9 ? to_wrist / d : Vec3{0.0, -1.0, 0.0};
  d = std::clamp(d, std::abs(upper - fore) + 1e-6, upper + fore);
  const double cos_a = std::clamp((upper * upper + d * d - fore * fore) / (2.0 * upper * d), -1.0, 1.0);
  const double sin_a = std::sqrt(1.0 - cos_a * cos_a);
  Vec3 b = pole - n * dot(pole, n);
  if (norm(b) < 1e-6) b = Vec3{0.0, -1.0, 0.0} - n * n.y;
  if (norm(b) < 1e-6) b = Vec3{1.0, 0.0, 0.0} - n * n.x;
  b = normalized(b);
  return shoulder + (n * cos_a + b * sin_a) * upper;
}

struct Body {
  JointPositions joints{};
  Vec3& operator[](Joint j) { return joints[static_cast<std::size_t>(j)]; }
  const Vec3& operator[](Joint j) const { return joints[static_cast<std::size_t>(j)]; }
};

Body rest_body(const SynthSubject& s) {
  Body b;
  const double T = s.torso;
  const Vec3 sb = kSeatOrigin;
  b[Joint::SpineBase] = sb;
  b[Joint::SpineMid] = sb + kUp * (0.5 * T);
  b[Joint::SpineShoulder] = sb + kUp * T;
  b[Joint::Neck] = sb + kUp * (1.1 * T);
  b[Joint::Head] = sb + kUp * (1.35 * T);
  for (Arm arm : {Arm::Left, Arm::Right}) {
    const Vec3 out = outward(arm);
    const bool left = arm == Arm::Left;
    const Vec3 shoulder = b[Joint::SpineShoulder] + out * s.shoulder_half_width - kUp * (0.05 * T);
    const Vec3 hip = sb + out * s.hip_half_width - kUp * (0.02 * T);
    const Vec3 knee = hip + kForward * s.knee_forward;
    const Vec3 ankle = knee - kUp * s.shin;
    b[left ? Joint::ShoulderLeft : Joint::ShoulderRight] = shoulder;
    b[left ? Joint::HipLeft : Joint::HipRight] = hip;
    b[left ? Joint::KneeLeft : Joint::KneeRight] = knee;
    b[left ? Joint::AnkleLeft : Joint::AnkleRight] = ankle;
    b[left ? Joint::FootLeft : Joint::FootRight] = ankle + kForward * (0.2 * T);
  }
  return b;
}

/// Wrist resting on the thigh with the upper arm hanging.
Vec3 rest_wrist(const SynthSubject& s, Vec3 shoulder) {
  return shoulder - kUp * (s.upper_arm + 0.8 * s.forearm) + kForward * (0.6 * s.forearm);
}

void place_hand(Body& b, Arm arm, double torso) {
  const bool left = arm == Arm::Left;
  const Vec3 elbow = b[left ? Joint::ElbowLeft : Joint::ElbowRight];
  const Vec3 wrist = b[left ? Joint::WristLeft : Joint::WristRight];
  const Vec3 dir = normalized(wrist - elbow);
  const Vec3 hand = wrist + dir * (0.08 * torso);
  b[left ? Joint::HandLeft : Joint::HandRight] = hand;
  b[left ? Joint::HandTipLeft : Joint::HandTipRight] = hand + dir * (0.08 * torso);
  b[left ? Joint::ThumbLeft : Joint::ThumbRight] = hand + outward(arm) * (-0.05 * torso) + kForward * (0.02 * torso);
}

/// Trailing moving average of a 1-D profile, matching the frame smoother.
std::vector<double> trailing_average(const std::vector<double>& p) {
  std::vector<double> q(p.size());
  for (std::size_t t = 0; t < p.size(); ++t) {
    const std::size_t lo = t + 1 >= kSmoothing ? t + 1 - kSmoothing : 0;
    double sum = 0.0;
    for (std::size_t i = lo; i <= t; ++i) sum += p[i];
    q[t] = sum / static_cast<double>(t - lo + 1);
  }
  return q;
}

/// Raw offset profile (torso units) for one segment, shaped so that after
/// smoothing it exceeds the label threshold exactly on [first, last].
std::vector<double> segment_profile(const CompSegment& seg, std::size_t frames) {
  const double m = std::abs(seg.magnitude);
  std::vector<double> p(frames, 0.0);
  if (m <= kCompensationThreshold) {
    for (std::size_t k = seg.first; k <= seg.last; ++k) p[k] = seg.magnitude;
    return p;
  }
  static constexpr std::array<double, 4> kEdges{1.0, 0.75, 0.5, 0.25};
  for (std::size_t s = seg.first - std::min<std::size_t>(seg.first - 1, kSmoothing + 1); s <= seg.first; ++s) {
    for (std::size_t e = seg.last >= kSmoothing ? seg.last - kSmoothing + 1 : seg.first; e <= seg.last + 1; ++e) {
      if (e <= s || e >= frames) continue;
      for (double fs : kEdges) {
        for (double fe : kEdges) {
          std::fill(p.begin(), p.end(), 0.0);
          for (std::size_t k = s; k <= e; ++k) p[k] = m;
          p[s] = fs * m;
          p[e] = fe * m;
          const auto q = trailing_average(p);
          bool ok = true;
          for (std::size_t t = 0; t < frames && ok; ++t) {
            const bool inside = t >= seg.first && t <= seg.last;
            ok = inside ? q[t] >= kCompensationThreshold + kLabelMargin : q[t] <= kCompensationThreshold - kLabelMargin;
          }
          if (ok) {
            if (seg.magnitude < 0.0) {
              for (double& v : p) v = -v;
            }
            return p;
          }
        }
      }
    }
  }
  throw SpecError("no raw profile places compensation exactly on frames " + std::to_string(seg.first) + "-" +
                  std::to_string(seg.last));
}

}  // namespace

std::string_view comp_joint_name(CompJoint j) {
  switch (j) {
    case CompJoint::Head: return "head";
    case CompJoint::Spine: return "spine";
    case CompJoint::Shoulder: return "shoulder";
  }
  return "?";
}

bool SynthSubject::shifted_baseline() const {
  for (const auto& v : baseline_shift) {
    if (norm(v) > 0.0) return true;
  }
  return false;
}

Arm SynthSubject::arm_for(Side side) const {
  if (side == Side::Affected) return affected_arm;
  return affected_arm == Arm::Left ? Arm::Right : Arm::Left;
}

SynthSubject SynthSubject::scaled(double factor) const {
  if (!(factor > 0.0)) throw SpecError("scale factor must be positive");
  SynthSubject s = *this;
  s.torso *= factor;
  s.upper_arm *= factor;
  s.forearm *= factor;
  s.shoulder_half_width *= factor;
  s.hip_half_width *= factor;
  s.knee_forward *= factor;
  s.shin *= factor;
  return s;
}

bool DefectSpec::has_tremor() const {
  return std::any_of(tremor.begin(), tremor.end(), [](const Tremor& t) { return t.amplitude > 0.0; });
}

void DefectSpec::validate() const {
  if (!(rom_deficit >= 0.0 && rom_deficit <= 1.0)) throw SpecError("rom deficit must lie in [0, 1]");
  for (const auto& t : tremor) {
    if (t.amplitude < 0.0 || !std::isfinite(t.amplitude)) throw SpecError("tremor amplitude must be non-negative");
    if (t.amplitude == 0.0) continue;
    if (t.amplitude < kTremorMinAmplitude || t.amplitude > kTremorMaxAmplitude) {
      throw SpecError("tremor amplitude outside the 10-25 mm envelope");
    }
    if (t.hz < kTremorMinHz || t.hz > kTremorMaxHz) throw SpecError("tremor frequency outside the 4-5 Hz envelope");
  }
  for (std::size_t i = 0; i < compensation.size(); ++i) {
    const auto& c = compensation[i];
    const double m = std::abs(c.magnitude);
    if (!std::isfinite(m) || m == 0.0 || m > 1.0) throw SpecError("compensation magnitude must lie in (0, 1]");
    if (std::abs(m - kCompensationThreshold) < kLabelMargin) {
      throw SpecError("compensation magnitude too close to the label threshold");
    }
    if (c.last < c.first) throw SpecError("compensation segment ends before it starts");
    if (c.first < kSmoothing + 1) throw SpecError("compensation segment must start after the smoothing warm-up");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = compensation[j];
      if (o.joint != c.joint || o.axis != c.axis) continue;
      if (c.first <= o.last + 2 * kSmoothing && o.first <= c.last + 2 * kSmoothing) {
        throw SpecError("overlapping compensation segments on one joint axis");
      }
    }
  }
}

Timing clip_timing(std::uint64_t seed) {
  Rng rng(derive_seed({seed, kTimingStream}));
  Timing tm;
  tm.reach_start = 12 + rng.index(7);
  const auto reach = static_cast<std::size_t>(std::lround(kFrameRate * rng.uniform(1.6, 2.2)));
  const std::size_t hold = 12;
  const auto back = static_cast<std::size_t>(std::lround(static_cast<double>(reach) * rng.uniform(0.9, 1.1)));
  tm.reach_end = tm.reach_start + reach;
  tm.return_start = tm.reach_end + hold;
  tm.return_end = tm.return_start + back;
  tm.frames = tm.return_end + 10 + rng.index(6);
  return tm;
}

MotionClip generate_clip(const SynthSubject& subject, Exercise exercise, Side side, const DefectSpec& defects,
                         std::uint64_t seed) {
  defects.validate();
  if (!(subject.torso > 0.0) || !(subject.upper_arm > 0.0) || !(subject.forearm > 0.0)) {
    throw SpecError("subject dimensions must be positive");
  }
  const Timing tm = clip_timing(seed);
  for (const auto& c : defects.compensation) {
    if (c.last + kSmoothing + 1 >= tm.frames) throw SpecError("compensation segment runs past the clip end");
  }
  const Arm arm = subject.arm_for(side);
  const Arm other = arm == Arm::Left ? Arm::Right : Arm::Left;
  const double T = subject.torso;
  const Body rest = rest_body(subject);

  const auto limb = features::limb_joints(arm);
  const auto idle = features::limb_joints(other);
  const Joint elbow_j = limb.elbow;
  const Joint wrist_j = limb.wrist;

  // Target from the clean rest pose with the exercising arm hanging.
  SkeletonFrame initial;
  initial.joints = rest.joints;
  const Vec3 shoulder0 = rest[limb.shoulder];
  const Vec3 wrist0 = rest_wrist(subject, shoulder0);
  initial[elbow_j] = solve_elbow(shoulder0, wrist0, subject.upper_arm, subject.forearm, kUp * -1.0);
  initial[wrist_j] = wrist0;
  const Vec3 target = features::target_point(exercise, initial, arm);
  const Vec3 goal = wrist0 + (target - wrist0) * (1.0 - defects.rom_deficit);
  const Vec3 pole = exercise == Exercise::E1 ? kUp * -1.0 + outward(arm) * 0.6 + kForward * 0.1
                                             : kUp * -1.0 + outward(arm) * 0.3;

  std::array<std::array<std::vector<double>, 3>, 3> offsets;  // [joint][axis]
  for (auto& j : offsets) {
    for (auto& a : j) a.assign(tm.frames, 0.0);
  }
  for (const auto& c : defects.compensation) {
    const auto p = segment_profile(c, tm.frames);
    auto& dst = offsets[static_cast<std::size_t>(c.joint)][static_cast<std::size_t>(c.axis)];
    for (std::size_t k = 0; k < tm.frames; ++k) dst[k] += p[k];
  }

  Rng tremor_rng(derive_seed({seed, kTremorStream}));
  std::array<double, 3> tremor_phase{};
  for (auto& ph : tremor_phase) ph = tremor_rng.uniform(0.0, 2.0 * std::numbers::pi);
  Rng sway_rng(derive_seed({seed, kSwayStream}));
  std::array<double, 6> sway_phase{};
  for (auto& ph : sway_phase) ph = sway_rng.uniform(0.0, 2.0 * std::numbers::pi);
  Rng noise(derive_seed({seed, kNoiseStream}));

  const Vec3 idle_elbow = rest[idle.shoulder] - kUp * subject.upper_arm + kForward * 0.02;
  const Vec3 idle_wrist = idle_elbow - kUp * (0.6 * subject.forearm) + kForward * (0.8 * subject.forearm);

  std::vector<SkeletonFrame> frames(tm.frames);
  std::vector<CompensationFlags> flags(tm.frames);
  for (std::size_t k = 0; k < tm.frames; ++k) {
    const double t = static_cast<double>(k) / kFrameRate;
    const double s = progress(tm, k);
    // A habitual offset is adopted early in the reach and held until the arm is back.
    const double habit = min_jerk(s / 0.4);
    Body b = rest;

    // Habitual posture: slow sway, a slight lean with the reach, and any
    // subject-specific baseline shift.
    const double sw = subject.sway * T;
    const Vec3 head_sway{sw * std::sin(2.0 * std::numbers::pi * 0.3 * t + sway_phase[0]),
                         0.3 * sw * std::sin(2.0 * std::numbers::pi * 0.2 * t + sway_phase[1]),
                         sw * std::sin(2.0 * std::numbers::pi * 0.25 * t + sway_phase[2])};
    const Vec3 trunk_sway{0.5 * sw * std::sin(2.0 * std::numbers::pi * 0.3 * t + sway_phase[3]), 0.0,
                          0.5 * sw * std::sin(2.0 * std::numbers::pi * 0.25 * t + sway_phase[4])};
    const std::array<Vec3, 3> posture{head_sway + kForward * (0.03 * T * s), trunk_sway + kForward * (0.015 * T * s),
                                      trunk_sway * 0.5};
    std::array<Vec3, 3> shift;
    for (std::size_t j = 0; j < 3; ++j) {
      shift[j] = posture[j] + subject.baseline_shift[j] * (T * habit);
      for (std::size_t a = 0; a < 3; ++a) shift[j][kAxes[a]] += offsets[j][a][k] * T;
    }
    b[Joint::Head] += shift[0];
    b[Joint::Neck] += shift[0] * 0.5;
    b[Joint::SpineMid] += shift[1];
    b[limb.shoulder] += shift[2];

    Vec3 wrist = wrist0 + (goal - wrist0) * s;
    for (std::size_t a = 0; a < 3; ++a) {
      const auto& tr = defects.tremor[a];
      if (tr.amplitude > 0.0) {
        wrist[kAxes[a]] += tr.amplitude * std::sin(2.0 * std::numbers::pi * tr.hz * t + tremor_phase[a]);
      }
    }
    b[wrist_j] = wrist;
    b[elbow_j] = solve_elbow(b[limb.shoulder], wrist, subject.upper_arm, subject.forearm, pole);
    b[idle.elbow] = idle_elbow;
    b[idle.wrist] = idle_wrist;
    place_hand(b, arm, T);
    place_hand(b, other, T);

    auto& f = frames[k];
    f.t = t;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      f.joints[j] = b.joints[j];
      f.joints[j].x += noise.normal(0.0, kSensorNoise);
      f.joints[j].y += noise.normal(0.0, kSensorNoise);
      f.joints[j].z += noise.normal(0.0, kSensorNoise);
    }
  }
  for (const auto& c : defects.compensation) {
    if (std::abs(c.magnitude) <= kCompensationThreshold) continue;
    for (std::size_t k = c.first; k <= c.last; ++k) {
      auto& fl = flags[k];
      (c.joint == CompJoint::Head ? fl.head : c.joint == CompJoint::Spine ? fl.spine : fl.shoulder) = 0;
    }
  }
  PerformanceLabels labels;
  labels.rom = defects.rom_deficit <= kRomDeficitThreshold ? 1 : 0;
  labels.smoothness = defects.has_tremor() ? 0 : 1;
  labels.compensation = std::move(flags);
  return MotionClip(subject.id, exercise, side, arm, std::move(frames), std::move(labels));
}

PerformanceLabels measure_labels(const MotionClip& clip, const MotionClip& twin) {
  if (clip.size() != twin.size()) throw ShapeError("twin clip differs in length");
  const MotionClip sm = smooth_clip(clip);
  const MotionClip tw = smooth_clip(twin);
  PerformanceLabels out;

  const auto rom = features::rom_features(sm);
  double closest = rom.at(0, 3);
  for (std::size_t t = 0; t < rom.rows; ++t) closest = std::min(closest, rom.at(t, 3));
  out.rom = closest / rom.at(0, 3) <= kRomDeficitThreshold ? 1 : 0;

  const Joint wrist = features::limb_joints(sm.arm()).wrist;
  out.smoothness = 1;
  for (Axis a : kAxes) {
    if (features::acceleration_zcr(sm, wrist, a) > kSmoothnessZcrThreshold) out.smoothness = 0;
  }

  const auto c = features::compensation_matrix(sm);
  const auto c0 = features::compensation_matrix(tw);
  out.compensation.resize(sm.size());
  for (std::size_t t = 0; t < sm.size(); ++t) {
    std::array<std::uint8_t, 3> ok{1, 1, 1};
    for (std::size_t col = 0; col < features::kCompensationDim; ++col) {
      if (std::abs(c.at(t, col) - c0.at(t, col)) > kCompensationThreshold) ok[col / 3] = 0;
    }
    out.compensation[t] = {ok[0], ok[1], ok[2]};
  }
  return out;
}

CorpusPlan plan_corpus(const CorpusOptions& options) {
  if (options.subjects < 2) throw SpecError("a corpus needs at least two subjects");
  if (options.unaffected_reps < 2 || options.affected_reps < 1) throw SpecError("too few repetitions per exercise");
  CorpusPlan plan;
  plan.options = options;
  for (std::size_t i = 0; i < options.subjects; ++i) {
    Rng rng(derive_seed({options.seed, i, kSubjectStream}));
    SynthSubject s;
    char id[16];
    std::snprintf(id, sizeof id, "S%02zu", i + 1);
    s.id = id;
    s.torso = rng.uniform(0.46, 0.58);
    const double arm = s.torso * rng.uniform(0.98, 1.12);
    s.upper_arm = 0.53 * arm;
    s.forearm = 0.47 * arm;
    s.shoulder_half_width = s.torso * rng.uniform(0.34, 0.40);
    s.hip_half_width = 0.2 * s.torso;
    s.shin = 0.85 * s.torso;
    s.affected_arm = rng.bernoulli(0.5) ? Arm::Left : Arm::Right;
    s.severity = rng.uniform(0.15, 0.85);
    s.sway = rng.uniform(0.005, 0.015);
    s.seed = derive_seed({options.seed, i});
    // Knee placement decides where the forward-reach rule flips; it varies
    // by subject around the labelled reach boundary.
    const double boundary = rng.uniform(-0.05, 0.45);
    const double rest_fwd = 0.6 * s.forearm;
    const double target_fwd = arm / std::numbers::sqrt2;
    s.knee_forward = rest_fwd + (1.0 - boundary) * (target_fwd - rest_fwd);
    if (options.shifted_every > 0 && i % options.shifted_every == 1) {
      const auto joint = (i / options.shifted_every) % 3;
      const auto skip = rng.index(3);
      for (std::size_t a = 0; a < 3; ++a) {
        if (a == skip) continue;
        const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        s.baseline_shift[joint][kAxes[a]] = sign * rng.uniform(0.16, 0.24);
      }
    }
    plan.subjects.push_back(std::move(s));
  }

  for (std::size_t i = 0; i < plan.subjects.size(); ++i) {
    const auto& subj = plan.subjects[i];
    for (Exercise e : kExercises) {
      const auto ei = static_cast<std::uint64_t>(e);
      Rng rng(derive_seed({options.seed, i, ei, kPlanStream}));
      auto add = [&](Side side, int rep, DefectSpec d) {
        ClipPlan c;
        c.subject = i;
        c.exercise = e;
        c.side = side;
        c.rep = rep;
        c.seed = derive_seed({options.seed, i, ei, static_cast<std::uint64_t>(side), static_cast<std::uint64_t>(rep)});
        c.defects = std::move(d);
        char name[64];
        std::snprintf(name, sizeof name, "%s/%s-%s-%02d.jsonl", subj.id.c_str(), std::string(exercise_name(e)).c_str(),
                      std::string(side_name(side)).c_str(), rep + 1);
        c.path = name;
        plan.clips.push_back(std::move(c));
      };

      for (int r = 0; r < options.unaffected_reps; ++r) {
        DefectSpec d;
        d.rom_deficit = rng.uniform(0.0, 0.1);
        add(Side::Unaffected, r, std::move(d));
      }

      const int n = options.affected_reps;
      auto pick = [&](double base, double slope) {
        const int count = std::clamp(static_cast<int>(std::lround(base + slope * subj.severity)), 1, std::max(1, n - 1));
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
        for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.index(k)]);
        std::vector<bool> chosen(static_cast<std::size_t>(n), false);
        for (int k = 0; k < std::min(count, n); ++k) chosen[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
        return chosen;
      };
      const auto rom_bad = pick(2.0, 6.0);
      const auto tremor = pick(1.0, 5.0);
      const auto comp = pick(2.0, 6.0);

      for (int r = 0; r < n; ++r) {
        const auto ri = static_cast<std::size_t>(r);
        DefectSpec d;
        d.rom_deficit = rom_bad[ri] ? rng.uniform(0.35, 0.75) : rng.uniform(0.0, 0.1);
        if (tremor[ri]) {
          const auto axes = 1 + rng.index(3);
          std::array<std::size_t, 3> order{0, 1, 2};
          for (std::size_t k = 3; k > 1; --k) std::swap(order[k - 1], order[rng.index(k)]);
          for (std::size_t k = 0; k < axes; ++k) {
            d.tremor[order[k]] = {rng.uniform(0.012, 0.024), rng.uniform(4.1, 4.9)};
          }
        }
        const Timing tm = clip_timing(derive_seed(
            {options.seed, i, ei, static_cast<std::uint64_t>(Side::Affected), static_cast<std::uint64_t>(r)}));
        std::array<bool, 3> used{};
        if (comp[ri]) {
          const int episodes = rng.bernoulli(0.4) ? 2 : 1;
          std::size_t cursor = tm.reach_start + 4 + rng.index(10);
          for (int ep = 0; ep < episodes; ++ep) {
            std::size_t joint = rng.index(3);
            while (used[joint]) joint = (joint + 1) % 3;
            const std::size_t len = 20 + rng.index(31);
            const std::size_t last = cursor + len;
            if (last + kSmoothing + 2 >= tm.frames) break;
            used[joint] = true;
            const auto skip = rng.index(3);
            for (std::size_t a = 0; a < 3; ++a) {
              if (a == skip) continue;
              const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
              d.compensation.push_back({static_cast<CompJoint>(joint), kAxes[a], sign * rng.uniform(0.22, 0.45), cursor, last});
            }
            cursor = last + 8 + rng.index(12);
          }
        }
        if (rng.bernoulli(0.3)) {
          // Small sub-threshold movement that must not be labelled.
          std::size_t joint = rng.index(3);
          while (used[joint]) joint = (joint + 1) % 3;
          if (!used[joint]) {
            const std::size_t first = tm.reach_start + rng.index(20);
            const std::size_t last = std::min(first + 15 + rng.index(20), tm.frames - kSmoothing - 3);
            const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
            d.compensation.push_back({static_cast<CompJoint>(joint), kAxes[rng.index(3)], sign * rng.uniform(0.04, 0.10), first, last});
          }
        }
        add(Side::Affected, r, std::move(d));
      }
    }
  }
  return plan;
}

MotionClip generate(const CorpusPlan& plan, const ClipPlan& clip) {
  return generate_clip(plan.subjects.at(clip.subject), clip.exercise, clip.side, clip.defects, clip.seed);
}

MotionClip generate_twin(const CorpusPlan& plan, const ClipPlan& clip) {
  DefectSpec d = clip.defects;
  d.compensation.clear();
  return generate_clip(plan.subjects.at(clip.subject), clip.exercise, clip.side, d, clip.seed);
}

std::size_t write_corpus(const CorpusPlan& plan, const std::filesystem::path& root, unsigned jobs) {
  std::filesystem::create_directories(root);
  std::vector<std::string> rows(plan.clips.size());
  parallel_for(plan.clips.size(), jobs, [&](std::size_t idx) {
    const auto& c = plan.clips[idx];
    const auto clip = generate(plan, c);
    save_clip(clip, root / c.path);
    const auto& subj = plan.subjects[c.subject];
    std::array<std::size_t, 3> comp{};
    for (const auto& f : clip.labels()->compensation) {
      comp[0] += f.head == 0;
      comp[1] += f.spine == 0;
      comp[2] += f.shoulder == 0;
    }
    nlohmann::json fixtures = nlohmann::json::array();
    if (subj.shifted_baseline()) fixtures.push_back("shifted-baseline");
    if (c.defects.has_tremor()) fixtures.push_back("tremor");
    nlohmann::json row = {
        {"path", c.path},
        {"subject_id", subj.id},
        {"exercise", exercise_name(c.exercise)},
        {"side", side_name(c.side)},
        {"arm", arm_name(clip.arm())},
        {"seed", c.seed},
        {"frames", clip.size()},
        {"labels",
         {{"rom", clip.labels()->rom},
          {"smoothness", clip.labels()->smoothness},
          {"compensated_frames", {{"head", comp[0]}, {"spine", comp[1]}, {"shoulder", comp[2]}}}}},
        {"severity", subj.severity},
        {"rom_deficit", c.defects.rom_deficit},
        {"fixtures", std::move(fixtures)},
    };
    rows[idx] = row.dump();
  });
  const auto manifest = root / "manifest.jsonl";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw IoError("cannot write " + manifest.string());
  for (const auto& r : rows) out << r << '\n';
  if (!out) throw IoError("write failure on " + manifest.string());
  return rows.size();
}

}  // namespace rehab::synth
