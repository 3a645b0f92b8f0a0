#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <unistd.h>

namespace rehab::testing {

SkeletonFrame rest_frame(double t) {
  SkeletonFrame f;
  f.t = t;
  auto set = [&](Joint j, double x, double y, double z) { f[j] = {x, y, z}; };
  set(Joint::SpineBase, 0.0, 0.0, 0.0);
  set(Joint::SpineMid, 0.0, 0.25, 0.0);
  set(Joint::SpineShoulder, 0.0, 0.5, 0.0);
  set(Joint::Neck, 0.0, 0.58, 0.0);
  set(Joint::Head, 0.0, 0.7, 0.0);
  for (int side : {-1, 1}) {
    const bool left = side < 0;
    const double sx = 0.18 * side;
    set(left ? Joint::ShoulderLeft : Joint::ShoulderRight, sx, 0.5, 0.0);
    set(left ? Joint::ElbowLeft : Joint::ElbowRight, sx + 0.01 * side, 0.21, 0.0);
    set(left ? Joint::WristLeft : Joint::WristRight, sx + 0.02 * side, 0.0, -0.08);
    set(left ? Joint::HandLeft : Joint::HandRight, sx + 0.02 * side, -0.06, -0.1);
    set(left ? Joint::HandTipLeft : Joint::HandTipRight, sx + 0.02 * side, -0.1, -0.12);
    set(left ? Joint::ThumbLeft : Joint::ThumbRight, sx, -0.06, -0.12);
    set(left ? Joint::HipLeft : Joint::HipRight, 0.1 * side, 0.0, 0.0);
    set(left ? Joint::KneeLeft : Joint::KneeRight, 0.1 * side, 0.0, -0.35);
    set(left ? Joint::AnkleLeft : Joint::AnkleRight, 0.1 * side, -0.42, -0.35);
    set(left ? Joint::FootLeft : Joint::FootRight, 0.1 * side, -0.45, -0.45);
  }
  return f;
}

MotionClip still_clip(std::size_t n, Exercise e, Side s, Arm arm) {
  std::vector<SkeletonFrame> frames;
  for (std::size_t i = 0; i < n; ++i) frames.push_back(rest_frame(static_cast<double>(i) / 30.0));
  return MotionClip("still", e, s, arm, std::move(frames));
}

MotionClip translated(const MotionClip& c, Vec3 delta) {
  std::vector<SkeletonFrame> frames(c.frames().begin(), c.frames().end());
  for (auto& f : frames) {
    for (auto& p : f.joints) p = p + delta;
  }
  return c.with_frames(std::move(frames));
}

MotionClip scaled(const MotionClip& c, double factor) {
  std::vector<SkeletonFrame> frames(c.frames().begin(), c.frames().end());
  for (auto& f : frames) {
    for (auto& p : f.joints) p = p * factor;
  }
  return c.with_frames(std::move(frames));
}

synth::SynthSubject test_subject(std::uint64_t seed) {
  synth::SynthSubject s;
  s.id = "T01";
  s.seed = seed;
  s.affected_arm = Arm::Right;
  return s;
}

const std::vector<eval::CorpusEntry>& small_corpus() {
  static const auto corpus = [] {
    synth::CorpusOptions o;
    o.subjects = 4;
    o.seed = 21;
    return eval::corpus_from_plan(synth::plan_corpus(o));
  }();
  return corpus;
}

const std::vector<eval::PreparedClip>& small_prepared() {
  static const auto prepared = eval::prepare(small_corpus());
  return prepared;
}

const hybrid::ModelBundle& small_bundle() {
  static const auto bundle = eval::train_bundle(small_prepared());
  return bundle;
}

std::vector<Episode> episodes(const MotionClip& c) {
  std::vector<Episode> out;
  if (!c.labels()) return out;
  const auto& comp = c.labels()->compensation;
  for (std::size_t t = 0; t < comp.size(); ++t) {
    const std::array<int, 3> f{comp[t].head, comp[t].spine, comp[t].shoulder};
    const auto bad = std::find(f.begin(), f.end(), 0);
    if (bad == f.end()) continue;
    if (!out.empty() && out.back().last + 1 == t) {
      out.back().last = t;
    } else {
      out.push_back({t, t, static_cast<std::size_t>(bad - f.begin())});
    }
  }
  return out;
}

const MotionClip& single_episode_clip(Exercise e, std::optional<std::size_t> joint) {
  for (const auto& entry : small_corpus()) {
    const auto& c = entry.clip;
    if (c.exercise() != e || c.side() != Side::Affected || c.arm() != Arm::Right) continue;
    const auto eps = episodes(c);
    if (eps.size() == 1 && (!joint || eps[0].joint == *joint)) return c;
  }
  throw std::runtime_error("small corpus has no single-episode clip for this request");
}

std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("rehab-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace rehab::testing
