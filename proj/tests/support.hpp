#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rehab/eval.hpp"
#include "rehab/hybrid.hpp"
#include "rehab/motion.hpp"
#include "rehab/synth.hpp"

namespace rehab::testing {

/// Upright seated skeleton facing -z with the spine base at the origin.
SkeletonFrame rest_frame(double t = 0.0);

/// `n` copies of rest_frame at 30 Hz.
MotionClip still_clip(std::size_t n = 30, Exercise e = Exercise::E1, Side s = Side::Affected, Arm arm = Arm::Right);

/// Same clip with every joint moved by `delta`.
MotionClip translated(const MotionClip& c, Vec3 delta);
/// Same clip with every coordinate multiplied by `factor`.
MotionClip scaled(const MotionClip& c, double factor);

/// A default synthetic subject for single-clip tests.
synth::SynthSubject test_subject(std::uint64_t seed = 11);

/// Four-subject synthetic corpus, prepared once per process.
const std::vector<eval::CorpusEntry>& small_corpus();
const std::vector<eval::PreparedClip>& small_prepared();
/// Bundle trained on small_corpus(), once per process.
const hybrid::ModelBundle& small_bundle();

struct Episode {
  std::size_t first = 0;  // inclusive frame range
  std::size_t last = 0;
  std::size_t joint = 0;  // 0 head, 1 spine, 2 shoulder
};

/// Labelled compensation runs of a clip; empty for clean clips. A run that
/// involves more than one joint reports the first.
std::vector<Episode> episodes(const MotionClip& c);

/// A right-arm affected clip of small_corpus() whose labels hold exactly one
/// compensation episode, on `joint` when given. Throws if there is none.
const MotionClip& single_episode_clip(Exercise e, std::optional<std::size_t> joint = std::nullopt);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace rehab::testing
