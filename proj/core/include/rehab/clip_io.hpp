#pragma once

#include <filesystem>
#include <iosfwd>

#include "rehab/motion.hpp"

namespace rehab {

inline constexpr int kClipSchemaVersion = 1;

/// JSON-lines clip format. Line 1 is the header
///   {"schema_version":1,"subject_id":..,"exercise":"E1","side":"affected",
///    "arm":"right","has_labels":true,"rom":1,"smoothness":1}
/// followed by one frame record per line
///   {"t":0.0,"joints":[[x,y,z] x 25 in Joint order],"comp":[h,s,sh]}.
/// Coordinates are written with round-trip precision. "arm" is optional on
/// read; when absent the arm is inferred from wrist travel.
MotionClip read_clip(std::istream& in);
void write_clip(const MotionClip& clip, std::ostream& out);

MotionClip load_clip(const std::filesystem::path& path);
void save_clip(const MotionClip& clip, const std::filesystem::path& path);

/// Arm whose wrist travels farther over the clip.
Arm infer_arm(std::span<const SkeletonFrame> frames);

}  // namespace rehab
