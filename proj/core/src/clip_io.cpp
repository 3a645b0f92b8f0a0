#include "rehab/clip_io.hpp"

#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>

#include "rehab/errors.hpp"

namespace rehab {

using nlohmann::json;

namespace {

std::uint8_t parse_binary(const json& v, const char* field, std::size_t line) {
  if (!v.is_number_integer()) throw ParseError(std::string(field) + " must be 0 or 1", line);
  const auto x = v.get<int>();
  if (x != 0 && x != 1) throw ParseError(std::string(field) + " must be 0 or 1", line);
  return static_cast<std::uint8_t>(x);
}

template <typename T>
T required(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", line);
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad field '") + key + "': " + e.what(), line);
  }
}

SkeletonFrame parse_frame(const json& rec, std::size_t line) {
  SkeletonFrame f;
  f.t = required<double>(rec, "t", line);
  auto it = rec.find("joints");
  if (it == rec.end() || !it->is_array()) throw ParseError("missing joints array", line);
  if (it->size() != kJointCount) {
    throw ParseError("expected 25 joints, got " + std::to_string(it->size()), line);
  }
  for (std::size_t j = 0; j < kJointCount; ++j) {
    const auto& p = (*it)[j];
    if (!p.is_array() || p.size() != 3) throw ParseError("joint must be [x,y,z]", line);
    for (const auto& c : p) {
      if (!c.is_number()) throw ParseError("joint coordinate must be a number", line);
    }
    f.joints[j] = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
  }
  return f;
}

}  // namespace

Arm infer_arm(std::span<const SkeletonFrame> frames) {
  double left = 0.0;
  double right = 0.0;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    left += distance(frames[i][Joint::WristLeft], frames[i - 1][Joint::WristLeft]);
    right += distance(frames[i][Joint::WristRight], frames[i - 1][Joint::WristRight]);
  }
  return left > right ? Arm::Left : Arm::Right;
}

MotionClip read_clip(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;

  auto next_record = [&](json& out) -> bool {
    while (std::getline(in, text)) {
      ++line_no;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out = json::parse(text);
      } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed record: ") + e.what(), line_no);
      }
      if (!out.is_object()) throw ParseError("record must be a JSON object", line_no);
      return true;
    }
    return false;
  };

  json header;
  if (!next_record(header)) throw ParseError("empty clip file: missing header", 1);
  const std::size_t header_line = line_no;
  const int version = required<int>(header, "schema_version", header_line);
  if (version != kClipSchemaVersion) {
    throw VersionError("clip schema_version " + std::to_string(version) + " not supported (expected " +
                       std::to_string(kClipSchemaVersion) + ")");
  }
  const auto subject = required<std::string>(header, "subject_id", header_line);
  Exercise exercise;
  Side side;
  try {
    exercise = parse_exercise(required<std::string>(header, "exercise", header_line));
    side = parse_side(required<std::string>(header, "side", header_line));
  } catch (const ParseError& e) {
    if (e.line() != 0) throw;
    throw ParseError(e.what(), header_line);
  }
  const bool has_labels = required<bool>(header, "has_labels", header_line);
  std::optional<Arm> arm;
  if (auto it = header.find("arm"); it != header.end()) {
    try {
      arm = parse_arm(it->get<std::string>());
    } catch (const std::exception& e) {
      throw ParseError(e.what(), header_line);
    }
  }

  PerformanceLabels labels;
  if (has_labels) {
    auto rom = header.find("rom");
    auto smooth = header.find("smoothness");
    if (rom == header.end() || smooth == header.end()) {
      throw ParseError("has_labels is true but rom/smoothness missing", header_line);
    }
    labels.rom = parse_binary(*rom, "rom", header_line);
    labels.smoothness = parse_binary(*smooth, "smoothness", header_line);
  }

  std::vector<SkeletonFrame> frames;
  json rec;
  while (next_record(rec)) {
    frames.push_back(parse_frame(rec, line_no));
    auto comp = rec.find("comp");
    if (has_labels) {
      if (comp == rec.end() || !comp->is_array() || comp->size() != 3) {
        throw ParseError("labelled clip frame needs comp [h,s,sh]", line_no);
      }
      labels.compensation.push_back({parse_binary((*comp)[0], "comp", line_no),
                                     parse_binary((*comp)[1], "comp", line_no),
                                     parse_binary((*comp)[2], "comp", line_no)});
    }
  }
  if (in.bad()) throw IoError("read failure");

  const Arm resolved = arm ? *arm : infer_arm(frames);
  std::optional<PerformanceLabels> out_labels;
  if (has_labels) out_labels = std::move(labels);
  return MotionClip(subject, exercise, side, resolved, std::move(frames), std::move(out_labels));
}

void write_clip(const MotionClip& clip, std::ostream& out) {
  json header = {
      {"schema_version", kClipSchemaVersion},
      {"subject_id", clip.subject_id()},
      {"exercise", exercise_name(clip.exercise())},
      {"side", side_name(clip.side())},
      {"arm", arm_name(clip.arm())},
      {"has_labels", clip.labels().has_value()},
  };
  const auto& labels = clip.labels();
  if (labels) {
    if (labels->compensation.size() != clip.size()) {
      throw ValidationError("compensation labels do not match frame count");
    }
    header["rom"] = labels->rom;
    header["smoothness"] = labels->smoothness;
  }
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < clip.size(); ++i) {
    const auto& f = clip.frame(i);
    json joints = json::array();
    for (const auto& p : f.joints) joints.push_back({p.x, p.y, p.z});
    json rec = {{"t", f.t}, {"joints", std::move(joints)}};
    if (labels) {
      const auto& c = labels->compensation[i];
      rec["comp"] = {c.head, c.spine, c.shoulder};
    }
    out << rec.dump() << '\n';
  }
}

MotionClip load_clip(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open clip file " + path.string());
  return read_clip(in);
}

void save_clip(const MotionClip& clip, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write clip file " + path.string());
  write_clip(clip, out);
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace rehab
