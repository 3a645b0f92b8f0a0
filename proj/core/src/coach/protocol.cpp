#include "rehab/coach/protocol.hpp"

#include <array>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "rehab/errors.hpp"

namespace rehab::coach {

using nlohmann::json;

void SessionConfig::validate() const {
  if (prescription.empty()) throw ValidationError("prescription is empty");
  for (const auto& p : prescription) {
    if (p.reps < 1) throw ValidationError("repetitions must be at least 1");
  }
  if (voting_window < 1 || voting_window > hybrid::kMaxVotingWindow) {
    throw ValidationError("voting window must be 1..30");
  }
}

std::size_t SessionConfig::total_reps() const {
  std::size_t n = 0;
  for (const auto& p : prescription) n += static_cast<std::size_t>(std::max(p.reps, 0));
  return n;
}

json config_to_json(const SessionConfig& c) {
  json rx = json::array();
  for (const auto& p : c.prescription) rx.push_back({{"exercise", exercise_name(p.exercise)}, {"reps", p.reps}});
  return {{"prescription", rx},
          {"subject_id", c.subject_id},
          {"arm", arm_name(c.arm)},
          {"voting_window", c.voting_window},
          {"verbosity", verbosity_name(c.verbosity)},
          {"demo", c.demo}};
}

SessionConfig config_from_json(const json& j) {
  SessionConfig c;
  try {
    if (!j.is_object()) throw ParseError("session_config must be an object");
    for (const auto& p : j.at("prescription")) {
      c.prescription.push_back({parse_exercise(p.at("exercise").get<std::string>()), p.at("reps").get<int>()});
    }
    c.subject_id = j.value("subject_id", std::string());
    if (j.contains("arm")) c.arm = parse_arm(j.at("arm").get<std::string>());
    c.voting_window = j.value("voting_window", hybrid::kDefaultVotingWindow);
    if (j.contains("verbosity")) c.verbosity = parse_verbosity(j.at("verbosity").get<std::string>());
    c.demo = j.value("demo", false);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad session_config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string_view inbound_name(InboundType t) {
  switch (t) {
    case InboundType::Hello: return "hello";
    case InboundType::Ready: return "ready";
    case InboundType::StartCue: return "start_cue";
    case InboundType::Quit: return "quit";
    case InboundType::Frame: return "frame";
    case InboundType::DemoRequest: return "demo_request";
    case InboundType::DemoSkip: return "demo_skip";
    case InboundType::DemoEnd: return "demo_end";
    case InboundType::MotionEnd: return "motion_end";
  }
  return "?";
}

json frame_to_json(const SkeletonFrame& f) {
  json joints = json::array();
  for (const auto& p : f.joints) joints.push_back({p.x, p.y, p.z});
  return {{"t", f.t}, {"joints", std::move(joints)}};
}

SkeletonFrame frame_from_json(const json& j) {
  SkeletonFrame f;
  try {
    f.t = j.at("t").get<double>();
    const auto& joints = j.at("joints");
    if (!joints.is_array() || joints.size() != kJointCount) {
      throw ParseError("frame needs " + std::to_string(kJointCount) + " joints");
    }
    for (std::size_t i = 0; i < kJointCount; ++i) {
      const auto& p = joints[i];
      if (!p.is_array() || p.size() != 3) throw ParseError("joint " + std::to_string(i) + " is not [x,y,z]");
      f.joints[i] = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad frame: ") + e.what());
  }
  return f;
}

Inbound decode_inbound(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("message is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw ParseError("message needs a string \"type\"");
  }
  const auto type = j["type"].get<std::string>();
  Inbound m;
  bool known = false;
  for (auto t : {InboundType::Hello, InboundType::Ready, InboundType::StartCue, InboundType::Quit, InboundType::Frame,
                 InboundType::DemoRequest, InboundType::DemoSkip, InboundType::DemoEnd, InboundType::MotionEnd}) {
    if (inbound_name(t) == type) {
      m.type = t;
      known = true;
    }
  }
  if (!known) throw ParseError("unknown message type '" + type + "'");
  if (m.type == InboundType::Hello) {
    if (!j.contains("protocol") || !j["protocol"].is_number_integer()) throw ParseError("hello needs \"protocol\"");
    m.protocol = j["protocol"].get<int>();
    if (m.protocol != kProtocolVersion) {
      throw VersionError("protocol " + std::to_string(m.protocol) + " not supported (server speaks " +
                         std::to_string(kProtocolVersion) + ")");
    }
    if (!j.contains("session_config")) throw ParseError("hello needs \"session_config\"");
    m.config = config_from_json(j["session_config"]);
  } else if (m.type == InboundType::Frame) {
    m.frame = frame_from_json(j);
  }
  return m;
}

std::string encode_inbound(const Inbound& m) {
  json j;
  if (m.type == InboundType::Frame) {
    if (!m.frame) throw ValidationError("frame message without a frame");
    j = frame_to_json(*m.frame);
  }
  j["type"] = inbound_name(m.type);
  if (m.type == InboundType::Hello) {
    if (!m.config) throw ValidationError("hello without a session config");
    j["protocol"] = m.protocol;
    j["session_config"] = config_to_json(*m.config);
  }
  return j.dump();
}

json state_message(State s, double t) { return {{"type", "state"}, {"t", t}, {"name", state_name(s)}}; }

json feedback_message(const FeedbackEvent& e) {
  return {{"type", "feedback"},    {"t", e.t},         {"kind", feedback_kind_name(e.kind)},
          {"text", e.text},        {"rules", e.rules}, {"state", state_name(e.state)}};
}

json verdict_message(const hybrid::Verdict& v, double t) {
  json violated = json::array();
  for (const auto& x : v.violated) {
    violated.push_back({{"rule", x.rule_id}, {"value", x.value}, {"threshold", x.threshold}, {"magnitude", x.magnitude}});
  }
  json j = {{"type", "verdict"},
            {"t", t},
            {"component", component_name(v.component)},
            {"label", v.label},
            {"score", v.score},
            {"source", hybrid::source_name(v.source)},
            {"ml_score", v.ml_score},
            {"rb_score", v.rb_score},
            {"violated", std::move(violated)}};
  if (v.joint) j["joint"] = rb::group_name(*v.joint);
  return j;
}

json progress_message(Exercise e, int rep, int total, double t) {
  return {{"type", "progress"}, {"t", t}, {"exercise", exercise_name(e)}, {"rep", rep}, {"total", total}};
}

json assessment_message(const std::array<int, 3>& flags, double t) {
  return {{"type", "assessment"}, {"t", t}, {"flags", flags}};
}

json end_message(const std::string& summary, double t) { return {{"type", "end"}, {"t", t}, {"summary", summary}}; }

json error_message(const std::string& code, const std::string& message) {
  return {{"type", "error"}, {"code", code}, {"message", message}};
}

FeedbackEvent feedback_from_message(const json& j) {
  try {
    FeedbackEvent e;
    e.kind = parse_feedback_kind(j.at("kind").get<std::string>());
    e.text = j.at("text").get<std::string>();
    e.rules = j.at("rules").get<std::vector<std::string>>();
    e.t = j.at("t").get<double>();
    e.state = parse_state(j.at("state").get<std::string>());
    return e;
  } catch (const json::exception& ex) {
    throw ParseError(std::string("bad feedback message: ") + ex.what());
  }
}

void SessionLog::append(json message) {
  message["seq"] = entries_.size();
  entries_.push_back(std::move(message));
}

std::vector<FeedbackEvent> SessionLog::feedback() const {
  std::vector<FeedbackEvent> out;
  for (const auto& e : entries_) {
    if (e.value("type", "") == "feedback") out.push_back(feedback_from_message(e));
  }
  return out;
}

std::vector<State> SessionLog::states() const {
  std::vector<State> out;
  for (const auto& e : entries_) {
    if (e.value("type", "") == "state") out.push_back(parse_state(e.at("name").get<std::string>()));
  }
  return out;
}

std::string SessionLog::to_jsonl() const {
  std::string out;
  for (const auto& e : entries_) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

SessionLog SessionLog::from_jsonl(std::string_view text) {
  SessionLog log;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      log.entries_.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return log;
}

void SessionLog::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_jsonl();
  if (!out) throw IoError("write failed for " + path.string());
}

SessionLog SessionLog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str());
}

namespace {

void write_all(int fd, const char* data, std::size_t n) {
  while (n > 0) {
    const auto w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("socket write failed: ") + std::strerror(errno));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Returns bytes read; short only at end of stream.
std::size_t read_all(int fd, char* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const auto r = ::read(fd, data + got, n - got);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("socket read failed: ") + std::strerror(errno));
    }
    if (r == 0) break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

}  // namespace

void write_message(int fd, std::string_view payload) {
  if (payload.size() > kMaxMessageBytes) throw IoError("message too large");
  const auto n = static_cast<std::uint32_t>(payload.size());
  const std::array<char, 4> header{static_cast<char>(n >> 24), static_cast<char>(n >> 16), static_cast<char>(n >> 8),
                                   static_cast<char>(n)};
  write_all(fd, header.data(), header.size());
  write_all(fd, payload.data(), payload.size());
}

std::optional<std::string> read_message(int fd) {
  std::array<unsigned char, 4> header{};
  const auto got = read_all(fd, reinterpret_cast<char*>(header.data()), header.size());
  if (got == 0) return std::nullopt;
  if (got < header.size()) throw IoError("truncated message header");
  const std::uint32_t n = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                          (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  if (n > kMaxMessageBytes) throw IoError("message of " + std::to_string(n) + " bytes exceeds the limit");
  std::string payload(n, '\0');
  if (read_all(fd, payload.data(), n) < n) throw IoError("truncated message body");
  return payload;
}

}  // namespace rehab::coach
