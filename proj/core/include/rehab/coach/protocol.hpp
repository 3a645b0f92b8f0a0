#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rehab/coach/feedback.hpp"
#include "rehab/coach/fsm.hpp"
#include "rehab/hybrid.hpp"
#include "rehab/motion.hpp"

namespace rehab::coach {

inline constexpr int kProtocolVersion = 1;
/// Upper bound on a single framed message.
inline constexpr std::size_t kMaxMessageBytes = 16u << 20;

struct PrescribedExercise {
  Exercise exercise = Exercise::E1;
  int reps = 1;

  bool operator==(const PrescribedExercise&) const = default;
};

struct SessionConfig {
  std::vector<PrescribedExercise> prescription;
  std::string subject_id;
  Arm arm = Arm::Right;  // the affected arm
  int voting_window = hybrid::kDefaultVotingWindow;
  Verbosity verbosity = Verbosity::Normal;
  bool demo = false;  // the user wants the demonstration first

  /// Throws ValidationError.
  void validate() const;
  std::size_t total_reps() const;
  bool operator==(const SessionConfig&) const = default;
};

nlohmann::json config_to_json(const SessionConfig& c);
/// Throws ParseError or ValidationError.
SessionConfig config_from_json(const nlohmann::json& j);

enum class InboundType : std::uint8_t {
  Hello,
  Ready,
  StartCue,
  Quit,
  Frame,
  DemoRequest,
  DemoSkip,
  DemoEnd,
  MotionEnd,
};
std::string_view inbound_name(InboundType t);

struct Inbound {
  InboundType type = InboundType::Hello;
  int protocol = kProtocolVersion;      // hello only
  std::optional<SessionConfig> config;  // hello only
  std::optional<SkeletonFrame> frame;   // frame only
};

/// Throws ParseError for malformed text and VersionError for a hello with
/// another protocol version.
Inbound decode_inbound(std::string_view text);
std::string encode_inbound(const Inbound& m);

nlohmann::json frame_to_json(const SkeletonFrame& f);
SkeletonFrame frame_from_json(const nlohmann::json& j);

// Outbound messages. Every one carries "type" and the session time "t".
nlohmann::json state_message(State s, double t);
nlohmann::json feedback_message(const FeedbackEvent& e);
nlohmann::json verdict_message(const hybrid::Verdict& v, double t);
nlohmann::json progress_message(Exercise e, int rep, int total, double t);
/// Per-frame voted compensation flags (1 = normal), head/spine/shoulder.
nlohmann::json assessment_message(const std::array<int, 3>& flags, double t);
nlohmann::json end_message(const std::string& summary, double t);
nlohmann::json error_message(const std::string& code, const std::string& message);

FeedbackEvent feedback_from_message(const nlohmann::json& j);

/// Ordered outbound messages of one session; each gets a sequence number.
class SessionLog {
 public:
  void append(nlohmann::json message);
  const std::vector<nlohmann::json>& entries() const { return entries_; }
  std::vector<FeedbackEvent> feedback() const;
  std::vector<State> states() const;

  std::string to_jsonl() const;
  static SessionLog from_jsonl(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static SessionLog load(const std::filesystem::path& path);

  bool operator==(const SessionLog&) const = default;

 private:
  std::vector<nlohmann::json> entries_;
};

/// 4-byte big-endian length followed by UTF-8 JSON. Blocking.
void write_message(int fd, std::string_view payload);
/// nullopt on a clean end of stream before a header; throws IoError otherwise.
std::optional<std::string> read_message(int fd);

}  // namespace rehab::coach
