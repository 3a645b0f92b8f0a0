#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rehab/coach/fsm.hpp"
#include "rehab/hybrid.hpp"
#include "rehab/motion.hpp"
#include "rehab/rules.hpp"

namespace rehab::coach {

enum class FeedbackKind : std::uint8_t { Corrective, Summary, Encouragement, Instruction, Alert };
std::string_view feedback_kind_name(FeedbackKind k);
FeedbackKind parse_feedback_kind(std::string_view s);

enum class Verbosity : std::uint8_t { Brief, Normal, Detailed };
std::string_view verbosity_name(Verbosity v);
Verbosity parse_verbosity(std::string_view s);

struct FeedbackEvent {
  FeedbackKind kind = FeedbackKind::Instruction;
  std::string text;
  std::vector<std::string> rules;  // implicated rule ids, most severe first
  double t = 0.0;                  // session seconds
  State state = State::Greeting;   // state at emission

  bool operator==(const FeedbackEvent&) const = default;
};

/// Sentence for a single rule id; nullopt when the id has no template.
std::optional<std::string_view> rule_template(std::string_view rule_id);

inline constexpr std::string_view kGenericCorrection = "Please correct your posture.";

/// Corrective text for violations already ordered by magnitude. Repeated
/// sentences are emitted once; unknown ids fall back to the generic phrase
/// with a warning. Throws ValidationError for an empty list.
std::string feedback_text(std::span<const rb::Violation> violated, Component component, Exercise exercise,
                          Verbosity verbosity = Verbosity::Normal);
std::string feedback_text(std::span<const std::string> rule_ids, Component component, Exercise exercise,
                          Verbosity verbosity = Verbosity::Normal);

/// Per-component sentence for one repetition, e.g.
/// "ROM achieved; motion smooth; no compensation."
std::string summary_text(const hybrid::ClipVerdicts& verdicts, std::span<const rb::RuleGroup> compensated,
                         Verbosity verbosity = Verbosity::Normal);

/// Closing sentence over the completed repetitions.
std::string session_summary_text(std::size_t completed, std::size_t prescribed, std::size_t rom_ok,
                                 std::size_t smooth_ok, std::size_t compensation_free);

std::string encouragement_text(std::size_t completed, std::size_t prescribed);

}  // namespace rehab::coach
