#include "rehab/coach/feedback.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <map>
#include <spdlog/spdlog.h>

#include "rehab/errors.hpp"

namespace rehab::coach {

std::string_view feedback_kind_name(FeedbackKind k) {
  switch (k) {
    case FeedbackKind::Corrective: return "corrective";
    case FeedbackKind::Summary: return "summary";
    case FeedbackKind::Encouragement: return "encouragement";
    case FeedbackKind::Instruction: return "instruction";
    case FeedbackKind::Alert: return "alert";
  }
  return "?";
}

FeedbackKind parse_feedback_kind(std::string_view s) {
  for (auto k : {FeedbackKind::Corrective, FeedbackKind::Summary, FeedbackKind::Encouragement,
                 FeedbackKind::Instruction, FeedbackKind::Alert}) {
    if (feedback_kind_name(k) == s) return k;
  }
  throw ParseError("unknown feedback kind '" + std::string(s) + "'");
}

std::string_view verbosity_name(Verbosity v) {
  switch (v) {
    case Verbosity::Brief: return "brief";
    case Verbosity::Normal: return "normal";
    case Verbosity::Detailed: return "detailed";
  }
  return "?";
}

Verbosity parse_verbosity(std::string_view s) {
  for (auto v : {Verbosity::Brief, Verbosity::Normal, Verbosity::Detailed}) {
    if (verbosity_name(v) == s) return v;
  }
  throw ParseError("unknown verbosity '" + std::string(s) + "'");
}

std::optional<std::string_view> rule_template(std::string_view id) {
  static const std::map<std::string_view, std::string_view> table{
      {"rom-e1", "Bring your hand all the way up to your mouth."},
      {"rom-e2", "Reach all the way forward."},
      {"rom-e3", "Reach all the way down toward your knee."},
      {"smooth-x", "Move steadily without swaying side to side."},
      {"smooth-y", "Move steadily without bouncing up and down."},
      {"smooth-z", "Move steadily without jerking back and forth."},
      {"head-x", "Do not tilt your head sideways."},
      {"head-y", "Do not drop your head."},
      {"head-z", "Keep your head straight."},
      {"spine-x", "Do not lean to the side."},
      {"spine-y", "Sit up tall."},
      {"spine-z", "Do not lean your trunk forward."},
      {"shoulder-x", "Do not pull your shoulder sideways."},
      {"shoulder-y", "Do not raise your shoulder."},
      {"shoulder-z", "Do not push your shoulder forward."},
  };
  auto it = table.find(id);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::string feedback_text(std::span<const std::string> ids, Component component, Exercise exercise,
                          Verbosity verbosity) {
  if (ids.empty()) throw ValidationError("corrective feedback needs at least one rule");
  std::vector<std::string_view> sentences;
  for (const auto& id : ids) {
    auto text = rule_template(id);
    if (!text) {
      spdlog::warn("no feedback template for rule '{}' ({} {}); using the generic phrase", id,
                   exercise_name(exercise), component_name(component));
      text = kGenericCorrection;
    }
    if (std::find(sentences.begin(), sentences.end(), *text) == sentences.end()) sentences.push_back(*text);
    if (verbosity == Verbosity::Brief) break;
  }
  std::string out;
  for (auto s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

std::string feedback_text(std::span<const rb::Violation> violated, Component component, Exercise exercise,
                          Verbosity verbosity) {
  std::vector<std::string> ids;
  ids.reserve(violated.size());
  for (const auto& v : violated) ids.push_back(v.rule_id);
  return feedback_text(ids, component, exercise, verbosity);
}

std::string summary_text(const hybrid::ClipVerdicts& v, std::span<const rb::RuleGroup> compensated,
                         Verbosity verbosity) {
  std::string out = v.rom.label == 1 ? "ROM achieved" : "ROM not achieved";
  if (verbosity == Verbosity::Detailed) out += fmt::format(" ({:.2f})", v.rom.score);
  out += v.smoothness.label == 1 ? "; motion smooth" : "; motion not smooth";
  if (verbosity == Verbosity::Detailed) out += fmt::format(" ({:.2f})", v.smoothness.score);
  if (compensated.empty()) {
    out += "; no compensation";
  } else {
    out += "; compensation at ";
    for (std::size_t i = 0; i < compensated.size(); ++i) {
      if (i > 0) out += i + 1 == compensated.size() ? " and " : ", ";
      out += rb::group_name(compensated[i]);
    }
  }
  return out + ".";
}

std::string session_summary_text(std::size_t completed, std::size_t prescribed, std::size_t rom_ok,
                                 std::size_t smooth_ok, std::size_t compensation_free) {
  if (completed == 0) return fmt::format("No repetitions completed out of {}. See you next session.", prescribed);
  return fmt::format(
      "You completed {} of {} repetitions: target reached {}, smooth {}, without compensation {}. "
      "See you next session.",
      completed, prescribed, rom_ok, smooth_ok, compensation_free);
}

std::string encouragement_text(std::size_t completed, std::size_t prescribed) {
  if (completed >= prescribed) return "Great work today!";
  return fmt::format("Well done, {} to go.", prescribed - completed);
}

}  // namespace rehab::coach
