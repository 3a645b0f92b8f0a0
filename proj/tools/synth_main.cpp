#include <filesystem>
#include <iostream>
#include <sstream>

#include "cli_common.hpp"
#include "rehab/clip_io.hpp"
#include "rehab/errors.hpp"
#include "rehab/synth.hpp"

using namespace rehab;

namespace {

synth::CompJoint parse_joint(const std::string& s) {
  for (auto j : {synth::CompJoint::Head, synth::CompJoint::Spine, synth::CompJoint::Shoulder}) {
    if (synth::comp_joint_name(j) == s) return j;
  }
  throw SpecError("unknown joint '" + s + "'");
}

Axis parse_axis(const std::string& s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  throw SpecError("unknown axis '" + s + "'");
}

// joint:axis:magnitude:first:last, e.g. head:z:0.25:40:80
synth::CompSegment parse_segment(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 5) throw SpecError("segment must be joint:axis:magnitude:first:last, got '" + text + "'");
  return {parse_joint(parts[0]), parse_axis(parts[1]), std::stod(parts[2]), std::stoul(parts[3]),
          std::stoul(parts[4])};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic labelled exercise clips"};
  app.require_subcommand(1);
  std::string level = "info";
  cli::add_log_level(app, level);

  auto* corpus = app.add_subcommand("corpus", "Generate a full corpus with manifest.jsonl");
  std::filesystem::path out_dir;
  synth::CorpusOptions co;
  unsigned jobs = cli::default_jobs();
  corpus->add_option("--out", out_dir, "Output directory")->required();
  corpus->add_option("--subjects", co.subjects, "Number of subjects")->capture_default_str()->check(CLI::Range(2, 1000));
  corpus->add_option("--unaffected-reps", co.unaffected_reps)->capture_default_str();
  corpus->add_option("--affected-reps", co.affected_reps)->capture_default_str();
  corpus->add_option("--seed", co.seed)->capture_default_str();
  corpus->add_option("--shifted-every", co.shifted_every, "Every n-th subject has a shifted baseline (0: none)")
      ->capture_default_str();
  corpus->add_option("--jobs", jobs)->capture_default_str();

  auto* clip = app.add_subcommand("clip", "Generate one clip");
  std::filesystem::path clip_out;
  std::string exercise = "E1";
  std::string side = "affected";
  std::string arm = "right";
  std::uint64_t seed = 1;
  double torso = 0.5;
  double severity = 0.5;
  synth::DefectSpec defects;
  std::vector<double> tremor;
  std::vector<std::string> segments;
  clip->add_option("--out", clip_out, "Clip file (.jsonl)")->required();
  clip->add_option("--exercise", exercise)->capture_default_str();
  clip->add_option("--side", side)->capture_default_str();
  clip->add_option("--arm", arm, "Affected arm")->capture_default_str();
  clip->add_option("--seed", seed)->capture_default_str();
  clip->add_option("--torso", torso, "Torso length in metres")->capture_default_str();
  clip->add_option("--severity", severity)->capture_default_str();
  clip->add_option("--rom-deficit", defects.rom_deficit, "Fraction of the reach withheld")->capture_default_str();
  clip->add_option("--tremor", tremor, "Wrist tremor amplitude_m hz, applied to the x axis")->expected(2);
  clip->add_option("--comp", segments, "Compensation segment joint:axis:magnitude:first:last (repeatable)");

  CLI11_PARSE(app, argc, argv);
  cli::apply_log_level(level);

  try {
    if (*corpus) {
      const auto plan = synth::plan_corpus(co);
      const auto n = synth::write_corpus(plan, out_dir, jobs);
      spdlog::info("wrote {} clips to {}", n, out_dir.string());
    } else if (*clip) {
      synth::SynthSubject subject;
      subject.id = "synthetic";
      subject.affected_arm = parse_arm(arm);
      subject.severity = severity;
      subject.seed = seed;
      subject = subject.scaled(torso / subject.torso);
      if (!tremor.empty()) defects.tremor[0] = {tremor[0], tremor[1]};
      for (const auto& s : segments) defects.compensation.push_back(parse_segment(s));
      const auto c = synth::generate_clip(subject, parse_exercise(exercise), parse_side(side), defects, seed);
      save_clip(c, clip_out);
      std::size_t flagged = 0;
      for (const auto& f : c.labels()->compensation) flagged += (f.head & f.spine & f.shoulder) == 0;
      spdlog::info("wrote {} frames to {} (rom {}, smoothness {}, {} compensated frames)", c.size(),
                   clip_out.string(), c.labels()->rom, c.labels()->smoothness, flagged);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
