#include <csignal>
#include <fstream>
#include <pthread.h>
#include <filesystem>
#include <iostream>

#include "cli_common.hpp"
#include "rehab/clip_io.hpp"
#include "rehab/coach/profile_store.hpp"
#include "rehab/coach/server.hpp"
#include "rehab/coach/session.hpp"
#include "rehab/errors.hpp"
#include "rehab/eval.hpp"

using namespace rehab;

namespace {

void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

void block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

// Consecutive clips of one exercise become one prescription entry.
std::vector<coach::PrescribedExercise> prescription_for(const std::vector<MotionClip>& clips) {
  std::vector<coach::PrescribedExercise> rx;
  for (const auto& c : clips) {
    if (!rx.empty() && rx.back().exercise == c.exercise()) {
      ++rx.back().reps;
    } else {
      rx.push_back({c.exercise(), 1});
    }
  }
  return rx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exercise coaching service"};
  app.require_subcommand(1);
  std::string level = "info";
  cli::add_log_level(app, level);

  auto* serve = app.add_subcommand("serve", "Serve coaching sessions over TCP");
  coach::ServerOptions server_opts;
  server_opts.port = 7878;
  std::filesystem::path models_dir;
  std::filesystem::path profiles_dir;
  std::filesystem::path log_dir;
  serve->add_option("--port", server_opts.port)->capture_default_str();
  serve->add_option("--host", server_opts.host)->capture_default_str();
  serve->add_option("--models-dir", models_dir, "Trained model bundle")->required();
  serve->add_option("--profiles-dir", profiles_dir, "User profile store")->required();
  serve->add_option("--log-dir", log_dir, "Where session logs are written");

  auto* replay = app.add_subcommand("replay", "Run a scripted session over recorded clips");
  std::vector<std::filesystem::path> replay_clips;
  std::filesystem::path replay_models;
  std::filesystem::path profile_file;
  std::filesystem::path replay_profiles;
  std::string replay_subject;
  std::filesystem::path replay_log;
  coach::SessionConfig replay_cfg;
  std::string verbosity = "normal";
  replay->add_option("--clip", replay_clips, "Clip per repetition, in order")->required()->check(CLI::ExistingFile);
  replay->add_option("--models-dir", replay_models, "Trained model bundle")->required();
  auto* pf = replay->add_option("--profile", profile_file, "Profile JSON file")->check(CLI::ExistingFile);
  replay->add_option("--profiles-dir", replay_profiles, "Profile store used when --profile is absent")
      ->excludes(pf);
  replay->add_option("--subject", replay_subject, "Subject id (defaults to the clip's)");
  replay->add_option("--log", replay_log, "Write the session log here instead of stdout");
  replay->add_option("--voting-window", replay_cfg.voting_window)->capture_default_str()->check(CLI::Range(1, 30));
  replay->add_option("--verbosity", verbosity, "brief, normal or detailed")->capture_default_str();
  replay->add_flag("--demo", replay_cfg.demo, "Request the demonstration");

  auto* tune = app.add_subcommand("tune", "Tune and store a user's thresholds from unaffected-side clips");
  std::string tune_subject;
  std::vector<std::filesystem::path> tune_clips;
  std::filesystem::path tune_profiles;
  std::string k = "per-component";
  tune->add_option("--subject", tune_subject)->required();
  tune->add_option("--clips", tune_clips)->required()->check(CLI::ExistingFile);
  tune->add_option("--profiles-dir", tune_profiles)->required();
  tune->add_option("--k", k, "Sigma multiplier: per-component, 2 or 3")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train the model bundle on a corpus");
  std::filesystem::path corpus_dir;
  std::filesystem::path train_out;
  bool synthetic = false;
  bool reference = false;
  eval::LosoOptions train_opts;
  train_opts.jobs = cli::default_jobs();
  train->add_option("--corpus", corpus_dir, "Corpus directory")->excludes(
      train->add_flag("--synthetic", synthetic, "Train on the default synthetic corpus"));
  train->add_option("--out", train_out, "Bundle directory")->required();
  train->add_option("--hidden", train_opts.hidden)->capture_default_str();
  train->add_option("--lr", train_opts.learning_rate)->capture_default_str();
  train->add_flag("--reference", reference, "Use the reference architecture per exercise and component");
  train->add_option("--stride", train_opts.frame_stride)->capture_default_str();
  train->add_option("--seed", train_opts.seed)->capture_default_str();
  train->add_option("--jobs", train_opts.jobs)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  cli::apply_log_level(level);

  try {
    if (*serve) {
      block_signals();
      const auto models = hybrid::load_bundle(models_dir);
      const coach::ProfileStore store(profiles_dir);
      if (!log_dir.empty()) server_opts.log_dir = log_dir;
      coach::Server server(models, &store, server_opts);
      const auto port = server.start();
      spdlog::info("listening on {}:{}", server_opts.host, port);
      wait_for_signal();
      server.stop();
      spdlog::info("served {} sessions", server.sessions_served());
    } else if (*replay) {
      std::vector<MotionClip> clips;
      for (const auto& p : replay_clips) clips.push_back(load_clip(p));
      const auto models = hybrid::load_bundle(replay_models);
      replay_cfg.prescription = prescription_for(clips);
      replay_cfg.arm = clips.front().arm();
      replay_cfg.subject_id = replay_subject.empty() ? clips.front().subject_id() : replay_subject;
      replay_cfg.verbosity = coach::parse_verbosity(verbosity);
      std::optional<coach::ProfileStore> store;
      coach::SessionResources res{&models, nullptr, std::nullopt};
      if (!profile_file.empty()) {
        std::ifstream in(profile_file);
        nlohmann::json j;
        in >> j;
        res.profile = rb::profile_from_json(j);
      } else if (!replay_profiles.empty()) {
        store.emplace(replay_profiles);
        res.profiles = &*store;
      }
      coach::ReplaySource source(std::move(clips));
      coach::SessionStats stats;
      const auto log = coach::run_session(replay_cfg, res, source, {}, {}, &stats);
      if (replay_log.empty()) {
        std::cout << log.to_jsonl();
      } else {
        log.save(replay_log);
      }
      spdlog::info("{} frames assessed, {} dropped, {} over budget", stats.frames_assessed, stats.frames_dropped,
                   stats.overruns);
    } else if (*tune) {
      std::vector<MotionClip> clips;
      for (const auto& p : tune_clips) clips.push_back(load_clip(p));
      const coach::ProfileStore store(tune_profiles);
      const auto profile = coach::tune_user(store, tune_subject, clips, cli::parse_k(k));
      std::size_t n = 0;
      for (const auto& [e, rules] : profile.rules) n += rules.size();
      spdlog::info("stored {} tuned thresholds at {}", n, store.path_for(tune_subject).string());
    } else if (*train) {
      std::vector<eval::CorpusEntry> corpus;
      if (synthetic) {
        corpus = eval::corpus_from_plan(synth::plan_corpus({}), train_opts.jobs);
      } else {
        if (corpus_dir.empty()) throw ConfigurationError("pass --corpus DIR or --synthetic");
        corpus = eval::load_corpus(corpus_dir);
      }
      if (reference) train_opts.hidden.clear();
      const auto bundle = eval::train_bundle(eval::prepare(corpus, train_opts.jobs), train_opts);
      hybrid::save_bundle(bundle, train_out);
      spdlog::info("model bundle written to {}", train_out.string());
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
