#include <filesystem>
#include <fmt/format.h>
#include <iostream>

#include "cli_common.hpp"
#include "rehab/errors.hpp"
#include "rehab/eval.hpp"

using namespace rehab;

namespace {

struct CorpusArgs {
  std::filesystem::path dir;
  bool synthetic = false;
  std::uint64_t synth_seed = 7;
  std::size_t synth_subjects = 15;

  void add(CLI::App* cmd) {
    auto* c = cmd->add_option("--corpus", dir, "Corpus directory with manifest.jsonl");
    auto* s = cmd->add_flag("--synthetic", synthetic, "Generate the default synthetic corpus in memory");
    c->excludes(s);
    cmd->add_option("--synthetic-seed", synth_seed)->capture_default_str();
    cmd->add_option("--synthetic-subjects", synth_subjects)->capture_default_str();
  }

  std::vector<eval::PreparedClip> load(unsigned jobs) const {
    std::vector<eval::CorpusEntry> corpus;
    if (synthetic) {
      synth::CorpusOptions o;
      o.seed = synth_seed;
      o.subjects = synth_subjects;
      corpus = eval::corpus_from_plan(synth::plan_corpus(o), jobs);
    } else {
      if (dir.empty()) throw ConfigurationError("pass --corpus DIR or --synthetic");
      corpus = eval::load_corpus(dir);
    }
    spdlog::info("{} clips loaded", corpus.size());
    return eval::prepare(corpus, jobs);
  }
};

struct TrainArgs {
  eval::LosoOptions options;
  bool reference = false;
  std::string k = "per-component";

  void add(CLI::App* cmd) {
    cmd->add_option("--hidden", options.hidden, "Hidden layer widths")->capture_default_str();
    cmd->add_option("--lr", options.learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_flag("--reference", reference, "Use the reference architecture per exercise and component");
    cmd->add_option("--stride", options.frame_stride, "Training frame subsampling")->capture_default_str();
    cmd->add_option("--seed", options.seed)->capture_default_str();
    cmd->add_option("--voting-window", options.voting_window)->capture_default_str()->check(CLI::Range(1, 30));
    cmd->add_option("--k", k, "Sigma multiplier: per-component, 2 or 3")->capture_default_str();
    options.jobs = cli::default_jobs();
    cmd->add_option("--jobs", options.jobs)->capture_default_str();
  }

  eval::LosoOptions resolved() const {
    auto o = options;
    if (reference) o.hidden.clear();
    o.k = cli::parse_k(k);
    return o;
  }
};

void print_report(const eval::Report& r) {
  fmt::print("{} folds, V_f = {}\n", r.folds, r.voting_window);
  fmt::print("{:<10} {:>8} {:>8}\n", "variant", "mean F1", "std");
  for (auto v : eval::kVariants) {
    const auto& a = r.overall.at(v);
    fmt::print("{:<10} {:>8.4f} {:>8.4f}\n", eval::variant_name(v), a.mean, a.std);
  }
  for (const auto& c : r.comparisons) {
    fmt::print("{} vs {}: diff {:+.4f}, t = {:.3f}, p = {:.3g}{}\n", eval::variant_name(c.a), eval::variant_name(c.b),
               c.across_folds.mean_diff, c.across_folds.t, c.across_folds.p,
               c.across_folds.degenerate ? " (degenerate)" : "");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leave-one-subject-out evaluation of the assessment models"};
  app.require_subcommand(1);
  std::string level = "info";
  cli::add_log_level(app, level);

  auto* loso = app.add_subcommand("loso", "Cross-validate every variant and write the report");
  CorpusArgs loso_corpus;
  TrainArgs loso_train;
  std::filesystem::path out = "report";
  loso_corpus.add(loso);
  loso_train.add(loso);
  loso->add_option("--out", out, "Report directory")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Compensation F1 against the voting window");
  CorpusArgs sweep_corpus;
  TrainArgs sweep_train;
  std::string model = "hm-tuned";
  std::filesystem::path sweep_out = "report";
  int max_window = hybrid::kMaxVotingWindow;
  sweep_corpus.add(sweep);
  sweep_train.add(sweep);
  sweep->add_option("--model", model, "Variant to sweep")->capture_default_str();
  sweep->add_option("--max-window", max_window)->capture_default_str()->check(CLI::Range(1, 30));
  sweep->add_option("--out", sweep_out, "Output directory")->capture_default_str();

  auto* flip = app.add_subcommand("flip", "Voting on ground truth corrupted by random label flips");
  CorpusArgs flip_corpus;
  double p = 0.2;
  int runs = 50;
  std::uint64_t flip_seed = 1;
  int window = hybrid::kDefaultVotingWindow;
  flip_corpus.add(flip);
  flip->add_option("--p", p, "Flip probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  flip->add_option("--runs", runs)->capture_default_str()->check(CLI::PositiveNumber);
  flip->add_option("--seed", flip_seed)->capture_default_str();
  flip->add_option("--window", window, "Window compared against V_f = 1")->capture_default_str()->check(CLI::Range(1, 30));

  CLI11_PARSE(app, argc, argv);
  cli::apply_log_level(level);

  try {
    if (*loso) {
      const auto opts = loso_train.resolved();
      const auto corpus = loso_corpus.load(opts.jobs);
      const auto folds = eval::loso_cv(corpus, opts);
      for (const auto& f : folds) {
        for (const auto& problem : eval::audit_fold(f, corpus)) spdlog::error("leakage: {}", problem);
      }
      const auto report = eval::compare_models(folds, opts.voting_window);
      eval::write_report(report, folds, out);
      eval::write_sweep(eval::voting_sweep(folds, eval::Variant::HmTuned), eval::Variant::HmTuned, out);
      print_report(report);
      spdlog::info("report written to {}", out.string());
    } else if (*sweep) {
      const auto opts = sweep_train.resolved();
      const auto corpus = sweep_corpus.load(opts.jobs);
      const auto folds = eval::loso_cv(corpus, opts);
      const auto v = eval::parse_variant(model);
      const auto curve = eval::voting_sweep(folds, v, max_window);
      eval::write_sweep(curve, v, sweep_out);
      for (std::size_t i = 0; i < curve.size(); ++i) fmt::print("{:>2} {:.4f}\n", i + 1, curve[i]);
    } else if (*flip) {
      const auto corpus = flip_corpus.load(cli::default_jobs());
      const auto r = eval::flip_noise_experiment(corpus, p, runs, flip_seed, 1, window);
      fmt::print("V_f = 1: {:.4f}  V_f = {}: {:.4f}  diff {:+.4f}  t = {:.2f}  p = {:.3g}\n", mean(r.f1_a), window,
                 mean(r.f1_b), r.test.mean_diff, r.test.t, r.test.p);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
