#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rehab/features.hpp"
#include "rehab/hybrid.hpp"
#include "rehab/metrics.hpp"
#include "rehab/mlp.hpp"
#include "rehab/rules.hpp"
#include "rehab/synth.hpp"

namespace rehab::eval {

struct CorpusEntry {
  std::string id;  // path relative to the corpus root
  MotionClip clip;
};

/// Reads manifest.jsonl and every clip it lists.
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& root);
std::vector<CorpusEntry> corpus_from_plan(const synth::CorpusPlan& plan, unsigned jobs = 1);

/// Features, rule inputs and labels of one clip, computed once.
struct PreparedClip {
  std::string id;
  std::string subject;
  Exercise exercise = Exercise::E1;
  Side side = Side::Affected;
  features::ClipAnalysis analysis;
  rb::RuleInputs inputs{};
  PerformanceLabels labels;

  std::size_t frames() const { return labels.compensation.size(); }
  int comp_truth(std::size_t t, std::size_t joint) const;
};

std::vector<PreparedClip> prepare(const std::vector<CorpusEntry>& corpus, unsigned jobs = 1);

enum class Variant : std::uint8_t { RbInit, RbTuned, Ml, TunedMl, HmInit, HmTuned };
inline constexpr std::array<Variant, 6> kVariants{Variant::RbInit, Variant::RbTuned, Variant::Ml,
                                                  Variant::TunedMl, Variant::HmInit, Variant::HmTuned};
inline constexpr std::size_t kVariantCount = kVariants.size();
std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view s);

/// Scores of one prediction unit (a clip for ROM/Smoothness, a frame-joint
/// for Compensation).
struct UnitRecord {
  int truth = 1;
  double ml = 0.5;
  double ml_tuned = 0.5;
  double rb_init = 1.0;
  double rb_tuned = 1.0;
  int rb_init_label = 1;
  int rb_tuned_label = 1;
  double hm_init = 0.5;
  double hm_tuned = 0.5;

  /// Unvoted label of a variant.
  int label(Variant v) const;
};

struct ClipOutcome {
  std::string id;
  Exercise exercise = Exercise::E1;
  UnitRecord rom;
  UnitRecord smoothness;
  std::array<std::vector<UnitRecord>, 3> frames;  // per joint, per frame
};

struct Provenance {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<std::string> tuning_ids;
};

using CellScores = std::map<Exercise, std::array<double, 3>>;  // ROM, Smoothness, Compensation

struct FoldResult {
  std::string held_out;
  std::map<Variant, CellScores> f1;
  std::vector<ClipOutcome> outcomes;
  Provenance provenance;
  rb::UserProfile profile;
  std::map<Exercise, std::map<rb::RuleGroup, hybrid::ModelWeights>> rho_init;
  std::map<Exercise, std::map<rb::RuleGroup, hybrid::ModelWeights>> rho_tuned;

  /// Mean F1 over the exercise x component cells.
  double mean_f1(Variant v) const;
};

struct LosoOptions {
  /// Hidden widths and rate for every network; empty picks the reference
  /// architecture per (exercise, component).
  std::vector<std::size_t> hidden{32};
  double learning_rate = 0.005;
  int voting_window = hybrid::kDefaultVotingWindow;
  std::size_t frame_stride = 3;  // subsampling of training frames
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  rb::KPolicy k = rb::KPolicy::per_component();
};

std::vector<FoldResult> loso_cv(const std::vector<PreparedClip>& corpus, const LosoOptions& options = {});

/// Networks and fusion weights trained on every clip of `corpus`, for
/// deployment in a coaching session.
hybrid::ModelBundle train_bundle(const std::vector<PreparedClip>& corpus, const LosoOptions& options = {});

/// Per-cell F1 of a variant with compensation streams voted at `voting_window`.
CellScores cell_f1(const FoldResult& fold, Variant v, int voting_window);

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
};

struct Comparison {
  Variant a;
  Variant b;
  TTestResult across_folds;
  std::optional<TTestResult> across_cells;
};

struct Report {
  std::size_t folds = 0;
  int voting_window = hybrid::kDefaultVotingWindow;
  std::map<Variant, std::map<Exercise, std::array<Aggregate, 3>>> cells;
  std::map<Variant, std::vector<double>> fold_means;
  std::map<Variant, Aggregate> overall;
  std::vector<Comparison> comparisons;
};

Report compare_models(const std::vector<FoldResult>& folds, int voting_window = hybrid::kDefaultVotingWindow);

struct AgreementStats {
  std::size_t units = 0;
  std::size_t agreement_cases = 0;  // ML and RB scores on the same side of 0.5
  std::size_t hm_matches = 0;
  std::size_t label_agreements = 0;  // ML label equals RB majority label
  std::size_t hm_matches_labels = 0;
};

AgreementStats agreement(const std::vector<FoldResult>& folds, Variant hm);

/// Mean pooled compensation F1 for V_f = 1..max_window.
std::vector<double> voting_sweep(const std::vector<FoldResult>& folds, Variant v, int max_window = hybrid::kMaxVotingWindow);

struct FlipNoiseResult {
  std::vector<double> f1_a;  // per run
  std::vector<double> f1_b;
  TTestResult test;
};

/// Flips each ground-truth compensation frame label with probability `p`
/// and scores the noisy streams after voting at `window_a` and `window_b`.
FlipNoiseResult flip_noise_experiment(const std::vector<PreparedClip>& corpus, double p, int runs, std::uint64_t seed,
                                      int window_a = 1, int window_b = hybrid::kDefaultVotingWindow);

/// Returns human-readable violations; empty means the fold is clean.
std::vector<std::string> audit_fold(const FoldResult& fold, const std::vector<PreparedClip>& corpus);

nlohmann::json report_to_json(const Report& r);
/// summary.csv, folds.csv, ttests.csv and report.json under `dir`.
void write_report(const Report& r, const std::vector<FoldResult>& folds, const std::filesystem::path& dir);
void write_sweep(const std::vector<double>& curve, Variant v, const std::filesystem::path& dir);

}  // namespace rehab::eval
