#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "rehab/errors.hpp"
#include "rehab/eval.hpp"
#include "rehab/metrics.hpp"
#include "support.hpp"

using namespace rehab;
using namespace rehab::eval;

namespace {

// Closed-form Student t CDF for three degrees of freedom.
double t3_two_sided(double t) {
  const double x = std::abs(t) / std::sqrt(3.0);
  const double cdf = 0.5 + (x / (1.0 + x * x) + std::atan(x)) / std::numbers::pi;
  return 2.0 * (1.0 - cdf);
}

const std::vector<FoldResult>& small_folds() {
  static const auto folds = loso_cv(rehab::testing::small_prepared());
  return folds;
}

std::vector<PreparedClip> two_subject_corpus() {
  synth::CorpusOptions o;
  o.subjects = 2;
  o.unaffected_reps = 3;
  o.affected_reps = 4;
  o.seed = 99;
  return prepare(corpus_from_plan(synth::plan_corpus(o)));
}

UnitRecord perfect(int truth) {
  UnitRecord u;
  u.truth = truth;
  const double s = truth ? 0.9 : 0.1;
  u.ml = u.ml_tuned = u.rb_init = u.rb_tuned = u.hm_init = u.hm_tuned = s;
  u.rb_init_label = u.rb_tuned_label = truth;
  return u;
}

}  // namespace

TEST(Metrics, F1Examples) {
  const std::vector<int> t{1, 0, 1, 1, 0};
  EXPECT_EQ(f1_score(t, t), 1.0);
  // TP=1, FP=1, FN=1.
  const std::vector<int> p2{1, 1, 0};
  const std::vector<int> t2{1, 0, 1};
  EXPECT_DOUBLE_EQ(f1_score(p2, t2), 0.5);
  const std::vector<int> zeros{0, 0, 0};
  EXPECT_EQ(f1_score(zeros, t2), 0.0);
  EXPECT_THROW(f1_score(p2, std::vector<int>{1}), ShapeError);
  EXPECT_THROW(f1_score(std::vector<int>{}, std::vector<int>{}), ShapeError);
}

TEST(Metrics, PairedTTest) {
  const std::vector<double> a{1, 2, 3, 5};
  const std::vector<double> b{0, 0, 0, 0};
  const auto r = paired_t_test(a, b);
  const double sd = std::sqrt((1.75 * 1.75 + 0.75 * 0.75 + 0.25 * 0.25 + 2.25 * 2.25) / 3.0);
  const double t = 2.75 / (sd / 2.0);
  EXPECT_NEAR(r.t, t, 1e-12);
  EXPECT_EQ(r.df, 3u);
  EXPECT_NEAR(r.p, t3_two_sided(t), 1e-9);

  const auto same = paired_t_test(a, a);
  EXPECT_EQ(same.p, 1.0);
  EXPECT_TRUE(same.degenerate);
  const std::vector<double> shifted{2, 3, 4, 6};
  EXPECT_EQ(paired_t_test(shifted, a).p, 0.0);
}

TEST(Metrics, SampleStd) {
  const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_NEAR(sample_std(xs), std::sqrt(32.0 / 7.0), 1e-12);
  EXPECT_EQ(sample_std(std::vector<double>{3.0}), 0.0);
}

TEST(Loso, TwoSubjectsGiveTwoFolds) {
  const auto corpus = two_subject_corpus();
  const auto folds = loso_cv(corpus);
  ASSERT_EQ(folds.size(), 2u);
  for (const auto& f : folds) {
    EXPECT_TRUE(audit_fold(f, corpus).empty());
    EXPECT_EQ(f.provenance.test_ids.size(), 3u * 4);
    EXPECT_EQ(f.provenance.tuning_ids.size(), 3u * 3);
    EXPECT_EQ(f.provenance.train_ids.size(), 3u * 7);
    EXPECT_EQ(f.outcomes.size(), 12u);
  }
  EXPECT_NE(folds[0].held_out, folds[1].held_out);
}

TEST(Loso, DeterministicAcrossRunsAndThreads) {
  const auto corpus = two_subject_corpus();
  LosoOptions serial;
  LosoOptions threaded;
  threaded.jobs = 2;
  const auto a = loso_cv(corpus, serial);
  const auto b = loso_cv(corpus, threaded);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (auto v : kVariants) EXPECT_EQ(a[i].mean_f1(v), b[i].mean_f1(v));
    ASSERT_EQ(a[i].outcomes.size(), b[i].outcomes.size());
    for (std::size_t k = 0; k < a[i].outcomes.size(); ++k) {
      EXPECT_EQ(a[i].outcomes[k].rom.hm_tuned, b[i].outcomes[k].rom.hm_tuned);
      EXPECT_EQ(a[i].outcomes[k].frames[1].size(), b[i].outcomes[k].frames[1].size());
    }
  }
}

TEST(Loso, SkipsSubjectWithoutUnaffectedSide) {
  auto corpus = two_subject_corpus();
  const auto third = corpus.front().subject;
  std::erase_if(corpus, [&](const PreparedClip& c) { return c.subject == third && c.side == Side::Unaffected; });
  EXPECT_THROW(loso_cv(std::vector<PreparedClip>(corpus.begin(), corpus.begin() + 1)), InsufficientDataError);
  const auto folds = loso_cv(corpus);
  ASSERT_EQ(folds.size(), 1u);
  EXPECT_NE(folds[0].held_out, third);
}

TEST(Loso, SmallCorpusAuditAndAggregates) {
  const auto& corpus = rehab::testing::small_prepared();
  const auto& folds = small_folds();
  ASSERT_EQ(folds.size(), 4u);
  for (const auto& f : folds) EXPECT_TRUE(audit_fold(f, corpus).empty()) << f.held_out;

  const auto r = compare_models(folds);
  for (auto v : kVariants) {
    for (Exercise e : kExercises) {
      for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> xs;
        for (const auto& f : folds) xs.push_back(cell_f1(f, v, r.voting_window).at(e)[k]);
        EXPECT_DOUBLE_EQ(r.cells.at(v).at(e)[k].mean, mean(xs));
        EXPECT_DOUBLE_EQ(r.cells.at(v).at(e)[k].std, sample_std(xs));
      }
    }
    EXPECT_EQ(r.fold_means.at(v).size(), 4u);
  }
  EXPECT_FALSE(r.comparisons.empty());
}

TEST(Loso, StoredF1UsesDefaultWindow) {
  for (const auto& f : small_folds()) {
    for (auto v : kVariants) EXPECT_EQ(f.f1.at(v), cell_f1(f, v, hybrid::kDefaultVotingWindow));
  }
}

TEST(Loso, HybridKeepsAgreement) {
  for (auto v : {Variant::HmInit, Variant::HmTuned}) {
    const auto s = agreement(small_folds(), v);
    EXPECT_GT(s.agreement_cases, 0u);
    EXPECT_EQ(s.hm_matches, s.agreement_cases);
  }
  EXPECT_THROW(agreement(small_folds(), Variant::Ml), ConfigurationError);
}

TEST(Sweep, WindowOneMatchesUnvotedPipeline) {
  const auto& folds = small_folds();
  for (auto v : {Variant::Ml, Variant::HmTuned}) {
    const auto curve = voting_sweep(folds, v, 5);
    ASSERT_EQ(curve.size(), 5u);
    std::vector<double> per_fold;
    for (const auto& f : folds) {
      std::map<Exercise, Confusion> conf;
      for (const auto& o : f.outcomes) {
        for (const auto& stream : o.frames) {
          for (const auto& u : stream) {
            const int p = u.label(v);
            conf[o.exercise] += confusion(std::span<const int>(&p, 1), std::span<const int>(&u.truth, 1));
          }
        }
      }
      std::vector<double> cells;
      for (const auto& [e, c] : conf) cells.push_back(c.f1());
      per_fold.push_back(mean(cells));
    }
    EXPECT_EQ(curve[0], mean(per_fold));
  }
  EXPECT_THROW(voting_sweep(folds, Variant::Ml, 31), ConfigurationError);
}

TEST(Sweep, NoiselessPredictionsGiveFlatCurve) {
  FoldResult f;
  f.held_out = "X";
  for (int c = 0; c < 3; ++c) {
    ClipOutcome o;
    o.id = "c" + std::to_string(c);
    o.exercise = kExercises[static_cast<std::size_t>(c)];
    o.rom = perfect(1);
    o.smoothness = perfect(0);
    for (auto& stream : o.frames) {
      for (int t = 0; t < 100; ++t) stream.push_back(perfect(1));
    }
    f.outcomes.push_back(o);
  }
  const auto curve = voting_sweep({f}, Variant::HmTuned);
  ASSERT_EQ(curve.size(), 30u);
  for (double x : curve) EXPECT_EQ(x, curve[0]);
  EXPECT_EQ(curve[0], 1.0);
}

TEST(FlipNoise, VotingRecoversTruth) {
  const auto r = flip_noise_experiment(rehab::testing::small_prepared(), 0.2, 10, 3);
  ASSERT_EQ(r.f1_a.size(), 10u);
  EXPECT_GT(mean(r.f1_b), mean(r.f1_a));
  EXPECT_LT(r.test.p, 0.01);
  const auto again = flip_noise_experiment(rehab::testing::small_prepared(), 0.2, 10, 3);
  EXPECT_EQ(again.f1_a, r.f1_a);
  EXPECT_THROW(flip_noise_experiment(rehab::testing::small_prepared(), 0.2, 1, 3), InsufficientDataError);
}

TEST(Report, FilesWritten) {
  const auto dir = rehab::testing::temp_dir("report");
  const auto r = compare_models(small_folds());
  write_report(r, small_folds(), dir);
  write_sweep(voting_sweep(small_folds(), Variant::HmTuned, 3), Variant::HmTuned, dir);
  for (const char* f : {"summary.csv", "folds.csv", "ttests.csv", "report.json", "sweep.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "sweep.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 4u);
  std::filesystem::remove_all(dir);
}

TEST(Report, SingleFoldHasNoTests) {
  const std::vector<FoldResult> one{small_folds().front()};
  EXPECT_TRUE(compare_models(one).comparisons.empty());
}

TEST(Corpus, LoadMatchesPlan) {
  synth::CorpusOptions o;
  o.subjects = 2;
  o.unaffected_reps = 2;
  o.affected_reps = 1;
  const auto plan = synth::plan_corpus(o);
  const auto dir = rehab::testing::temp_dir("load");
  synth::write_corpus(plan, dir);
  const auto loaded = load_corpus(dir);
  const auto direct = corpus_from_plan(plan);
  ASSERT_EQ(loaded.size(), direct.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].id, direct[i].id);
    EXPECT_EQ(loaded[i].clip.labels(), direct[i].clip.labels());
    EXPECT_EQ(loaded[i].clip.frame(7).joints, direct[i].clip.frame(7).joints);
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_corpus(dir), IoError);
}
