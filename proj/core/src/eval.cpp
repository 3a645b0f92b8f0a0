#include "rehab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <spdlog/spdlog.h>

#include "rehab/clip_io.hpp"
#include "rehab/errors.hpp"
#include "rehab/parallel.hpp"
#include "rehab/random.hpp"

namespace rehab::eval {

namespace {

constexpr std::array<Component, 3> kCells{Component::Rom, Component::Smoothness, Component::Compensation};

using Rho = std::map<rb::RuleGroup, hybrid::ModelWeights>;

features::FrameCompFeatures frame_row(const PreparedClip& c, std::size_t t) {
  features::FrameCompFeatures f{};
  const auto row = c.analysis.compensation.row(t);
  std::copy(row.begin(), row.end(), f.begin());
  return f;
}

std::uint64_t string_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) h = (h ^ ch) * 1099511628211ULL;
  return h;
}

ml::MlpConfig network_config(const LosoOptions& o, Exercise e, Component c, std::uint64_t seed) {
  if (o.hidden.empty()) return ml::reference_config(e, c, seed);
  return {o.hidden, o.learning_rate, seed};
}

hybrid::ModelWeights weights_or_even(double rho_ml, double rho_rb, const std::string& where) {
  if (rho_ml + rho_rb > 0.0) return {rho_ml, rho_rb};
  spdlog::warn("both models score F1 = 0 on training data for {}; fusing with equal weights", where);
  return {1.0, 1.0};
}

/// Per-unit training views of one exercise.
struct UnitData {
  std::vector<ml::Sample> samples;
  std::vector<const PreparedClip*> owner;
  std::vector<features::FrameCompFeatures> frames;  // compensation only
};

UnitData clip_units(const std::vector<const PreparedClip*>& clips, Component c) {
  UnitData d;
  for (const auto* p : clips) {
    const auto& v = c == Component::Rom ? p->analysis.rom_summary.values : p->analysis.smoothness_summary.values;
    d.samples.push_back({v, c == Component::Rom ? p->labels.rom : p->labels.smoothness});
    d.owner.push_back(p);
  }
  return d;
}

UnitData frame_units(const std::vector<const PreparedClip*>& clips, std::size_t joint, std::size_t stride) {
  UnitData d;
  for (const auto* p : clips) {
    for (std::size_t t = 0; t < p->frames(); t += stride) {
      const auto f = frame_row(*p, t);
      d.samples.push_back({std::vector<double>(f.begin(), f.end()), p->comp_truth(t, joint)});
      d.owner.push_back(p);
      d.frames.push_back(f);
    }
  }
  return d;
}

// Each subject's thresholds come from that subject's unaffected clips only.
void tune_subjects(const std::vector<PreparedClip>& corpus, const std::vector<std::string>& subjects,
                   const rb::KPolicy& k, std::map<std::string, rb::UserProfile>& profiles,
                   std::map<std::string, rb::RuleSet>& rules) {
  for (const auto& s : subjects) {
    std::vector<rb::TuningSample> samples;
    for (const auto& c : corpus) {
      if (c.subject == s && c.side == Side::Unaffected) samples.push_back({c.exercise, c.side, c.inputs});
    }
    try {
      profiles[s] = rb::tune_thresholds(s, samples, k);
      rules.emplace(s, rb::RuleSet::personalized(profiles[s]));
    } catch (const InsufficientDataError& e) {
      spdlog::warn("subject {}: no tuned thresholds ({})", s, e.what());
    }
  }
}

}  // namespace

int PreparedClip::comp_truth(std::size_t t, std::size_t joint) const {
  const auto& f = labels.compensation.at(t);
  return joint == 0 ? f.head : joint == 1 ? f.spine : f.shoulder;
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::RbInit: return "rb-init";
    case Variant::RbTuned: return "rb-tuned";
    case Variant::Ml: return "ml";
    case Variant::TunedMl: return "tuned-ml";
    case Variant::HmInit: return "hm-init";
    case Variant::HmTuned: return "hm-tuned";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  for (auto v : kVariants) {
    if (variant_name(v) == s) return v;
  }
  throw ParseError("unknown model variant '" + std::string(s) + "'");
}

int UnitRecord::label(Variant v) const {
  switch (v) {
    case Variant::RbInit: return rb_init_label;
    case Variant::RbTuned: return rb_tuned_label;
    case Variant::Ml: return hybrid::decide(ml);
    case Variant::TunedMl: return hybrid::decide(ml_tuned);
    case Variant::HmInit: return hybrid::decide(hm_init);
    case Variant::HmTuned: return hybrid::decide(hm_tuned);
  }
  return 1;
}

double FoldResult::mean_f1(Variant v) const {
  const auto& cells = f1.at(v);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [e, arr] : cells) {
    for (double x : arr) {
      sum += x;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& root) {
  const auto manifest = root / "manifest.jsonl";
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open " + manifest.string());
  std::vector<CorpusEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed manifest row: ") + e.what(), line_no);
    }
    if (!row.contains("path")) throw ParseError("manifest row lacks path", line_no);
    const auto rel = row["path"].get<std::string>();
    out.push_back({rel, load_clip(root / rel)});
  }
  return out;
}

std::vector<CorpusEntry> corpus_from_plan(const synth::CorpusPlan& plan, unsigned jobs) {
  std::vector<std::optional<MotionClip>> clips(plan.clips.size());
  parallel_for(plan.clips.size(), jobs, [&](std::size_t i) { clips[i] = synth::generate(plan, plan.clips[i]); });
  std::vector<CorpusEntry> out;
  out.reserve(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) out.push_back({plan.clips[i].path, std::move(*clips[i])});
  return out;
}

std::vector<PreparedClip> prepare(const std::vector<CorpusEntry>& corpus, unsigned jobs) {
  std::vector<std::optional<PreparedClip>> tmp(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const auto& c = corpus[i].clip;
    if (!c.labels()) throw ValidationError("clip " + corpus[i].id + " has no labels");
    auto analysis = features::analyze_clip(c);
    const auto inputs = rb::clip_rule_inputs(analysis);
    tmp[i] = PreparedClip{corpus[i].id, c.subject_id(), c.exercise(), c.side(), std::move(analysis), inputs, *c.labels()};
  });
  std::vector<PreparedClip> out;
  out.reserve(tmp.size());
  for (auto& t : tmp) out.push_back(std::move(*t));
  return out;
}

std::vector<FoldResult> loso_cv(const std::vector<PreparedClip>& corpus, const LosoOptions& options) {
  if (options.frame_stride == 0) throw ConfigurationError("frame stride must be positive");
  std::set<std::string> subject_set;
  for (const auto& c : corpus) subject_set.insert(c.subject);
  const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
  if (subjects.size() < 2) throw InsufficientDataError("cross-validation needs at least two subjects");

  std::map<std::string, rb::UserProfile> profiles;
  std::map<std::string, rb::RuleSet> tuned_rules;
  tune_subjects(corpus, subjects, options.k, profiles, tuned_rules);
  const rb::RuleSet generic = rb::RuleSet::generic();

  std::vector<std::string> eligible;
  for (const auto& s : subjects) {
    bool affected = false;
    bool unaffected = false;
    for (const auto& c : corpus) {
      if (c.subject != s) continue;
      (c.side == Side::Affected ? affected : unaffected) = true;
    }
    if (!affected || !unaffected || !tuned_rules.contains(s)) {
      spdlog::warn("subject {} lacks an affected or unaffected side; fold skipped", s);
      continue;
    }
    eligible.push_back(s);
  }

  std::vector<FoldResult> folds(eligible.size());
  parallel_for(eligible.size(), options.jobs, [&](std::size_t fi) {
    const std::string& held = eligible[fi];
    FoldResult fold;
    fold.held_out = held;
    fold.profile = profiles.at(held);
    const rb::RuleSet& held_rules = tuned_rules.at(held);

    for (const auto& c : corpus) {
      if (c.subject != held) fold.provenance.train_ids.push_back(c.id);
      else if (c.side == Side::Affected) fold.provenance.test_ids.push_back(c.id);
      else fold.provenance.tuning_ids.push_back(c.id);
    }

    for (Exercise e : kExercises) {
      std::vector<const PreparedClip*> train;
      std::vector<const PreparedClip*> tune;
      std::vector<const PreparedClip*> test;
      for (const auto& c : corpus) {
        if (c.exercise != e) continue;
        if (c.subject != held) train.push_back(&c);
        else (c.side == Side::Affected ? test : tune).push_back(&c);
      }
      if (train.empty() || test.empty()) continue;
      const auto ei = static_cast<std::uint64_t>(e);
      auto seed_for = [&](std::uint64_t unit) { return derive_seed({options.seed, string_hash(held), ei, unit}); };
      auto rules_of = [&](const PreparedClip* p) -> const rb::RuleSet& {
        auto it = tuned_rules.find(p->subject);
        return it == tuned_rules.end() ? generic : it->second;
      };

      Rho& rho_i = fold.rho_init[e];
      Rho& rho_t = fold.rho_tuned[e];
      auto fit_weights = [&](rb::RuleGroup g, const ml::MlpModel& model, const UnitData& d,
                             auto&& inputs_of) {
        std::vector<int> ml_p;
        std::vector<int> rb_i;
        std::vector<int> rb_t;
        std::vector<int> truth;
        for (std::size_t u = 0; u < d.samples.size(); ++u) {
          const auto x = inputs_of(u);
          ml_p.push_back(model.predict(d.samples[u].x));
          rb_i.push_back(rb::rb_predict(generic, e, g, x));
          rb_t.push_back(rb::rb_predict(rules_of(d.owner[u]), e, g, x));
          truth.push_back(d.samples[u].label);
        }
        const std::string where = std::string(exercise_name(e)) + "/" + std::string(rb::group_name(g));
        const double f_ml = f1_score(ml_p, truth);
        rho_i[g] = weights_or_even(f_ml, f1_score(rb_i, truth), where);
        rho_t[g] = weights_or_even(f_ml, f1_score(rb_t, truth), where);
      };
      auto record = [&](int truth, double p_ml, double p_ml_tuned, const rb::RuleInputs& x, rb::RuleGroup g) {
        UnitRecord r;
        r.truth = truth;
        r.ml = p_ml;
        r.ml_tuned = p_ml_tuned;
        r.rb_init = rb::rb_score(generic, e, g, x);
        r.rb_tuned = rb::rb_score(held_rules, e, g, x);
        r.rb_init_label = rb::rb_predict(generic, e, g, x);
        r.rb_tuned_label = rb::rb_predict(held_rules, e, g, x);
        r.hm_init = hybrid::hybrid_score(r.ml, r.rb_init, rho_i.at(g));
        r.hm_tuned = hybrid::hybrid_score(r.ml, r.rb_tuned, rho_t.at(g));
        return r;
      };

      // ROM and Smoothness: one unit per clip.
      std::array<ml::MlpModel, 2> clip_models;
      std::array<ml::MlpModel, 2> clip_tuned;
      for (std::size_t ci = 0; ci < 2; ++ci) {
        const Component comp = ci == 0 ? Component::Rom : Component::Smoothness;
        const auto g = ci == 0 ? rb::RuleGroup::Rom : rb::RuleGroup::Smoothness;
        const auto data = clip_units(train, comp);
        clip_models[ci] = ml::train(network_config(options, e, comp, seed_for(ci)), data.samples);
        clip_tuned[ci] = ml::finetune(clip_models[ci], clip_units(tune, comp).samples);
        fit_weights(g, clip_models[ci], data, [&](std::size_t u) { return data.owner[u]->inputs; });
      }

      // Compensation: one network per joint on frame features.
      std::array<ml::MlpModel, 3> comp_models;
      std::array<ml::MlpModel, 3> comp_tuned;
      for (std::size_t j = 0; j < 3; ++j) {
        const auto data = frame_units(train, j, options.frame_stride);
        comp_models[j] = ml::train(network_config(options, e, Component::Compensation, seed_for(2 + j)), data.samples);
        comp_tuned[j] = ml::finetune(comp_models[j], frame_units(tune, j, options.frame_stride).samples);
        fit_weights(rb::kCompensationGroups[j], comp_models[j], data,
                    [&](std::size_t u) { return rb::frame_rule_inputs(data.frames[u]); });
      }

      for (const auto* c : test) {
        ClipOutcome o;
        o.id = c->id;
        o.exercise = e;
        const auto& rom_x = c->analysis.rom_summary.values;
        const auto& sm_x = c->analysis.smoothness_summary.values;
        o.rom = record(c->labels.rom, clip_models[0].predict_proba(rom_x), clip_tuned[0].predict_proba(rom_x), c->inputs,
                       rb::RuleGroup::Rom);
        o.smoothness = record(c->labels.smoothness, clip_models[1].predict_proba(sm_x),
                              clip_tuned[1].predict_proba(sm_x), c->inputs, rb::RuleGroup::Smoothness);
        for (std::size_t j = 0; j < 3; ++j) {
          o.frames[j].reserve(c->frames());
          for (std::size_t t = 0; t < c->frames(); ++t) {
            const auto f = frame_row(*c, t);
            o.frames[j].push_back(record(c->comp_truth(t, j), comp_models[j].predict_proba(f),
                                         comp_tuned[j].predict_proba(f), rb::frame_rule_inputs(f),
                                         rb::kCompensationGroups[j]));
          }
        }
        fold.outcomes.push_back(std::move(o));
      }
    }
    for (auto v : kVariants) fold.f1[v] = cell_f1(fold, v, options.voting_window);
    folds[fi] = std::move(fold);
  });
  return folds;
}

hybrid::ModelBundle train_bundle(const std::vector<PreparedClip>& corpus, const LosoOptions& options) {
  if (options.frame_stride == 0) throw ConfigurationError("frame stride must be positive");
  if (corpus.empty()) throw InsufficientDataError("no clips to train on");
  std::set<std::string> subject_set;
  for (const auto& c : corpus) subject_set.insert(c.subject);
  std::map<std::string, rb::UserProfile> profiles;
  std::map<std::string, rb::RuleSet> tuned_rules;
  tune_subjects(corpus, {subject_set.begin(), subject_set.end()}, options.k, profiles, tuned_rules);
  const rb::RuleSet generic = rb::RuleSet::generic();

  hybrid::ModelBundle bundle;
  for (Exercise e : kExercises) {
    std::vector<const PreparedClip*> train;
    for (const auto& c : corpus) {
      if (c.exercise == e) train.push_back(&c);
    }
    if (train.empty()) continue;
    const auto ei = static_cast<std::uint64_t>(e);
    auto seed_for = [&](std::uint64_t unit) { return derive_seed({options.seed, ei, unit}); };
    auto rules_of = [&](const PreparedClip* p) -> const rb::RuleSet& {
      auto it = tuned_rules.find(p->subject);
      return it == tuned_rules.end() ? generic : it->second;
    };
    hybrid::ExerciseModels m;
    // Weights assume the deployed rules are personalized, as in a coaching session.
    auto fit = [&](rb::RuleGroup g, const ml::MlpModel& model, const UnitData& d, auto&& inputs_of) {
      std::vector<int> ml_p;
      std::vector<int> rb_p;
      std::vector<int> truth;
      for (std::size_t u = 0; u < d.samples.size(); ++u) {
        ml_p.push_back(model.predict(d.samples[u].x));
        rb_p.push_back(rb::rb_predict(rules_of(d.owner[u]), e, g, inputs_of(u)));
        truth.push_back(d.samples[u].label);
      }
      m.weights[g] = weights_or_even(f1_score(ml_p, truth), f1_score(rb_p, truth),
                                     std::string(exercise_name(e)) + "/" + std::string(rb::group_name(g)));
    };
    for (std::size_t ci = 0; ci < 2; ++ci) {
      const Component comp = ci == 0 ? Component::Rom : Component::Smoothness;
      const auto data = clip_units(train, comp);
      auto& model = ci == 0 ? m.rom : m.smoothness;
      model = ml::train(network_config(options, e, comp, seed_for(ci)), data.samples);
      fit(ci == 0 ? rb::RuleGroup::Rom : rb::RuleGroup::Smoothness, model, data,
          [&](std::size_t u) { return data.owner[u]->inputs; });
    }
    for (std::size_t j = 0; j < 3; ++j) {
      const auto data = frame_units(train, j, options.frame_stride);
      m.compensation[j] = ml::train(network_config(options, e, Component::Compensation, seed_for(2 + j)), data.samples);
      fit(rb::kCompensationGroups[j], m.compensation[j], data,
          [&](std::size_t u) { return rb::frame_rule_inputs(data.frames[u]); });
    }
    bundle.exercises.emplace(e, std::move(m));
  }
  return bundle;
}

CellScores cell_f1(const FoldResult& fold, Variant v, int voting_window) {
  std::map<Exercise, std::array<Confusion, 3>> conf;
  for (const auto& o : fold.outcomes) {
    auto& c = conf[o.exercise];
    const int rp = o.rom.label(v);
    const int sp = o.smoothness.label(v);
    c[0] += confusion(std::span<const int>(&rp, 1), std::span<const int>(&o.rom.truth, 1));
    c[1] += confusion(std::span<const int>(&sp, 1), std::span<const int>(&o.smoothness.truth, 1));
    for (const auto& stream : o.frames) {
      std::vector<int> raw;
      std::vector<int> truth;
      raw.reserve(stream.size());
      truth.reserve(stream.size());
      for (const auto& u : stream) {
        raw.push_back(u.label(v));
        truth.push_back(u.truth);
      }
      c[2] += confusion(hybrid::vote_stream(raw, voting_window), truth);
    }
  }
  CellScores out;
  for (const auto& [e, c] : conf) out[e] = {c[0].f1(), c[1].f1(), c[2].f1()};
  return out;
}

Report compare_models(const std::vector<FoldResult>& folds, int voting_window) {
  Report r;
  r.folds = folds.size();
  r.voting_window = voting_window;
  std::map<Variant, std::vector<CellScores>> per_fold;
  for (auto v : kVariants) {
    for (const auto& f : folds) {
      auto cells = cell_f1(f, v, voting_window);
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& [e, arr] : cells) {
        for (double x : arr) {
          sum += x;
          ++n;
        }
      }
      r.fold_means[v].push_back(n ? sum / static_cast<double>(n) : 0.0);
      per_fold[v].push_back(std::move(cells));
    }
    for (Exercise e : kExercises) {
      for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> xs;
        for (const auto& cells : per_fold[v]) {
          if (auto it = cells.find(e); it != cells.end()) xs.push_back(it->second[k]);
        }
        if (!xs.empty()) r.cells[v][e][k] = {mean(xs), sample_std(xs)};
      }
    }
    r.overall[v] = {mean(r.fold_means[v]), sample_std(r.fold_means[v])};
  }
  if (folds.size() < 2) return r;

  auto cell_means = [&](Variant v) {
    std::vector<double> out;
    for (Exercise e : kExercises) {
      if (!r.cells[v].contains(e)) continue;
      for (const auto& a : r.cells[v][e]) out.push_back(a.mean);
    }
    return out;
  };
  const std::array<std::pair<Variant, Variant>, 6> pairs{{{Variant::RbTuned, Variant::RbInit},
                                                          {Variant::HmTuned, Variant::HmInit},
                                                          {Variant::HmTuned, Variant::RbTuned},
                                                          {Variant::HmTuned, Variant::Ml},
                                                          {Variant::HmInit, Variant::RbInit},
                                                          {Variant::TunedMl, Variant::Ml}}};
  for (const auto& [a, b] : pairs) {
    Comparison c{a, b, paired_t_test(r.fold_means[a], r.fold_means[b]), std::nullopt};
    const auto ca = cell_means(a);
    const auto cb = cell_means(b);
    if (ca.size() >= 2 && ca.size() == cb.size()) c.across_cells = paired_t_test(ca, cb);
    r.comparisons.push_back(c);
  }
  return r;
}

AgreementStats agreement(const std::vector<FoldResult>& folds, Variant hm) {
  if (hm != Variant::HmInit && hm != Variant::HmTuned) throw ConfigurationError("agreement applies to hybrid variants");
  const bool tuned = hm == Variant::HmTuned;
  AgreementStats s;
  auto visit = [&](const UnitRecord& u) {
    ++s.units;
    const int ml = hybrid::decide(u.ml);
    const int rb_side = hybrid::decide(tuned ? u.rb_tuned : u.rb_init);
    const int rb_label = tuned ? u.rb_tuned_label : u.rb_init_label;
    const int h = hybrid::decide(tuned ? u.hm_tuned : u.hm_init);
    if (ml == rb_side) {
      ++s.agreement_cases;
      s.hm_matches += h == ml;
    }
    if (ml == rb_label) {
      ++s.label_agreements;
      s.hm_matches_labels += h == ml;
    }
  };
  for (const auto& f : folds) {
    for (const auto& o : f.outcomes) {
      visit(o.rom);
      visit(o.smoothness);
      for (const auto& stream : o.frames) {
        for (const auto& u : stream) visit(u);
      }
    }
  }
  return s;
}

std::vector<double> voting_sweep(const std::vector<FoldResult>& folds, Variant v, int max_window) {
  if (max_window < 1 || max_window > hybrid::kMaxVotingWindow) throw ConfigurationError("voting window must be 1..30");
  std::vector<double> curve;
  for (int w = 1; w <= max_window; ++w) {
    std::vector<double> per_fold;
    for (const auto& f : folds) {
      const auto cells = cell_f1(f, v, w);
      std::vector<double> comp;
      for (const auto& [e, arr] : cells) comp.push_back(arr[2]);
      per_fold.push_back(mean(comp));
    }
    curve.push_back(mean(per_fold));
  }
  return curve;
}

FlipNoiseResult flip_noise_experiment(const std::vector<PreparedClip>& corpus, double p, int runs, std::uint64_t seed,
                                      int window_a, int window_b) {
  if (runs < 2) throw InsufficientDataError("flip-noise experiment needs at least two runs");
  FlipNoiseResult out;
  for (int r = 0; r < runs; ++r) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(r)}));
    Confusion ca;
    Confusion cb;
    std::vector<int> truth;
    std::vector<int> noisy;
    for (const auto& c : corpus) {
      if (c.side != Side::Affected) continue;
      for (std::size_t j = 0; j < 3; ++j) {
        truth.clear();
        noisy.clear();
        for (std::size_t t = 0; t < c.frames(); ++t) {
          const int y = c.comp_truth(t, j);
          truth.push_back(y);
          noisy.push_back(rng.bernoulli(p) ? 1 - y : y);
        }
        ca += confusion(hybrid::vote_stream(noisy, window_a), truth);
        cb += confusion(hybrid::vote_stream(noisy, window_b), truth);
      }
    }
    out.f1_a.push_back(ca.f1());
    out.f1_b.push_back(cb.f1());
  }
  out.test = paired_t_test(out.f1_b, out.f1_a);
  return out;
}

std::vector<std::string> audit_fold(const FoldResult& fold, const std::vector<PreparedClip>& corpus) {
  std::map<std::string, const PreparedClip*> by_id;
  for (const auto& c : corpus) by_id[c.id] = &c;
  std::vector<std::string> issues;
  const std::set<std::string> train(fold.provenance.train_ids.begin(), fold.provenance.train_ids.end());
  for (const auto& id : fold.provenance.test_ids) {
    if (train.contains(id)) issues.push_back("test clip " + id + " also in training set");
    auto it = by_id.find(id);
    if (it == by_id.end()) issues.push_back("unknown test clip " + id);
    else if (it->second->subject != fold.held_out || it->second->side != Side::Affected) {
      issues.push_back("test clip " + id + " is not an affected clip of " + fold.held_out);
    }
  }
  for (const auto& id : fold.provenance.train_ids) {
    auto it = by_id.find(id);
    if (it != by_id.end() && it->second->subject == fold.held_out) {
      issues.push_back("training clip " + id + " belongs to the held-out subject");
    }
  }
  for (const auto& id : fold.provenance.tuning_ids) {
    if (train.contains(id)) issues.push_back("tuning clip " + id + " also in training set");
    auto it = by_id.find(id);
    if (it == by_id.end() || it->second->subject != fold.held_out || it->second->side != Side::Unaffected) {
      issues.push_back("tuning clip " + id + " is not an unaffected clip of " + fold.held_out);
    }
  }
  if (fold.profile.subject_id != fold.held_out) issues.push_back("tuned profile belongs to " + fold.profile.subject_id);
  for (const auto& o : fold.outcomes) {
    if (train.contains(o.id)) issues.push_back("scored clip " + o.id + " was used in training");
  }
  return issues;
}

nlohmann::json report_to_json(const Report& r) {
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [v, per_ex] : r.cells) {
    auto& jv = cells[std::string(variant_name(v))];
    for (const auto& [e, arr] : per_ex) {
      for (std::size_t k = 0; k < 3; ++k) {
        jv[std::string(exercise_name(e))][std::string(component_name(kCells[k]))] = {{"mean", arr[k].mean},
                                                                                     {"std", arr[k].std}};
      }
    }
  }
  nlohmann::json overall = nlohmann::json::object();
  for (const auto& [v, a] : r.overall) {
    overall[std::string(variant_name(v))] = {{"mean", a.mean}, {"std", a.std}, {"folds", r.fold_means.at(v)}};
  }
  auto test_json = [](const TTestResult& t) {
    return nlohmann::json{{"mean_diff", t.mean_diff}, {"t", std::isfinite(t.t) ? nlohmann::json(t.t) : nlohmann::json()},
                          {"p", t.p}, {"df", t.df}, {"degenerate", t.degenerate}};
  };
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : r.comparisons) {
    nlohmann::json j = {{"a", variant_name(c.a)}, {"b", variant_name(c.b)}, {"across_folds", test_json(c.across_folds)}};
    if (c.across_cells) j["across_cells"] = test_json(*c.across_cells);
    comps.push_back(std::move(j));
  }
  return {{"folds", r.folds}, {"voting_window", r.voting_window}, {"cells", std::move(cells)},
          {"overall", std::move(overall)}, {"comparisons", std::move(comps)}};
}

void write_report(const Report& r, const std::vector<FoldResult>& folds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("summary.csv");
    out << "variant,exercise,component,mean_f1,std_f1\n";
    for (const auto& [v, per_ex] : r.cells) {
      for (const auto& [e, arr] : per_ex) {
        for (std::size_t k = 0; k < 3; ++k) {
          out << variant_name(v) << ',' << exercise_name(e) << ',' << component_name(kCells[k]) << ',' << arr[k].mean
              << ',' << arr[k].std << '\n';
        }
      }
    }
  }
  {
    auto out = open("folds.csv");
    out << "held_out,variant,exercise,component,f1\n";
    for (const auto& f : folds) {
      for (auto v : kVariants) {
        for (const auto& [e, arr] : cell_f1(f, v, r.voting_window)) {
          for (std::size_t k = 0; k < 3; ++k) {
            out << f.held_out << ',' << variant_name(v) << ',' << exercise_name(e) << ',' << component_name(kCells[k])
                << ',' << arr[k] << '\n';
          }
        }
      }
    }
  }
  {
    auto out = open("ttests.csv");
    out << "a,b,scope,mean_diff,t,p,df,degenerate\n";
    for (const auto& c : r.comparisons) {
      auto row = [&](const char* scope, const TTestResult& t) {
        out << variant_name(c.a) << ',' << variant_name(c.b) << ',' << scope << ',' << t.mean_diff << ',' << t.t << ','
            << t.p << ',' << t.df << ',' << (t.degenerate ? 1 : 0) << '\n';
      };
      row("folds", c.across_folds);
      if (c.across_cells) row("cells", *c.across_cells);
    }
  }
  auto out = open("report.json");
  out << report_to_json(r).dump(2) << '\n';
}

void write_sweep(const std::vector<double>& curve, Variant v, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "sweep.csv", std::ios::trunc);
  if (!out) throw IoError("cannot write sweep.csv");
  out << "variant,voting_window,f1\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out << variant_name(v) << ',' << i + 1 << ',' << curve[i] << '\n';
}

}  // namespace rehab::eval
