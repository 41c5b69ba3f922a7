#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "neurobit/harness.hpp"

using namespace neurobit;

namespace {

// fold planning only reads the id fields, so empty data keeps this cheap
std::vector<Subsample> id_only_subsamples(const std::vector<int>& subjects,
                                          const std::vector<int>& trials) {
  std::vector<Subsample> out;
  for (int subj : subjects) {
    for (AffectiveState st : {AffectiveState::LL, AffectiveState::LH,
                              AffectiveState::HL, AffectiveState::HH}) {
      for (int t : trials) {
        for (int k = 0; k < kSubsamplesPerTrial; ++k) {
          Subsample s;
          s.subject_id = subj;
          s.trial_id = t;
          s.subsample_index = k;
          s.state = st;
          out.push_back(std::move(s));
        }
      }
    }
  }
  return out;
}

ExperimentConfig fast_config(ModelKind model) {
  ExperimentConfig cfg;
  cfg.model = model;
  cfg.state = "HH";
  cfg.electrodes = "F";
  cfg.trials_per_state = 5;
  return cfg;
}

// 32 subjects, 1 channel of silence per trial; only the ratings matter.
// Per-state qualification: LL for the first 26 subjects, LH first 24,
// HL first 23, HH everyone.
std::vector<RawRecording> rating_fixture() {
  std::vector<RawRecording> out;
  const float rating_of[4][2] = {{3, 3}, {3, 7}, {7, 3}, {7, 7}};
  for (int s = 0; s < 32; ++s) {
    RawRecording rec;
    rec.subject_id = s + 1;
    const int n_ll = s < 26 ? 5 : 4;
    const int n_lh = s < 24 ? 5 : 4;
    const int n_hl = s < 23 ? 5 : 4;
    for (int t = 0; t < kTrialsPerRecording; ++t) {
      int st = 3;
      if (t < n_ll) st = 0;
      else if (t < n_ll + n_lh) st = 1;
      else if (t < n_ll + n_lh + n_hl) st = 2;
      rec.ratings.push_back({rating_of[st][0], rating_of[st][1]});
      rec.trials.push_back({std::vector<float>(kUsableSamples, 0.0f)});
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::set<int> distinct_subjects(const std::vector<Subsample>& subs) {
  std::set<int> ids;
  for (const auto& s : subs) ids.insert(s.subject_id);
  return ids;
}

}  // namespace

TEST_CASE("fold splits are trial-disjoint with the 18/6/6 shape") {
  const auto subs = id_only_subsamples({1, 2, 3}, {0, 3, 7, 9, 12});
  const auto plan = make_folds(subs, 42);

  // (subject, state, trial) -> how often it lands in test / val over the folds
  std::map<std::tuple<int, AffectiveState, int>, int> test_hits, val_hits;

  for (int fold = 0; fold < kFolds; ++fold) {
    const auto split = fold_split(plan, subs, fold);
    CHECK(split.train.size() + split.val.size() + split.test.size() == subs.size());

    std::set<std::size_t> seen;
    for (const auto* part : {&split.train, &split.val, &split.test}) {
      for (std::size_t i : *part) seen.insert(i);
    }
    CHECK(seen.size() == subs.size());  // disjoint and complete

    // per (subject, state): 3 train trials, 1 val, 1 test -> 18/6/6 subsamples
    std::map<std::pair<int, AffectiveState>, std::array<std::set<int>, 3>> group_trials;
    auto collect = [&](const std::vector<std::size_t>& part, int slot) {
      for (std::size_t i : part) {
        const Subsample& s = subs[i];
        group_trials[{s.subject_id, s.state}][static_cast<std::size_t>(slot)].insert(
            s.trial_id);
      }
    };
    collect(split.train, 0);
    collect(split.val, 1);
    collect(split.test, 2);
    REQUIRE(group_trials.size() == 3 * 4);
    for (const auto& [key, slots] : group_trials) {
      CHECK(slots[0].size() == 3);
      CHECK(slots[1].size() == 1);
      CHECK(slots[2].size() == 1);
      // no trial sits in two roles at once
      for (int t : slots[1]) CHECK(slots[0].count(t) == 0);
      for (int t : slots[2]) {
        CHECK(slots[0].count(t) == 0);
        CHECK(slots[1].count(t) == 0);
      }
      for (int t : slots[2]) ++test_hits[{key.first, key.second, t}];
      for (int t : slots[1]) ++val_hits[{key.first, key.second, t}];
    }
  }

  // every trial serves as the test trial in exactly 2 of the 10 folds,
  // and as the validation trial in exactly 2
  CHECK(test_hits.size() == 3 * 4 * 5);
  for (const auto& [key, hits] : test_hits) CHECK(hits == 2);
  for (const auto& [key, hits] : val_hits) CHECK(hits == 2);
}

TEST_CASE("fold plans are seeded permutations of each group") {
  const auto subs = id_only_subsamples({1, 2}, {0, 1, 2, 3, 4});
  const auto a = make_folds(subs, 7);
  const auto b = make_folds(subs, 7);
  const auto c = make_folds(subs, 8);
  auto flatten = [](const FoldPlan& plan) {
    std::vector<std::tuple<int, int, std::vector<int>>> rows;
    for (const auto& [key, order] : plan.group_trials) {
      rows.emplace_back(key.subject_id, static_cast<int>(key.state), order);
    }
    return rows;
  };
  CHECK(flatten(a) == flatten(b));
  CHECK(flatten(a) != flatten(c));
  for (const auto& [key, order] : a.group_trials) {
    std::set<int> uniq(order.begin(), order.end());
    CHECK(uniq == std::set<int>{0, 1, 2, 3, 4});
  }

  SUBCASE("groups without exactly 5 trials are rejected") {
    auto short_subs = id_only_subsamples({1}, {0, 1, 2, 3});
    CHECK_THROWS_AS(make_folds(short_subs, 1), std::invalid_argument);
    CHECK_THROWS_AS(fold_split(a, subs, 10), std::invalid_argument);
    CHECK_THROWS_AS(fold_split(a, subs, -1), std::invalid_argument);
  }
}

TEST_CASE("compute_crr basics") {
  CHECK(compute_crr({1, 2, 3}, {1, 2, 3}) == 100.0);
  CHECK(compute_crr({1, 2, 3}, {4, 5, 6}) == 0.0);
  CHECK(compute_crr({1, 2, 3, 4}, {1, 2, 3, 9}) == 75.0);
  CHECK_THROWS_AS(compute_crr({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(compute_crr({1}, {1, 2}), std::invalid_argument);
}

TEST_CASE("experiment config json round-trip") {
  ExperimentConfig cfg;
  cfg.experiment = "III";
  cfg.state = "LH";
  cfg.band = "beta";
  cfg.electrodes = "OP";
  cfg.model = ModelKind::CnnLstm;
  cfg.conv_filters = {16, 8};
  cfg.recurrent_units = {12, 6};
  cfg.td_dense_units = 24;
  cfg.dropout = 0.25;
  cfg.trials_per_state = 5;
  cfg.butterworth_order = 6;
  cfg.train.learning_rate = 0.001;
  cfg.train.batch_size = 32;
  cfg.train.max_epochs = 50;
  cfg.train.patience = 5;
  cfg.seed_data = 10;
  cfg.seed_folds = 11;
  cfg.seed_init = 12;
  cfg.label = "round-trip";

  const auto back = experiment_config_from_json(experiment_config_to_json(cfg));
  CHECK(back.experiment == cfg.experiment);
  CHECK(back.state == cfg.state);
  CHECK(back.band == cfg.band);
  CHECK(back.electrodes == cfg.electrodes);
  CHECK(back.model == cfg.model);
  CHECK(back.conv_filters == cfg.conv_filters);
  CHECK(back.recurrent_units == cfg.recurrent_units);
  CHECK(back.td_dense_units == cfg.td_dense_units);
  CHECK(back.dropout == cfg.dropout);
  CHECK(back.trials_per_state == cfg.trials_per_state);
  CHECK(back.butterworth_order == cfg.butterworth_order);
  CHECK(back.train.learning_rate == cfg.train.learning_rate);
  CHECK(back.train.batch_size == cfg.train.batch_size);
  CHECK(back.train.max_epochs == cfg.train.max_epochs);
  CHECK(back.train.patience == cfg.train.patience);
  CHECK(back.seed_data == cfg.seed_data);
  CHECK(back.seed_folds == cfg.seed_folds);
  CHECK(back.seed_init == cfg.seed_init);
  CHECK(back.label == cfg.label);

  SUBCASE("misspelled keys are rejected instead of ignored") {
    auto j = experiment_config_to_json(cfg);
    j["bandd"] = "beta";
    CHECK_THROWS_AS(experiment_config_from_json(j), std::invalid_argument);
  }
}

TEST_CASE("report json round-trip keeps the statistics bit-exact") {
  CrrReport r;
  r.config = fast_config(ModelKind::SvmPsd);
  r.fold_crr = {90.0, 100.0, 80.0, 95.5};
  r.mean_crr = 91.375;
  r.stderr_crr = 4.2397;
  r.fold_train_loss = {{1.0, 0.5}, {1.1, 0.4}};
  r.fold_epoch_seconds = {0.25, 0.5};
  r.config_hash = "deadbeef";
  r.split_note = "note";

  const auto back = report_from_json(report_to_json(r));
  CHECK(back.fold_crr == r.fold_crr);
  CHECK(back.mean_crr == r.mean_crr);
  CHECK(back.stderr_crr == r.stderr_crr);
  CHECK(back.fold_train_loss == r.fold_train_loss);
  CHECK(back.config_hash == r.config_hash);
  CHECK(back.split_note == r.split_note);
  CHECK(back.config.model == r.config.model);
  CHECK(back.config.state == r.config.state);
}

TEST_CASE("state selection reproduces the qualifying-subject counts") {
  const auto recordings = rating_fixture();
  const std::pair<StateSelect, std::size_t> expected[] = {
      {StateSelect::LL, 26}, {StateSelect::LH, 24}, {StateSelect::HL, 23},
      {StateSelect::HH, 32}, {StateSelect::ALL, 32}};
  for (const auto& [state, n_subjects] : expected) {
    const auto subs = select_trials_and_subsample(recordings, state, 5, 4);
    CHECK(distinct_subjects(subs).size() == n_subjects);
  }
  // union size: (26+24+23+32) groups x 5 trials x 6 subsamples
  const auto all = select_trials_and_subsample(recordings, StateSelect::ALL, 5, 4);
  CHECK(all.size() == (26 + 24 + 23 + 32) * 5 * 6);
}

TEST_CASE("run_experiment produces a deterministic 10-fold report") {
  const auto recordings = generate_synthetic_dataset(3, 5, 77);
  DatasetManifest manifest;
  for (const auto& r : recordings) manifest.subjects.push_back(r.subject_id);
  manifest.channel_names = deap_channel_names();
  manifest.provenance = "synthetic";

  const ExperimentConfig cfg = fast_config(ModelKind::MahalanobisPsd);
  const auto a = run_experiment(cfg, recordings, manifest);
  const auto b = run_experiment(cfg, recordings, manifest);

  REQUIRE(a.fold_crr.size() == kFolds);
  for (double crr : a.fold_crr) {
    CHECK(crr >= 0.0);
    CHECK(crr <= 100.0);
  }
  CHECK(a.fold_crr == b.fold_crr);
  CHECK(a.mean_crr == b.mean_crr);
  CHECK(a.stderr_crr == b.stderr_crr);
  CHECK(a.config_hash == b.config_hash);
  CHECK(!a.config_hash.empty());
  CHECK(a.split_note.find("trial-disjoint") != std::string::npos);

  // the mean and standard error follow from the fold values
  double mean = 0.0;
  for (double v : a.fold_crr) mean += v;
  mean /= static_cast<double>(a.fold_crr.size());
  CHECK(a.mean_crr == doctest::Approx(mean).epsilon(1e-12));
  double var = 0.0;
  for (double v : a.fold_crr) var += (v - mean) * (v - mean);
  var /= static_cast<double>(a.fold_crr.size() - 1);
  CHECK(a.stderr_crr ==
        doctest::Approx(std::sqrt(var / static_cast<double>(a.fold_crr.size())))
            .epsilon(1e-12));

  SUBCASE("reports serialize to the three output files") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "neurobit_reports_test";
    fs::remove_all(dir);
    write_reports({a}, dir.string());
    CHECK(fs::exists(dir / "results.json"));
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "loss_curves.csv"));
    std::ifstream f(dir / "summary.csv");
    std::string header, row;
    std::getline(f, header);
    std::getline(f, row);
    CHECK(header ==
          "experiment,label,model,state,band,electrodes,mean_crr,stderr_crr,config_hash");
    CHECK(row.find("mahalanobis-psd") != std::string::npos);
    CHECK(row.find(a.config_hash) != std::string::npos);
  }
}
