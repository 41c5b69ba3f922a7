#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "neurobit/data_io.hpp"
#include "neurobit/neural/network.hpp"
#include "neurobit/neural/train.hpp"

namespace neurobit {

inline constexpr int kFolds = 10;
inline constexpr int kTrialsPerGroup = 5;

// Trial-granular stratified assignment: per (subject, state) group the 10
// folds are the ordered pairs (test = trial t, validation = trial (t+delta)
// mod 5), t in [0,5), delta in {1,2}; the other 3 trials train.
struct FoldPlan {
  struct GroupKey {
    int subject_id;
    AffectiveState state;
    bool operator<(const GroupKey& o) const {
      return subject_id != o.subject_id ? subject_id < o.subject_id : state < o.state;
    }
  };
  // seed-permuted 5-trial order per group
  std::map<GroupKey, std::vector<int>> group_trials;

  struct GroupAssignment {
    int test_trial;
    int val_trial;
  };
  GroupAssignment assignment(const GroupKey& key, int fold) const;
};

FoldPlan make_folds(const std::vector<Subsample>& subsamples, std::uint64_t seed);

struct FoldSplit {
  std::vector<std::size_t> train, val, test;  // indices into the subsample list
};

FoldSplit fold_split(const FoldPlan& plan, const std::vector<Subsample>& subsamples,
                     int fold);

double compute_crr(const std::vector<int>& predictions, const std::vector<int>& truth);

// ---------------------------------------------------------------------------
// experiment driver
// ---------------------------------------------------------------------------

enum class ModelKind { CnnGru, CnnLstm, SvmPsd, MahalanobisPsd, MahalanobisCoh };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct ExperimentConfig {
  std::string experiment = "I";  // I | II | III | IV
  std::string state = "ALL";     // LL | LH | HL | HH | ALL
  std::string band = "all";
  std::string electrodes = "ALL";
  ModelKind model = ModelKind::CnnGru;
  std::vector<std::size_t> conv_filters = {128, 64, 32};
  std::vector<std::size_t> recurrent_units = {32, 16};
  std::size_t td_dense_units = 128;
  double dropout = 0.3;
  int trials_per_state = 5;
  int butterworth_order = 4;
  nn::TrainConfig train;
  std::uint64_t seed_data = 1;
  std::uint64_t seed_folds = 2;
  std::uint64_t seed_init = 3;
  std::string label;  // free-form tag for sweep rows
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

struct CrrReport {
  ExperimentConfig config;
  std::vector<double> fold_crr;                       // percent, per fold
  double mean_crr = 0.0;
  double stderr_crr = 0.0;
  std::vector<std::vector<double>> fold_train_loss;   // per fold, per epoch
  std::vector<double> fold_epoch_seconds;             // mean wall clock per epoch
  std::string config_hash;
  std::string split_note;
};

nlohmann::json report_to_json(const CrrReport& report);
CrrReport report_from_json(const nlohmann::json& j);

// Full pipeline: common average reference + band filtering, trial selection,
// mesh/feature extraction, 10-fold train/evaluate. NEUROBIT_THREADS caps the
// fold-level worker count.
CrrReport run_experiment(const ExperimentConfig& cfg,
                         const std::vector<RawRecording>& recordings,
                         const DatasetManifest& manifest);

// Writes results.json (full), summary.csv (mean +/- SE rows) and
// loss_curves.csv into out_dir.
void write_reports(const std::vector<CrrReport>& reports, const std::string& out_dir);

int max_worker_threads();

}  // namespace neurobit
