#include "neurobit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

#include "neurobit/baselines.hpp"
#include "neurobit/mesh.hpp"
#include "neurobit/signal_prep.hpp"

namespace neurobit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

FoldPlan::GroupAssignment FoldPlan::assignment(const GroupKey& key, int fold) const {
  const auto it = group_trials.find(key);
  if (it == group_trials.end()) throw std::invalid_argument("unknown fold group");
  const int t = fold / 2;
  const int delta = fold % 2 + 1;
  return {it->second[static_cast<std::size_t>(t)],
          it->second[static_cast<std::size_t>((t + delta) % kTrialsPerGroup)]};
}

FoldPlan make_folds(const std::vector<Subsample>& subsamples, std::uint64_t seed) {
  FoldPlan plan;
  std::map<FoldPlan::GroupKey, std::set<int>> trials;
  for (const Subsample& s : subsamples) {
    trials[{s.subject_id, s.state}].insert(s.trial_id);
  }
  for (const auto& [key, set] : trials) {
    if (set.size() != kTrialsPerGroup) {
      throw std::invalid_argument(
          "make_folds: subject " + std::to_string(key.subject_id) + " state " +
          to_string(key.state) + " has " + std::to_string(set.size()) +
          " trials, expected exactly 5");
    }
    std::vector<int> order(set.begin(), set.end());
    std::mt19937_64 rng(mix64(seed ^ mix64(static_cast<std::uint64_t>(key.subject_id) * 8 +
                                           static_cast<std::uint64_t>(key.state))));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    plan.group_trials[key] = std::move(order);
  }
  return plan;
}

FoldSplit fold_split(const FoldPlan& plan, const std::vector<Subsample>& subsamples,
                     int fold) {
  if (fold < 0 || fold >= kFolds) throw std::invalid_argument("fold index out of range");
  FoldSplit split;
  for (std::size_t i = 0; i < subsamples.size(); ++i) {
    const Subsample& s = subsamples[i];
    const auto a = plan.assignment({s.subject_id, s.state}, fold);
    if (s.trial_id == a.test_trial) split.test.push_back(i);
    else if (s.trial_id == a.val_trial) split.val.push_back(i);
    else split.train.push_back(i);
  }
  return split;
}

double compute_crr(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (predictions.empty() || predictions.size() != truth.size()) {
    throw std::invalid_argument("compute_crr: empty or mismatched inputs");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == truth[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::CnnGru: return "cnn-gru";
    case ModelKind::CnnLstm: return "cnn-lstm";
    case ModelKind::SvmPsd: return "svm-psd";
    case ModelKind::MahalanobisPsd: return "mahalanobis-psd";
    case ModelKind::MahalanobisCoh: return "mahalanobis-coh";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "cnn-gru") return ModelKind::CnnGru;
  if (s == "cnn-lstm") return ModelKind::CnnLstm;
  if (s == "svm-psd") return ModelKind::SvmPsd;
  if (s == "mahalanobis-psd") return ModelKind::MahalanobisPsd;
  if (s == "mahalanobis-coh") return ModelKind::MahalanobisCoh;
  throw std::invalid_argument("unknown model kind: " + s);
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.experiment = j.value("experiment", "I");
  cfg.state = j.value("state", "ALL");
  cfg.band = j.value("band", "all");
  cfg.electrodes = j.value("electrodes", "ALL");
  if (j.contains("model")) {
    const json& m = j.at("model");
    cfg.model = model_kind_from_string(m.value("kind", "cnn-gru"));
    cfg.conv_filters = m.value("conv_filters", cfg.conv_filters);
    cfg.recurrent_units = m.value("recurrent_units", cfg.recurrent_units);
    cfg.td_dense_units = m.value("td_dense_units", cfg.td_dense_units);
    cfg.dropout = m.value("dropout", cfg.dropout);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    cfg.train.learning_rate = t.value("lr", cfg.train.learning_rate);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
    cfg.train.patience = t.value("patience", cfg.train.patience);
  }
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    cfg.seed_data = s.value("data", cfg.seed_data);
    cfg.seed_folds = s.value("folds", cfg.seed_folds);
    cfg.seed_init = s.value("init", cfg.seed_init);
  }
  cfg.trials_per_state = j.value("trials_per_state", cfg.trials_per_state);
  cfg.butterworth_order = j.value("butterworth_order", cfg.butterworth_order);
  cfg.label = j.value("label", "");
  // guard against silently ignored misspelled top-level keys
  static const std::set<std::string> known = {
      "experiment", "state", "band", "electrodes", "model", "train",
      "seeds", "trials_per_state", "butterworth_order", "label"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key: " + key);
  }
  return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["state"] = cfg.state;
  j["band"] = cfg.band;
  j["electrodes"] = cfg.electrodes;
  j["model"] = {{"kind", to_string(cfg.model)},
                {"conv_filters", cfg.conv_filters},
                {"recurrent_units", cfg.recurrent_units},
                {"td_dense_units", cfg.td_dense_units},
                {"dropout", cfg.dropout}};
  j["train"] = {{"lr", cfg.train.learning_rate},
                {"batch_size", cfg.train.batch_size},
                {"max_epochs", cfg.train.max_epochs},
                {"patience", cfg.train.patience}};
  j["seeds"] = {{"data", cfg.seed_data}, {"folds", cfg.seed_folds}, {"init", cfg.seed_init}};
  j["trials_per_state"] = cfg.trials_per_state;
  j["butterworth_order"] = cfg.butterworth_order;
  j["label"] = cfg.label;
  return j;
}

namespace {

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void finalize_stats(CrrReport& report) {
  const double n = static_cast<double>(report.fold_crr.size());
  double mean = 0.0;
  for (double v : report.fold_crr) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : report.fold_crr) var += (v - mean) * (v - mean);
  // sample SD / sqrt(n)
  const double se = n > 1 ? std::sqrt(var / (n - 1.0)) / std::sqrt(n) : 0.0;
  report.mean_crr = mean;
  report.stderr_crr = se;
}

}  // namespace

json report_to_json(const CrrReport& report) {
  json j;
  j["config"] = experiment_config_to_json(report.config);
  j["fold_crr"] = report.fold_crr;
  j["mean_crr"] = report.mean_crr;
  j["stderr_crr"] = report.stderr_crr;
  j["fold_train_loss"] = report.fold_train_loss;
  j["fold_epoch_seconds"] = report.fold_epoch_seconds;
  j["config_hash"] = report.config_hash;
  j["split_note"] = report.split_note;
  return j;
}

CrrReport report_from_json(const json& j) {
  CrrReport r;
  r.config = experiment_config_from_json(j.at("config"));
  r.fold_crr = j.at("fold_crr").get<std::vector<double>>();
  r.mean_crr = j.at("mean_crr").get<double>();
  r.stderr_crr = j.at("stderr_crr").get<double>();
  r.fold_train_loss = j.value("fold_train_loss", std::vector<std::vector<double>>{});
  r.fold_epoch_seconds = j.value("fold_epoch_seconds", std::vector<double>{});
  r.config_hash = j.value("config_hash", "");
  r.split_note = j.value("split_note", "");
  return r;
}

int max_worker_threads() {
  if (const char* env = std::getenv("NEUROBIT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace {

struct FoldOutcome {
  double crr = 0.0;
  std::vector<double> train_loss;
  double mean_epoch_seconds = 0.0;
};

// Runs fn(fold) for folds 0..9 on up to max_worker_threads() workers.
template <typename Fn>
void for_each_fold(Fn&& fn) {
  const int workers = std::min(max_worker_threads(), kFolds);
  if (workers <= 1) {
    for (int f = 0; f < kFolds; ++f) fn(f);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int f = next.fetch_add(1); f < kFolds; f = next.fetch_add(1)) fn(f);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

CrrReport run_experiment(const ExperimentConfig& cfg,
                         const std::vector<RawRecording>& recordings,
                         const DatasetManifest& manifest) {
  CrrReport report;
  report.config = cfg;
  report.config_hash = fnv1a_hex(experiment_config_to_json(cfg).dump());
  report.split_note =
      "trial-disjoint 3/1/1 split per subject per state (60/20/20 by subsample)";

  // preprocessing: common average reference, then the experiment band
  const BandSpec band = band_by_name(cfg.band);
  const FilterCoeffs coeffs =
      design_butterworth_bandpass(cfg.butterworth_order, band, kSampleRateHz);
  std::vector<RawRecording> prepped = recordings;
  for (RawRecording& rec : prepped) {
    for (auto& trial : rec.trials) {
      trial = filter_signal(common_average_reference(trial), coeffs);
    }
  }

  const StateSelect state = state_select_from_string(cfg.state);
  const std::vector<Subsample> subsamples = select_trials_and_subsample(
      prepped, state, cfg.trials_per_state, cfg.seed_data);
  prepped.clear();
  prepped.shrink_to_fit();

  // dense class indices in subject order
  std::vector<int> subjects;
  for (const Subsample& s : subsamples) subjects.push_back(s.subject_id);
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  auto class_of = [&subjects](int subject_id) {
    return static_cast<int>(std::lower_bound(subjects.begin(), subjects.end(),
                                             subject_id) -
                            subjects.begin());
  };
  std::vector<int> labels(subsamples.size());
  for (std::size_t i = 0; i < subsamples.size(); ++i) labels[i] = class_of(subsamples[i].subject_id);

  const FoldPlan plan = make_folds(subsamples, cfg.seed_folds);
  std::vector<FoldOutcome> outcomes(kFolds);

  const bool is_neural = cfg.model == ModelKind::CnnGru || cfg.model == ModelKind::CnnLstm;
  if (is_neural) {
    const MeshLayout layout = build_standard_layout(manifest.channel_names);
    const ElectrodeSet active = electrode_set(cfg.electrodes);
    std::vector<TensorF> meshes(subsamples.size());
    for (std::size_t i = 0; i < subsamples.size(); ++i) {
      meshes[i] = encode_subsample(subsamples[i], manifest.channel_names, layout, active)
                      .windows;
    }

    nn::NetworkConfig net_cfg;
    net_cfg.conv_filters = cfg.conv_filters;
    net_cfg.recurrent_units = cfg.recurrent_units;
    net_cfg.td_dense_units = cfg.td_dense_units;
    net_cfg.dropout = cfg.dropout;
    net_cfg.recurrent_kind =
        cfg.model == ModelKind::CnnGru ? nn::RecurrentKind::GRU : nn::RecurrentKind::LSTM;
    net_cfg.n_classes = subjects.size();

    for_each_fold([&](int fold) {
      const FoldSplit split = fold_split(plan, subsamples, fold);
      auto gather = [&](const std::vector<std::size_t>& idx) {
        nn::LabeledMeshes<float> set;
        for (std::size_t i : idx) {
          set.meshes.push_back(&meshes[i]);
          set.labels.push_back(labels[i]);
        }
        return set;
      };
      const auto train_set = gather(split.train);
      const auto val_set = gather(split.val);
      const auto test_set = gather(split.test);

      nn::Network<float> net(net_cfg, cfg.seed_init + static_cast<std::uint64_t>(fold));
      nn::TrainConfig tc = cfg.train;
      tc.seed = cfg.seed_init * 1000 + static_cast<std::uint64_t>(fold);
      const nn::TrainResult tr = nn::train(net, train_set, val_set, tc);

      FoldOutcome& out = outcomes[static_cast<std::size_t>(fold)];
      out.crr = nn::evaluate_accuracy(net, test_set);
      out.train_loss = tr.train_loss;
      double mean_sec = 0.0;
      for (double s : tr.epoch_seconds) mean_sec += s;
      out.mean_epoch_seconds = tr.epoch_seconds.empty()
                                   ? 0.0
                                   : mean_sec / static_cast<double>(tr.epoch_seconds.size());
    });
  } else {
    // baseline features computed once, shared across folds
    std::vector<FeatureVector> features(subsamples.size());
    const bool coh = cfg.model == ModelKind::MahalanobisCoh;
    for (std::size_t i = 0; i < subsamples.size(); ++i) {
      features[i] = coh ? extract_coh_features(subsamples[i], band)
                        : extract_psd_features(subsamples[i]);
    }

    for_each_fold([&](int fold) {
      const FoldSplit split = fold_split(plan, subsamples, fold);
      std::vector<int> predictions, truth;
      if (cfg.model == ModelKind::SvmPsd) {
        std::vector<std::vector<double>> train_x, val_x;
        std::vector<int> train_y, val_y;
        for (std::size_t i : split.train) {
          train_x.push_back(features[i].flattened());
          train_y.push_back(labels[i]);
        }
        for (std::size_t i : split.val) {
          val_x.push_back(features[i].flattened());
          val_y.push_back(labels[i]);
        }
        const SvmModel model = fit_svm(train_x, train_y, val_x, val_y);
        for (std::size_t i : split.test) {
          predictions.push_back(predict_svm(model, features[i].flattened()));
          truth.push_back(labels[i]);
        }
      } else {
        std::vector<FeatureVector> train_f;
        std::vector<int> train_y;
        for (std::size_t i : split.train) {
          train_f.push_back(features[i]);
          train_y.push_back(labels[i]);
        }
        const MahalanobisModel model = fit_mahalanobis(train_f, train_y);
        for (std::size_t i : split.test) {
          predictions.push_back(classify_mahalanobis(model, features[i]).label);
          truth.push_back(labels[i]);
        }
      }
      outcomes[static_cast<std::size_t>(fold)].crr = compute_crr(predictions, truth);
    });
  }

  for (const FoldOutcome& out : outcomes) {
    report.fold_crr.push_back(out.crr);
    if (is_neural) {
      report.fold_train_loss.push_back(out.train_loss);
      report.fold_epoch_seconds.push_back(out.mean_epoch_seconds);
    }
  }
  finalize_stats(report);
  return report;
}

void write_reports(const std::vector<CrrReport>& reports, const std::string& out_dir) {
  if (reports.empty()) throw std::invalid_argument("write_reports: no reports");
  fs::create_directories(out_dir);

  json all = json::array();
  for (const CrrReport& r : reports) all.push_back(report_to_json(r));
  {
    std::ofstream f(fs::path(out_dir) / "results.json");
    if (!f) throw std::runtime_error("cannot write results.json in " + out_dir);
    f << all.dump(2) << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "summary.csv");
    if (!f) throw std::runtime_error("cannot write summary.csv in " + out_dir);
    f << "experiment,label,model,state,band,electrodes,mean_crr,stderr_crr,config_hash\n";
    for (const CrrReport& r : reports) {
      f << r.config.experiment << "," << r.config.label << "," << to_string(r.config.model)
        << "," << r.config.state << "," << r.config.band << "," << r.config.electrodes
        << "," << r.mean_crr << "," << r.stderr_crr << "," << r.config_hash << "\n";
    }
  }
  {
    std::ofstream f(fs::path(out_dir) / "loss_curves.csv");
    if (!f) throw std::runtime_error("cannot write loss_curves.csv in " + out_dir);
    f << "series,fold,epoch,train_loss\n";
    for (const CrrReport& r : reports) {
      const std::string series = r.config.label.empty()
                                     ? to_string(r.config.model)
                                     : r.config.label;
      for (std::size_t fold = 0; fold < r.fold_train_loss.size(); ++fold) {
        for (std::size_t e = 0; e < r.fold_train_loss[fold].size(); ++e) {
          f << series << "," << fold << "," << e << "," << r.fold_train_loss[fold][e]
            << "\n";
        }
      }
    }
  }
}

}  // namespace neurobit
