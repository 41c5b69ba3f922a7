#pragma once

#include <string>
#include <vector>

#include "neurobit/data_io.hpp"
#include "neurobit/signal_prep.hpp"

namespace neurobit {

enum class FeatureKind { PSD, COH };

// Element-structured feature: PSD -> one 65-bin log-PSD vector per electrode
// (32 elements); COH -> one Fisher-z coherence vector per electrode pair
// (496 elements), band-limited to the experiment band.
struct FeatureVector {
  FeatureKind kind = FeatureKind::PSD;
  std::vector<std::vector<double>> elements;

  std::vector<double> flattened() const;
};

inline constexpr double kPsdLogFloor = 1e-12;
inline constexpr double kCoherenceCeil = 1.0 - 1e-9;

FeatureVector extract_psd_features(const Subsample& sub,
                                   const WelchParams& params = {});
FeatureVector extract_coh_features(const Subsample& sub, const BandSpec& band,
                                   const WelchParams& params = {});

// ---------------------------------------------------------------------------
// one-vs-one linear soft-margin SVM
// ---------------------------------------------------------------------------

struct PairClassifier {
  int class_a = 0, class_b = 0;  // positive margin votes class_a
  std::vector<double> w;
  double b = 0.0;
};

struct SvmModel {
  int n_classes = 0;
  double capacity = 1.0;  // selected C
  Standardizer standardizer;
  std::vector<PairClassifier> pairs;  // N(N-1)/2
};

inline const std::vector<double>& svm_capacity_grid() {
  static const std::vector<double> grid = {0.01, 0.1, 1.0, 10.0, 100.0};
  return grid;
}

// Dual coordinate descent on the pairwise L1-loss soft-margin problem,
// KKT-violation tolerance 1e-6. C picked from the grid by validation CRR.
SvmModel fit_svm(const std::vector<std::vector<double>>& train_features,
                 const std::vector<int>& train_labels,
                 const std::vector<std::vector<double>>& val_features,
                 const std::vector<int>& val_labels);

// Same but with a fixed C (no grid search).
SvmModel fit_svm_fixed_c(const std::vector<std::vector<double>>& train_features,
                         const std::vector<int>& train_labels, double capacity);

int predict_svm(const SvmModel& model, const std::vector<double>& feature);

// Training hinge violations (xi_i > 0 count) at the model's C; used to check
// the penalty monotonicity property.
std::size_t svm_hinge_violations(const SvmModel& model,
                                 const std::vector<std::vector<double>>& features,
                                 const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Mahalanobis distance classifier with pooled covariance, all-element fusion
// ---------------------------------------------------------------------------

struct MahalanobisElement {
  std::vector<std::vector<double>> class_means;  // [class][dim]
  // lower Cholesky factor of the regularized pooled covariance
  std::vector<std::vector<double>> chol;
};

struct MahalanobisModel {
  int n_classes = 0;
  FeatureKind kind = FeatureKind::PSD;
  std::vector<int> class_ids;  // sorted; index aligns with class_means rows
  std::vector<MahalanobisElement> elements;
};

MahalanobisModel fit_mahalanobis(const std::vector<FeatureVector>& train,
                                 const std::vector<int>& labels);

struct MahalanobisDecision {
  int label = 0;
  std::vector<double> fused_scores;  // summed distance per class, lower wins
};

MahalanobisDecision classify_mahalanobis(const MahalanobisModel& model,
                                         const FeatureVector& feature);

}  // namespace neurobit
