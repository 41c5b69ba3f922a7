#include "neurobit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace neurobit {

namespace {

// Dual coordinate descent for the linear L1-loss soft-margin SVM:
//   min_a  1/2 ||sum_i a_i y_i x_i||^2 - sum_i a_i ,  0 <= a_i <= C.
// Bias handled by augmenting features with a constant 1.
PairClassifier train_pair(const std::vector<const std::vector<double>*>& xs,
                          const std::vector<int>& ys, double capacity,
                          int class_a, int class_b) {
  const std::size_t n = xs.size();
  const std::size_t d = xs[0]->size() + 1;  // + bias column
  std::vector<double> w(d, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> qii(n);
  for (std::size_t i = 0; i < n; ++i) {
    double q = 1.0;  // bias column
    for (double v : *xs[i]) q += v * v;
    qii[i] = q;
  }

  const double tol = 1e-6;
  const int max_epochs = 1000;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    double max_violation = 0.0;
    for (std::size_t idx : order) {
      const auto& x = *xs[idx];
      const double y = ys[idx];
      double margin = w[d - 1];
      for (std::size_t k = 0; k + 1 < d; ++k) margin += w[k] * x[k];
      const double g = y * margin - 1.0;  // dual gradient

      double pg = g;  // projected gradient
      if (alpha[idx] <= 0.0) pg = std::min(g, 0.0);
      else if (alpha[idx] >= capacity) pg = std::max(g, 0.0);
      max_violation = std::max(max_violation, std::abs(pg));
      if (std::abs(pg) < 1e-12) continue;

      const double old = alpha[idx];
      alpha[idx] = std::clamp(old - g / qii[idx], 0.0, capacity);
      const double delta = (alpha[idx] - old) * y;
      if (delta != 0.0) {
        for (std::size_t k = 0; k + 1 < d; ++k) w[k] += delta * x[k];
        w[d - 1] += delta;
      }
    }
    if (max_violation < tol) break;
  }

  PairClassifier pc;
  pc.class_a = class_a;
  pc.class_b = class_b;
  pc.b = w[d - 1];
  w.pop_back();
  pc.w = std::move(w);
  return pc;
}

std::vector<int> sorted_classes(const std::vector<int>& labels) {
  std::vector<int> classes = labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

SvmModel fit_all_pairs(const std::vector<std::vector<double>>& features,
                       const std::vector<int>& labels, double capacity,
                       const Standardizer& standardizer) {
  const std::vector<int> classes = sorted_classes(labels);
  if (classes.size() < 2) throw std::invalid_argument("SVM needs >= 2 classes");

  std::vector<std::vector<double>> std_features;
  std_features.reserve(features.size());
  for (const auto& f : features) std_features.push_back(apply_standardizer(standardizer, f));

  SvmModel model;
  model.n_classes = static_cast<int>(classes.size());
  model.capacity = capacity;
  model.standardizer = standardizer;
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      std::vector<const std::vector<double>*> xs;
      std::vector<int> ys;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == classes[a]) {
          xs.push_back(&std_features[i]);
          ys.push_back(+1);
        } else if (labels[i] == classes[b]) {
          xs.push_back(&std_features[i]);
          ys.push_back(-1);
        }
      }
      model.pairs.push_back(train_pair(xs, ys, capacity, classes[a], classes[b]));
    }
  }
  return model;
}

}  // namespace

SvmModel fit_svm_fixed_c(const std::vector<std::vector<double>>& train_features,
                         const std::vector<int>& train_labels, double capacity) {
  const Standardizer s = fit_standardizer(train_features);
  return fit_all_pairs(train_features, train_labels, capacity, s);
}

SvmModel fit_svm(const std::vector<std::vector<double>>& train_features,
                 const std::vector<int>& train_labels,
                 const std::vector<std::vector<double>>& val_features,
                 const std::vector<int>& val_labels) {
  if (val_features.size() != val_labels.size() || val_features.empty()) {
    throw std::invalid_argument("fit_svm: validation set required for C selection");
  }
  const Standardizer s = fit_standardizer(train_features);
  double best_c = svm_capacity_grid().front();
  double best_crr = -1.0;
  SvmModel best_model;
  for (double c : svm_capacity_grid()) {
    SvmModel model = fit_all_pairs(train_features, train_labels, c, s);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < val_features.size(); ++i) {
      if (predict_svm(model, val_features[i]) == val_labels[i]) ++correct;
    }
    const double crr = 100.0 * static_cast<double>(correct) /
                       static_cast<double>(val_features.size());
    if (crr > best_crr) {
      best_crr = crr;
      best_c = c;
      best_model = std::move(model);
    }
  }
  best_model.capacity = best_c;
  return best_model;
}

int predict_svm(const SvmModel& model, const std::vector<double>& feature) {
  const std::vector<double> x = apply_standardizer(model.standardizer, feature);
  std::map<int, int> votes;
  std::map<int, double> deficit;  // summed hinge shortfall of the signed margin
  for (const PairClassifier& pc : model.pairs) {
    double f = pc.b;
    for (std::size_t k = 0; k < x.size(); ++k) f += pc.w[k] * x[k];
    votes[f >= 0.0 ? pc.class_a : pc.class_b] += 1;
    votes.try_emplace(pc.class_a, 0);
    votes.try_emplace(pc.class_b, 0);
    deficit[pc.class_a] += std::max(0.0, 1.0 - f);
    deficit[pc.class_b] += std::max(0.0, 1.0 + f);
  }
  // ascending class-id iteration makes "lowest class ID" the final tie-break
  int best = votes.begin()->first;
  for (const auto& [cls, v] : votes) {
    if (v > votes[best] || (v == votes[best] && deficit[cls] < deficit[best] - 1e-12)) {
      best = cls;
    }
  }
  return best;
}

std::size_t svm_hinge_violations(const SvmModel& model,
                                 const std::vector<std::vector<double>>& features,
                                 const std::vector<int>& labels) {
  std::size_t count = 0;
  for (const PairClassifier& pc : model.pairs) {
    for (std::size_t i = 0; i < features.size(); ++i) {
      int y = 0;
      if (labels[i] == pc.class_a) y = +1;
      else if (labels[i] == pc.class_b) y = -1;
      else continue;
      const std::vector<double> x = apply_standardizer(model.standardizer, features[i]);
      double f = pc.b;
      for (std::size_t k = 0; k < x.size(); ++k) f += pc.w[k] * x[k];
      if (y * f < 1.0 - 1e-9) ++count;
    }
  }
  return count;
}

}  // namespace neurobit
