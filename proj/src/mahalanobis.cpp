#include "neurobit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace neurobit {

namespace {

// In-place lower Cholesky; returns false on a non-PD matrix.
bool cholesky(std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j][j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j][k] * a[j][k];
    if (diag <= 0.0) return false;
    a[j][j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i][j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i][k] * a[j][k];
      a[i][j] = v / a[j][j];
    }
    for (std::size_t i = 0; i < j; ++i) a[i][j] = 0.0;
  }
  return true;
}

// d = r^T Sigma^{-1} r with Sigma = L L^T: solve L y = r, return ||y||^2.
double mahalanobis_sq(const std::vector<std::vector<double>>& chol,
                      std::vector<double> r) {
  const std::size_t n = r.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = r[i];
    for (std::size_t k = 0; k < i; ++k) v -= chol[i][k] * r[k];
    r[i] = v / chol[i][i];
    d += r[i] * r[i];
  }
  return d;
}

}  // namespace

MahalanobisModel fit_mahalanobis(const std::vector<FeatureVector>& train,
                                 const std::vector<int>& labels) {
  if (train.empty() || train.size() != labels.size()) {
    throw std::invalid_argument("fit_mahalanobis: empty or mismatched training set");
  }
  const std::size_t n_elements = train[0].elements.size();
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [cls, idx] : by_class) {
    if (idx.size() < 2) {
      throw std::invalid_argument("fit_mahalanobis: class " + std::to_string(cls) +
                                  " has fewer than 2 training samples");
    }
  }

  MahalanobisModel model;
  model.n_classes = static_cast<int>(by_class.size());
  model.kind = train[0].kind;
  for (const auto& [cls, idx] : by_class) model.class_ids.push_back(cls);
  model.elements.resize(n_elements);

  for (std::size_t e = 0; e < n_elements; ++e) {
    const std::size_t dim = train[0].elements[e].size();
    MahalanobisElement& elem = model.elements[e];
    std::vector<std::vector<double>> pooled(dim, std::vector<double>(dim, 0.0));

    for (const auto& [cls, idx] : by_class) {
      std::vector<double> mean(dim, 0.0);
      for (std::size_t i : idx) {
        const auto& x = train[i].elements[e];
        for (std::size_t k = 0; k < dim; ++k) mean[k] += x[k];
      }
      for (double& v : mean) v /= static_cast<double>(idx.size());
      // unbiased per-class covariance, averaged across classes
      const double inv = 1.0 / (static_cast<double>(idx.size()) - 1.0);
      for (std::size_t i : idx) {
        const auto& x = train[i].elements[e];
        for (std::size_t a = 0; a < dim; ++a) {
          const double da = x[a] - mean[a];
          for (std::size_t b = a; b < dim; ++b) {
            pooled[a][b] += da * (x[b] - mean[b]) * inv;
          }
        }
      }
      elem.class_means.push_back(std::move(mean));
    }
    double trace = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = a; b < dim; ++b) {
        pooled[a][b] /= static_cast<double>(by_class.size());
        pooled[b][a] = pooled[a][b];
      }
      trace += pooled[a][a];
    }
    const double ridge = 1e-6 * trace / static_cast<double>(dim);
    for (std::size_t a = 0; a < dim; ++a) pooled[a][a] += ridge;
    if (!cholesky(pooled)) {
      throw std::runtime_error("fit_mahalanobis: pooled covariance singular at element " +
                               std::to_string(e));
    }
    elem.chol = std::move(pooled);
  }
  return model;
}

MahalanobisDecision classify_mahalanobis(const MahalanobisModel& model,
                                         const FeatureVector& feature) {
  if (feature.elements.size() != model.elements.size()) {
    throw std::invalid_argument("classify_mahalanobis: element count mismatch");
  }
  const std::size_t n_classes = static_cast<std::size_t>(model.n_classes);
  MahalanobisDecision out;
  out.fused_scores.assign(n_classes, 0.0);
  for (std::size_t e = 0; e < model.elements.size(); ++e) {
    const MahalanobisElement& elem = model.elements[e];
    const auto& x = feature.elements[e];
    for (std::size_t n = 0; n < n_classes; ++n) {
      std::vector<double> r(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) r[k] = x[k] - elem.class_means[n][k];
      out.fused_scores[n] += mahalanobis_sq(elem.chol, std::move(r));
    }
  }
  std::size_t best = 0;  // strict < keeps the lowest class index on ties
  for (std::size_t n = 1; n < n_classes; ++n) {
    if (out.fused_scores[n] < out.fused_scores[best]) best = n;
  }
  out.label = model.class_ids[best];
  return out;
}

}  // namespace neurobit
