#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "neurobit/neural/network.hpp"

namespace neurobit::nn {

struct TrainConfig {
  double learning_rate = 0.003;
  double rmsprop_decay = 0.9;
  double rmsprop_eps = 1e-8;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;  // early stop on validation loss
  std::uint64_t seed = 0;
  double target_train_loss = -1.0;  // stop once training loss drops below, if >= 0
};

template <typename T>
struct RmsPropState {
  std::vector<std::vector<T>> cache;

  template <typename Net>
  explicit RmsPropState(const Net& net) {
    for (const auto& p : net.params()) cache.emplace_back(p.size, T(0));
  }
};

// cache = rho*cache + (1-rho)*g^2 ; theta -= lr * g / (sqrt(cache) + eps).
// A zero gradient moves nothing regardless of cache contents.
template <typename T, typename Net>
void rmsprop_step(Net& net, RmsPropState<T>& state, const TrainConfig& cfg) {
  const T rho = static_cast<T>(cfg.rmsprop_decay);
  const T lr = static_cast<T>(cfg.learning_rate);
  const T eps = static_cast<T>(cfg.rmsprop_eps);
  auto& params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* v = params[i].value;
    T* g = params[i].grad;
    T* c = state.cache[i].data();
    for (std::size_t k = 0; k < params[i].size; ++k) {
      c[k] = rho * c[k] + (T(1) - rho) * g[k] * g[k];
      v[k] -= lr * g[k] / (std::sqrt(c[k]) + eps);
    }
  }
}

struct TrainResult {
  std::vector<double> train_loss;     // per epoch
  std::vector<double> val_loss;       // per epoch (empty if no validation set)
  std::vector<double> epoch_seconds;  // wall clock per epoch
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

template <typename T>
struct LabeledMeshes {
  std::vector<const Tensor<T>*> meshes;
  std::vector<int> labels;

  std::size_t size() const { return meshes.size(); }
};

template <typename T>
double evaluate_loss(const Network<T>& net, const LabeledMeshes<T>& data) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto probs = net.forward(*data.meshes[i]);
    const double p = std::max(static_cast<double>(probs[static_cast<std::size_t>(
                                  data.labels[i])]),
                              1e-30);
    loss -= std::log(p);
  }
  return loss / static_cast<double>(data.size());
}

template <typename T>
double evaluate_accuracy(const Network<T>& net, const LabeledMeshes<T>& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto probs = net.forward(*data.meshes[i]);
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < probs.size(); ++k) {
      if (probs[k] > probs[argmax]) argmax = k;
    }
    if (static_cast<int>(argmax) == data.labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

// Minibatch RMSprop with per-epoch shuffling, early stopping on validation
// loss (best parameters restored), and loss/time histories.
template <typename T>
TrainResult train(Network<T>& net, const LabeledMeshes<T>& train_data,
                  const LabeledMeshes<T>& val_data, const TrainConfig& cfg) {
  if (train_data.size() == 0) throw std::invalid_argument("train: empty training set");
  Rng rng(cfg.seed);
  RmsPropState<T> opt(net);
  TrainResult result;

  std::vector<std::size_t> order(train_data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::vector<T>> best_params;
  std::vector<std::vector<T>> best_bn;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // Fisher-Yates, deterministic given seed
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng.next() % i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<const Tensor<T>*> batch;
      std::vector<int> labels;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(train_data.meshes[order[i]]);
        labels.push_back(train_data.labels[order[i]]);
      }
      // batchnorm needs at least two time-distributed rows; a trailing
      // singleton batch still has windows x 81 rows, so this always holds
      net.zero_grads();
      const auto stats = net.forward_backward(batch, labels, rng);
      rmsprop_step(net, opt, cfg);
      epoch_loss += static_cast<double>(stats.loss) * static_cast<double>(batch.size());
      seen += batch.size();
    }
    epoch_loss /= static_cast<double>(seen);
    result.train_loss.push_back(epoch_loss);

    if (val_data.size() > 0) {
      const double vl = evaluate_loss(net, val_data);
      result.val_loss.push_back(vl);
      if (vl < best_val - 1e-9) {
        best_val = vl;
        since_best = 0;
        result.best_epoch = epoch;
        best_params.clear();
        for (const auto& p : net.params()) best_params.emplace_back(p.value, p.value + p.size);
        best_bn.clear();
        for (const auto* s : net.batchnorm_state()) best_bn.push_back(*s);
      } else {
        ++since_best;
      }
    }

    const auto t1 = std::chrono::steady_clock::now();
    result.epoch_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());

    if (cfg.target_train_loss >= 0.0 && epoch_loss <= cfg.target_train_loss) break;
    if (val_data.size() > 0 && since_best > cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }

  if (!best_params.empty()) {
    auto& params = net.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      std::copy(best_params[i].begin(), best_params[i].end(), params[i].value);
    }
    auto bn = net.batchnorm_state();
    for (std::size_t i = 0; i < bn.size(); ++i) *bn[i] = best_bn[i];
  }
  return result;
}

}  // namespace neurobit::nn
