#pragma once

#include <memory>
#include <string>
#include <vector>

#include "neurobit/neural/layers.hpp"
#include "neurobit/neural/recurrent.hpp"
#include "neurobit/neural/rng.hpp"
#include "neurobit/tensor.hpp"

namespace neurobit::nn {

enum class RecurrentKind { GRU, LSTM };

struct NetworkConfig {
  std::vector<std::size_t> conv_filters = {128, 64, 32};
  std::size_t td_dense_units = 128;
  RecurrentKind recurrent_kind = RecurrentKind::GRU;
  std::vector<std::size_t> recurrent_units = {32, 16};
  double dropout = 0.3;
  std::size_t n_classes = 0;
  // input geometry
  std::size_t windows = 10;
  std::size_t mesh_rows = 9;
  std::size_t mesh_cols = 9;
  std::size_t window_len = 128;

  void validate() const {
    if (conv_filters.empty()) throw std::invalid_argument("config: need >= 1 conv layer");
    if (recurrent_units.empty()) throw std::invalid_argument("config: need >= 1 recurrent layer");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("config: dropout in [0,1)");
    if (n_classes < 2) throw std::invalid_argument("config: need >= 2 classes");
  }
};

// Trainable-weight count from the closed forms: conv 9*Cin*Cout + 2*Cout
// (batchnorm gamma/beta), dense d*n, GRU 3(dn+n^2), LSTM 4(dn+n^2)+3n.
std::size_t param_count(const NetworkConfig& cfg);

template <typename T>
struct ConvBlock {
  Tensor<T> kernels;  // [3,3,Cin,Cout]
  std::vector<T> bias;
  BatchNormParams<T> bn;
};

template <typename T>
struct ConvBlockGrads {
  Tensor<T> kernels;
  std::vector<T> bias;
  std::vector<T> gamma, beta;
};

template <typename T>
struct DenseLayer {
  Tensor<T> w;  // [in, out]
  std::vector<T> b;
};

template <typename T>
struct ParamView {
  std::string name;
  T* value = nullptr;
  T* grad = nullptr;
  std::size_t size = 0;
};

template <typename T>
struct TrainStats {
  T loss = T(0);
  std::size_t correct = 0;
};

// Time-distributed conv stack -> TD dense -> stacked GRU/LSTM -> softmax.
template <typename T>
class Network {
 public:
  Network(const NetworkConfig& cfg, std::uint64_t init_seed);

  const NetworkConfig& config() const { return cfg_; }

  // Inference on one mesh sequence [S, 9, 9, window]; returns class
  // probabilities.
  std::vector<T> forward(const Tensor<T>& mesh) const;

  // One training step over a batch: forward, loss, backward into the grad
  // buffers (averaged over the batch). Dropout masks come from `rng`.
  TrainStats<T> forward_backward(const std::vector<const Tensor<T>*>& batch,
                                 const std::vector<int>& labels, Rng& rng);

  std::vector<ParamView<T>>& params() { return params_; }
  const std::vector<ParamView<T>>& params() const { return params_; }

  // batchnorm running statistics: state that travels with the model but
  // takes no gradient
  std::vector<std::vector<T>*> batchnorm_state() {
    std::vector<std::vector<T>*> out;
    for (auto& block : conv_) {
      out.push_back(&block.bn.running_mean);
      out.push_back(&block.bn.running_var);
    }
    return out;
  }

  void zero_grads();

 private:
  void register_params();

  NetworkConfig cfg_;
  std::vector<ConvBlock<T>> conv_;
  DenseLayer<T> td_dense_;
  std::vector<GruParams<T>> gru_;
  std::vector<LstmParams<T>> lstm_;
  DenseLayer<T> out_;

  // gradient mirrors
  std::vector<ConvBlockGrads<T>> g_conv_;
  DenseLayer<T> g_td_dense_;
  std::vector<std::unique_ptr<GruGrads<T>>> g_gru_;
  std::vector<std::unique_ptr<LstmGrads<T>>> g_lstm_;
  DenseLayer<T> g_out_;

  std::vector<ParamView<T>> params_;
};

// ---------------------------------------------------------------------------
// implementation
// ---------------------------------------------------------------------------

inline std::size_t param_count(const NetworkConfig& cfg) {
  cfg.validate();
  std::size_t total = 0;
  std::size_t cin = cfg.window_len;
  for (std::size_t cout : cfg.conv_filters) {
    total += 9 * cin * cout + 2 * cout;
    cin = cout;
  }
  const std::size_t flat = cfg.mesh_rows * cfg.mesh_cols * cin;
  total += flat * cfg.td_dense_units;
  std::size_t d = cfg.td_dense_units;
  for (std::size_t n : cfg.recurrent_units) {
    const std::size_t dn = d * n + n * n;
    total += cfg.recurrent_kind == RecurrentKind::GRU ? 3 * dn : 4 * dn + 3 * n;
    d = n;
  }
  total += d * cfg.n_classes;
  return total;
}

template <typename T>
Network<T>::Network(const NetworkConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(init_seed);
  auto glorot = [&rng](Tensor<T>& w, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (T& v : w.raw()) v = static_cast<T>(rng.uniform(-limit, limit));
  };

  std::size_t cin = cfg_.window_len;
  for (std::size_t cout : cfg_.conv_filters) {
    ConvBlock<T> block;
    block.kernels = Tensor<T>({3, 3, cin, cout});
    glorot(block.kernels, 9 * cin, 9 * cout);
    block.bias.assign(cout, T(0));
    block.bn = BatchNormParams<T>(cout);
    conv_.push_back(std::move(block));

    ConvBlockGrads<T> g;
    g.kernels = Tensor<T>({3, 3, cin, cout});
    g.bias.assign(cout, T(0));
    g.gamma.assign(cout, T(0));
    g.beta.assign(cout, T(0));
    g_conv_.push_back(std::move(g));
    cin = cout;
  }

  const std::size_t flat = cfg_.mesh_rows * cfg_.mesh_cols * cin;
  td_dense_.w = Tensor<T>({flat, cfg_.td_dense_units});
  glorot(td_dense_.w, flat, cfg_.td_dense_units);
  td_dense_.b.assign(cfg_.td_dense_units, T(0));
  g_td_dense_.w = Tensor<T>({flat, cfg_.td_dense_units});
  g_td_dense_.b.assign(cfg_.td_dense_units, T(0));

  std::size_t d = cfg_.td_dense_units;
  for (std::size_t n : cfg_.recurrent_units) {
    if (cfg_.recurrent_kind == RecurrentKind::GRU) {
      GruParams<T> p(d, n);
      for (Tensor<T>* w : {&p.wz, &p.wr, &p.wh}) glorot(*w, d, n);
      for (Tensor<T>* u : {&p.uz, &p.ur, &p.uh}) glorot(*u, n, n);
      gru_.push_back(std::move(p));
      g_gru_.push_back(std::make_unique<GruGrads<T>>(gru_.back()));
    } else {
      LstmParams<T> p(d, n);
      for (Tensor<T>* w : {&p.wi, &p.wo, &p.wf, &p.wc}) glorot(*w, d, n);
      for (Tensor<T>* u : {&p.ui, &p.uo, &p.uf, &p.uc}) glorot(*u, n, n);
      // peepholes start small
      for (std::vector<T>* v : {&p.vi, &p.vo, &p.vf}) {
        for (T& e : *v) e = static_cast<T>(rng.uniform(-0.1, 0.1));
      }
      lstm_.push_back(std::move(p));
      g_lstm_.push_back(std::make_unique<LstmGrads<T>>(lstm_.back()));
    }
    d = n;
  }

  out_.w = Tensor<T>({d, cfg_.n_classes});
  glorot(out_.w, d, cfg_.n_classes);
  out_.b.assign(cfg_.n_classes, T(0));
  g_out_.w = Tensor<T>({d, cfg_.n_classes});
  g_out_.b.assign(cfg_.n_classes, T(0));

  register_params();
}

template <typename T>
void Network<T>::register_params() {
  params_.clear();
  auto add = [this](const std::string& name, std::vector<T>& v, std::vector<T>& g) {
    params_.push_back({name, v.data(), g.data(), v.size()});
  };
  auto add_t = [this](const std::string& name, Tensor<T>& v, Tensor<T>& g) {
    params_.push_back({name, v.data(), g.data(), v.size()});
  };
  for (std::size_t l = 0; l < conv_.size(); ++l) {
    const std::string p = "conv" + std::to_string(l) + ".";
    add_t(p + "kernels", conv_[l].kernels, g_conv_[l].kernels);
    add(p + "bias", conv_[l].bias, g_conv_[l].bias);
    add(p + "bn.gamma", conv_[l].bn.gamma, g_conv_[l].gamma);
    add(p + "bn.beta", conv_[l].bn.beta, g_conv_[l].beta);
  }
  add_t("td_dense.w", td_dense_.w, g_td_dense_.w);
  add("td_dense.b", td_dense_.b, g_td_dense_.b);
  for (std::size_t l = 0; l < gru_.size(); ++l) {
    const std::string p = "gru" + std::to_string(l) + ".";
    add_t(p + "wz", gru_[l].wz, g_gru_[l]->wz);
    add_t(p + "wr", gru_[l].wr, g_gru_[l]->wr);
    add_t(p + "wh", gru_[l].wh, g_gru_[l]->wh);
    add_t(p + "uz", gru_[l].uz, g_gru_[l]->uz);
    add_t(p + "ur", gru_[l].ur, g_gru_[l]->ur);
    add_t(p + "uh", gru_[l].uh, g_gru_[l]->uh);
  }
  for (std::size_t l = 0; l < lstm_.size(); ++l) {
    const std::string p = "lstm" + std::to_string(l) + ".";
    add_t(p + "wi", lstm_[l].wi, g_lstm_[l]->wi);
    add_t(p + "wo", lstm_[l].wo, g_lstm_[l]->wo);
    add_t(p + "wf", lstm_[l].wf, g_lstm_[l]->wf);
    add_t(p + "wc", lstm_[l].wc, g_lstm_[l]->wc);
    add_t(p + "ui", lstm_[l].ui, g_lstm_[l]->ui);
    add_t(p + "uo", lstm_[l].uo, g_lstm_[l]->uo);
    add_t(p + "uf", lstm_[l].uf, g_lstm_[l]->uf);
    add_t(p + "uc", lstm_[l].uc, g_lstm_[l]->uc);
    add(p + "vi", lstm_[l].vi, g_lstm_[l]->vi);
    add(p + "vo", lstm_[l].vo, g_lstm_[l]->vo);
    add(p + "vf", lstm_[l].vf, g_lstm_[l]->vf);
  }
  add_t("out.w", out_.w, g_out_.w);
  add("out.b", out_.b, g_out_.b);
  // batchnorm running stats travel with checkpoints but take no gradient,
  // so they are not registered here (see checkpoint code).
}

template <typename T>
void Network<T>::zero_grads() {
  for (auto& p : params_) std::fill(p.grad, p.grad + p.size, T(0));
}

template <typename T>
std::vector<T> Network<T>::forward(const Tensor<T>& mesh) const {
  const std::size_t s_len = cfg_.windows;
  mesh.require_shape({s_len, cfg_.mesh_rows, cfg_.mesh_cols, cfg_.window_len},
                     "network forward input");
  const std::size_t hw = cfg_.mesh_rows * cfg_.mesh_cols;

  std::vector<Tensor<T>> images(s_len);
  for (std::size_t s = 0; s < s_len; ++s) {
    images[s] = Tensor<T>({cfg_.mesh_rows, cfg_.mesh_cols, cfg_.window_len});
    std::copy(mesh.data() + s * hw * cfg_.window_len,
              mesh.data() + (s + 1) * hw * cfg_.window_len, images[s].data());
  }
  for (std::size_t l = 0; l < conv_.size(); ++l) {
    for (auto& img : images) {
      Tensor<T> out;
      conv2d_forward(img, conv_[l].kernels, conv_[l].bias, out);
      batchnorm_forward_infer(out.raw(), conv_[l].kernels.extent(3), conv_[l].bn,
                              out.raw());
      relu_forward(out.raw());
      img = std::move(out);
    }
  }

  std::vector<std::vector<T>> xs(s_len);
  for (std::size_t s = 0; s < s_len; ++s) {
    xs[s].resize(cfg_.td_dense_units);
    dense_forward(images[s].data(), images[s].size(), td_dense_.w, td_dense_.b,
                  xs[s].data());
    relu_forward(xs[s]);
  }

  std::vector<std::vector<T>> hs = xs;
  const std::size_t n_layers = cfg_.recurrent_units.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t n = cfg_.recurrent_units[l];
    std::vector<std::vector<T>> next(s_len, std::vector<T>(n, T(0)));
    std::vector<T> h(n, T(0)), c(n, T(0));
    for (std::size_t s = 0; s < s_len; ++s) {
      if (cfg_.recurrent_kind == RecurrentKind::GRU) {
        gru_step(gru_[l], hs[s].data(), h.data(), static_cast<const T*>(nullptr),
                 next[s].data());
      } else {
        std::vector<T> c_out(n);
        lstm_step(lstm_[l], hs[s].data(), h.data(), c.data(),
                  static_cast<const T*>(nullptr), next[s].data(), c_out.data());
        c = std::move(c_out);
      }
      h = next[s];
    }
    hs = std::move(next);
  }

  std::vector<T> logits(cfg_.n_classes), probs(cfg_.n_classes);
  dense_forward(hs[s_len - 1].data(), hs[s_len - 1].size(), out_.w, out_.b,
                logits.data());
  softmax_xent(logits.data(), cfg_.n_classes, 0, probs.data(), static_cast<T*>(nullptr));
  return probs;
}

template <typename T>
TrainStats<T> Network<T>::forward_backward(const std::vector<const Tensor<T>*>& batch,
                                           const std::vector<int>& labels, Rng& rng) {
  const std::size_t b_sz = batch.size();
  if (b_sz == 0 || labels.size() != b_sz) {
    throw std::invalid_argument("forward_backward: empty batch or label mismatch");
  }
  const std::size_t s_len = cfg_.windows;
  const std::size_t hw = cfg_.mesh_rows * cfg_.mesh_cols;
  const std::size_t m = b_sz * s_len;  // time-distributed image count
  const double rate = cfg_.dropout;

  // --- conv stack forward, activations as [M*81, C] row blocks ---
  std::size_t cin = cfg_.window_len;
  std::vector<std::vector<T>> acts;  // acts[l] = input of conv layer l
  acts.emplace_back();
  acts[0].resize(m * hw * cin);
  for (std::size_t e = 0; e < b_sz; ++e) {
    batch[e]->require_shape({s_len, cfg_.mesh_rows, cfg_.mesh_cols, cfg_.window_len},
                            "network train input");
    std::copy(batch[e]->data(), batch[e]->data() + batch[e]->size(),
              acts[0].data() + e * s_len * hw * cin);
  }

  std::vector<BatchNormCache<T>> bn_caches(conv_.size());
  std::vector<std::vector<T>> conv_pre(conv_.size());   // conv output pre-BN
  std::vector<std::vector<T>> post_act(conv_.size());   // after relu+dropout
  std::vector<std::vector<T>> drop_masks(conv_.size());

  for (std::size_t l = 0; l < conv_.size(); ++l) {
    const std::size_t cout = conv_[l].kernels.extent(3);
    conv_pre[l].resize(m * hw * cout);
    Tensor<T> in_img({cfg_.mesh_rows, cfg_.mesh_cols, cin});
    Tensor<T> out_img;
    for (std::size_t i = 0; i < m; ++i) {
      std::copy(acts[l].data() + i * hw * cin, acts[l].data() + (i + 1) * hw * cin,
                in_img.data());
      conv2d_forward(in_img, conv_[l].kernels, conv_[l].bias, out_img);
      std::copy(out_img.data(), out_img.data() + out_img.size(),
                conv_pre[l].data() + i * hw * cout);
    }
    batchnorm_forward_train(conv_pre[l], cout, conv_[l].bn, bn_caches[l], post_act[l]);
    relu_forward(post_act[l]);
    if (rate > 0.0) {
      dropout_mask(post_act[l].size(), rate, rng, drop_masks[l]);
      for (std::size_t i = 0; i < post_act[l].size(); ++i) post_act[l][i] *= drop_masks[l][i];
    }
    acts.push_back(post_act[l]);
    cin = cout;
  }

  // --- TD dense forward ---
  const std::size_t flat = hw * cin;
  const std::size_t td = cfg_.td_dense_units;
  std::vector<T> td_out(m * td);
  for (std::size_t i = 0; i < m; ++i) {
    dense_forward(acts.back().data() + i * flat, flat, td_dense_.w, td_dense_.b,
                  td_out.data() + i * td);
  }
  std::vector<T> td_post = td_out;
  relu_forward(td_post);
  std::vector<T> td_mask;
  if (rate > 0.0) {
    dropout_mask(td_post.size(), rate, rng, td_mask);
    for (std::size_t i = 0; i < td_post.size(); ++i) td_post[i] *= td_mask[i];
  }

  // --- recurrent forward (per example) ---
  const std::size_t n_rlayers = cfg_.recurrent_units.size();
  // caches[layer][example][step]
  std::vector<std::vector<std::vector<GruStepCache<T>>>> gru_caches(
      gru_.size(), std::vector<std::vector<GruStepCache<T>>>(b_sz));
  std::vector<std::vector<std::vector<LstmStepCache<T>>>> lstm_caches(
      lstm_.size(), std::vector<std::vector<LstmStepCache<T>>>(b_sz));
  // variational recurrent dropout: one mask per (example, layer)
  std::vector<std::vector<std::vector<T>>> rec_masks(
      n_rlayers, std::vector<std::vector<T>>(b_sz));

  // layer_out[l][e][s]
  std::vector<std::vector<std::vector<std::vector<T>>>> layer_out(n_rlayers + 1);
  layer_out[0].assign(b_sz, std::vector<std::vector<T>>(s_len));
  for (std::size_t e = 0; e < b_sz; ++e) {
    for (std::size_t s = 0; s < s_len; ++s) {
      const T* src = td_post.data() + (e * s_len + s) * td;
      layer_out[0][e][s].assign(src, src + td);
    }
  }
  for (std::size_t l = 0; l < n_rlayers; ++l) {
    const std::size_t n = cfg_.recurrent_units[l];
    layer_out[l + 1].assign(b_sz, std::vector<std::vector<T>>(s_len, std::vector<T>(n)));
    for (std::size_t e = 0; e < b_sz; ++e) {
      if (rate > 0.0) dropout_mask(n, rate, rng, rec_masks[l][e]);
      const T* mask = rate > 0.0 ? rec_masks[l][e].data() : nullptr;
      std::vector<T> h(n, T(0)), c(n, T(0)), c_out(n);
      if (cfg_.recurrent_kind == RecurrentKind::GRU) {
        gru_caches[l][e].resize(s_len);
        for (std::size_t s = 0; s < s_len; ++s) {
          gru_step(gru_[l], layer_out[l][e][s].data(), h.data(), mask,
                   layer_out[l + 1][e][s].data(), &gru_caches[l][e][s]);
          h = layer_out[l + 1][e][s];
        }
      } else {
        lstm_caches[l][e].resize(s_len);
        for (std::size_t s = 0; s < s_len; ++s) {
          lstm_step(lstm_[l], layer_out[l][e][s].data(), h.data(), c.data(), mask,
                    layer_out[l + 1][e][s].data(), c_out.data(), &lstm_caches[l][e][s]);
          h = layer_out[l + 1][e][s];
          c = c_out;
        }
      }
    }
  }

  // --- output head + loss ---
  const std::size_t last_n = cfg_.recurrent_units.back();
  TrainStats<T> stats;
  const T inv_b = T(1) / static_cast<T>(b_sz);
  std::vector<std::vector<T>> dh_last(b_sz, std::vector<T>(last_n, T(0)));
  std::vector<T> logits(cfg_.n_classes), probs(cfg_.n_classes), dlogits(cfg_.n_classes);
  for (std::size_t e = 0; e < b_sz; ++e) {
    const std::vector<T>& h_final = layer_out[n_rlayers][e][s_len - 1];
    dense_forward(h_final.data(), last_n, out_.w, out_.b, logits.data());
    stats.loss += softmax_xent(logits.data(), cfg_.n_classes, labels[e], probs.data(),
                               dlogits.data()) * inv_b;
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < cfg_.n_classes; ++k) {
      if (probs[k] > probs[argmax]) argmax = k;
    }
    if (static_cast<int>(argmax) == labels[e]) ++stats.correct;
    for (T& g : dlogits) g *= inv_b;
    dense_backward(h_final.data(), last_n, out_.w, dlogits.data(), dh_last[e].data(),
                   g_out_.w, g_out_.b);
  }
  if (!std::isfinite(static_cast<double>(stats.loss))) {
    throw std::runtime_error("non-finite training loss");
  }

  // --- recurrent backward ---
  // dh_seq[e][s] for the topmost layer: only the final step gets gradient.
  std::vector<std::vector<std::vector<T>>> dh_above(b_sz);
  for (std::size_t e = 0; e < b_sz; ++e) {
    dh_above[e].assign(s_len, std::vector<T>(last_n, T(0)));
    dh_above[e][s_len - 1] = dh_last[e];
  }
  for (std::size_t l = n_rlayers; l-- > 0;) {
    std::vector<std::vector<std::vector<T>>> dx_all(b_sz);
    for (std::size_t e = 0; e < b_sz; ++e) {
      const T* mask = rate > 0.0 ? rec_masks[l][e].data() : nullptr;
      if (cfg_.recurrent_kind == RecurrentKind::GRU) {
        gru_sequence_backward(gru_[l], gru_caches[l][e], mask, dh_above[e], dx_all[e],
                              *g_gru_[l]);
      } else {
        lstm_sequence_backward(lstm_[l], lstm_caches[l][e], mask, dh_above[e],
                               dx_all[e], *g_lstm_[l]);
      }
    }
    dh_above = std::move(dx_all);
  }

  // --- TD dense backward ---
  std::vector<T> d_td(m * td);
  for (std::size_t e = 0; e < b_sz; ++e) {
    for (std::size_t s = 0; s < s_len; ++s) {
      std::copy(dh_above[e][s].begin(), dh_above[e][s].end(),
                d_td.data() + (e * s_len + s) * td);
    }
  }
  if (rate > 0.0) {
    for (std::size_t i = 0; i < d_td.size(); ++i) d_td[i] *= td_mask[i];
  }
  relu_backward(td_out, d_td);  // td_out pre-relu sign == post-relu sign
  std::vector<T> d_flat(m * flat);
  for (std::size_t i = 0; i < m; ++i) {
    dense_backward(acts.back().data() + i * flat, flat, td_dense_.w,
                   d_td.data() + i * td, d_flat.data() + i * flat, g_td_dense_.w,
                   g_td_dense_.b);
  }

  // --- conv stack backward ---
  std::vector<T> d_out = std::move(d_flat);
  for (std::size_t l = conv_.size(); l-- > 0;) {
    const std::size_t cout = conv_[l].kernels.extent(3);
    const std::size_t cin_l = conv_[l].kernels.extent(2);
    if (rate > 0.0) {
      for (std::size_t i = 0; i < d_out.size(); ++i) d_out[i] *= drop_masks[l][i];
    }
    // rebuild the relu input from the cached normalized values
    {
      std::vector<T> relu_ref(conv_pre[l].size());
      for (std::size_t i = 0; i < relu_ref.size(); ++i) {
        const std::size_t c = i % cout;
        relu_ref[i] = conv_[l].bn.gamma[c] * bn_caches[l].normalized[i] +
                      conv_[l].bn.beta[c];
      }
      relu_backward(relu_ref, d_out);
    }
    std::vector<T> d_pre;
    batchnorm_backward(d_out, cout, conv_[l].bn, bn_caches[l], d_pre,
                       g_conv_[l].gamma, g_conv_[l].beta);

    std::vector<T> d_in(m * hw * cin_l, T(0));
    Tensor<T> in_img({cfg_.mesh_rows, cfg_.mesh_cols, cin_l});
    Tensor<T> go_img({cfg_.mesh_rows, cfg_.mesh_cols, cout});
    Tensor<T> gi_img, gk_img({3, 3, cin_l, cout});
    std::vector<T> gb(cout, T(0));
    for (std::size_t i = 0; i < m; ++i) {
      std::copy(acts[l].data() + i * hw * cin_l, acts[l].data() + (i + 1) * hw * cin_l,
                in_img.data());
      std::copy(d_pre.data() + i * hw * cout, d_pre.data() + (i + 1) * hw * cout,
                go_img.data());
      conv2d_backward(in_img, conv_[l].kernels, go_img, gi_img, gk_img, gb);
      std::copy(gi_img.data(), gi_img.data() + gi_img.size(), d_in.data() + i * hw * cin_l);
      for (std::size_t k = 0; k < gk_img.size(); ++k) g_conv_[l].kernels[k] += gk_img[k];
      for (std::size_t k = 0; k < cout; ++k) g_conv_[l].bias[k] += gb[k];
    }
    d_out = std::move(d_in);
  }
  return stats;
}

}  // namespace neurobit::nn
