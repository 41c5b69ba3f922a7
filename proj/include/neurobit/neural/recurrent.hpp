#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "neurobit/tensor.hpp"

namespace neurobit::nn {

template <typename T>
inline T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

// Gate weights only, no biases. W*: [n, d] input weights, U*: [n, n]
// recurrent weights.
template <typename T>
struct GruParams {
  std::size_t d = 0, n = 0;
  Tensor<T> wz, wr, wh;
  Tensor<T> uz, ur, uh;

  GruParams() = default;
  GruParams(std::size_t input, std::size_t units)
      : d(input), n(units),
        wz({units, input}), wr({units, input}), wh({units, input}),
        uz({units, units}), ur({units, units}), uh({units, units}) {}
};

template <typename T>
struct GruStepCache {
  std::vector<T> x, h_prev, h_drop;  // h_drop = h_prev (*) recurrent mask
  std::vector<T> z, r, hcand, rh;    // rh = r (*) h_drop
};

namespace detail {

template <typename T>
void matvec(const Tensor<T>& w, const T* x, T* out, bool accumulate) {
  const std::size_t rows = w.extent(0), cols = w.extent(1);
  for (std::size_t j = 0; j < rows; ++j) {
    const T* wrow = &w.at2(j, 0);
    T acc = accumulate ? out[j] : T(0);
    for (std::size_t k = 0; k < cols; ++k) acc += wrow[k] * x[k];
    out[j] = acc;
  }
}

// dx += W^T dpre ; gW += dpre x^T
template <typename T>
void matvec_backward(const Tensor<T>& w, const T* x, const T* dpre, T* dx,
                     Tensor<T>& gw) {
  const std::size_t rows = w.extent(0), cols = w.extent(1);
  for (std::size_t j = 0; j < rows; ++j) {
    const T g = dpre[j];
    const T* wrow = &w.at2(j, 0);
    T* gwrow = &gw.at2(j, 0);
    for (std::size_t k = 0; k < cols; ++k) {
      dx[k] += g * wrow[k];
      gwrow[k] += g * x[k];
    }
  }
}

}  // namespace detail

// One step of Eqs.-literal GRU. mask scales h_prev where it feeds the gate
// matmuls (variational recurrent dropout); pass nullptr for no dropout.
template <typename T>
void gru_step(const GruParams<T>& p, const T* x, const T* h_prev, const T* mask,
              T* h_out, GruStepCache<T>* cache = nullptr) {
  const std::size_t n = p.n, d = p.d;
  std::vector<T> hd(n), z(n), r(n), hcand(n), rh(n);
  for (std::size_t j = 0; j < n; ++j) hd[j] = mask ? h_prev[j] * mask[j] : h_prev[j];

  detail::matvec(p.wz, x, z.data(), false);
  detail::matvec(p.uz, hd.data(), z.data(), true);
  detail::matvec(p.wr, x, r.data(), false);
  detail::matvec(p.ur, hd.data(), r.data(), true);
  for (std::size_t j = 0; j < n; ++j) {
    z[j] = sigmoid(z[j]);
    r[j] = sigmoid(r[j]);
    rh[j] = r[j] * hd[j];
  }
  detail::matvec(p.wh, x, hcand.data(), false);
  detail::matvec(p.uh, rh.data(), hcand.data(), true);
  for (std::size_t j = 0; j < n; ++j) {
    hcand[j] = std::tanh(hcand[j]);
    h_out[j] = (T(1) - z[j]) * h_prev[j] + z[j] * hcand[j];
  }
  if (cache) {
    cache->x.assign(x, x + d);
    cache->h_prev.assign(h_prev, h_prev + n);
    cache->h_drop = std::move(hd);
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->hcand = std::move(hcand);
    cache->rh = std::move(rh);
  }
}

template <typename T>
struct GruGrads {
  Tensor<T> wz, wr, wh, uz, ur, uh;
  explicit GruGrads(const GruParams<T>& p)
      : wz(p.wz.shape()), wr(p.wr.shape()), wh(p.wh.shape()),
        uz(p.uz.shape()), ur(p.ur.shape()), uh(p.uh.shape()) {}
};

// BPTT over one sequence. dh_seq holds the upstream gradient on every h_t;
// dx_seq gets the gradient on every input; grads accumulate across calls.
template <typename T>
void gru_sequence_backward(const GruParams<T>& p,
                           const std::vector<GruStepCache<T>>& caches,
                           const T* mask, const std::vector<std::vector<T>>& dh_seq,
                           std::vector<std::vector<T>>& dx_seq, GruGrads<T>& grads) {
  const std::size_t n = p.n, d = p.d;
  const std::size_t steps = caches.size();
  dx_seq.assign(steps, std::vector<T>(d, T(0)));

  std::vector<T> dh(n, T(0));
  std::vector<T> dz(n), dr(n), dhc(n), dhd(n), drh(n);
  for (std::size_t t = steps; t-- > 0;) {
    const GruStepCache<T>& c = caches[t];
    for (std::size_t j = 0; j < n; ++j) dh[j] += dh_seq[t][j];

    std::fill(dhd.begin(), dhd.end(), T(0));
    std::vector<T> dh_prev(n, T(0));
    for (std::size_t j = 0; j < n; ++j) {
      dz[j] = dh[j] * (c.hcand[j] - c.h_prev[j]);
      dhc[j] = dh[j] * c.z[j];
      dh_prev[j] = dh[j] * (T(1) - c.z[j]);
      // pre-activation gradients
      dhc[j] *= (T(1) - c.hcand[j] * c.hcand[j]);
      dz[j] *= c.z[j] * (T(1) - c.z[j]);
    }
    std::fill(drh.begin(), drh.end(), T(0));
    detail::matvec_backward(p.uh, c.rh.data(), dhc.data(), drh.data(), grads.uh);
    detail::matvec_backward(p.wh, c.x.data(), dhc.data(), dx_seq[t].data(), grads.wh);
    for (std::size_t j = 0; j < n; ++j) {
      dr[j] = drh[j] * c.h_drop[j];
      dhd[j] += drh[j] * c.r[j];
      dr[j] *= c.r[j] * (T(1) - c.r[j]);
    }
    detail::matvec_backward(p.uz, c.h_drop.data(), dz.data(), dhd.data(), grads.uz);
    detail::matvec_backward(p.wz, c.x.data(), dz.data(), dx_seq[t].data(), grads.wz);
    detail::matvec_backward(p.ur, c.h_drop.data(), dr.data(), dhd.data(), grads.ur);
    detail::matvec_backward(p.wr, c.x.data(), dr.data(), dx_seq[t].data(), grads.wr);
    for (std::size_t j = 0; j < n; ++j) {
      dh_prev[j] += mask ? dhd[j] * mask[j] : dhd[j];
    }
    dh = std::move(dh_prev);
  }
}

// ---------------------------------------------------------------------------
// Peephole LSTM: V_i / V_f see c_{t-1}, V_o sees c_t. No biases.
// ---------------------------------------------------------------------------

template <typename T>
struct LstmParams {
  std::size_t d = 0, n = 0;
  Tensor<T> wi, wo, wf, wc;
  Tensor<T> ui, uo, uf, uc;
  std::vector<T> vi, vo, vf;  // diagonal peepholes

  LstmParams() = default;
  LstmParams(std::size_t input, std::size_t units)
      : d(input), n(units),
        wi({units, input}), wo({units, input}), wf({units, input}), wc({units, input}),
        ui({units, units}), uo({units, units}), uf({units, units}), uc({units, units}),
        vi(units, T(0)), vo(units, T(0)), vf(units, T(0)) {}
};

template <typename T>
struct LstmStepCache {
  std::vector<T> x, h_prev, c_prev, h_drop;
  std::vector<T> i, o, f, ccand, c, tanh_c;
};

template <typename T>
void lstm_step(const LstmParams<T>& p, const T* x, const T* h_prev, const T* c_prev,
               const T* mask, T* h_out, T* c_out, LstmStepCache<T>* cache = nullptr) {
  const std::size_t n = p.n, d = p.d;
  std::vector<T> hd(n), gi(n), go(n), gf(n), cc(n);
  for (std::size_t j = 0; j < n; ++j) hd[j] = mask ? h_prev[j] * mask[j] : h_prev[j];

  detail::matvec(p.wi, x, gi.data(), false);
  detail::matvec(p.ui, hd.data(), gi.data(), true);
  detail::matvec(p.wf, x, gf.data(), false);
  detail::matvec(p.uf, hd.data(), gf.data(), true);
  detail::matvec(p.wc, x, cc.data(), false);
  detail::matvec(p.uc, hd.data(), cc.data(), true);
  detail::matvec(p.wo, x, go.data(), false);
  detail::matvec(p.uo, hd.data(), go.data(), true);

  std::vector<T> c(n), tc(n);
  for (std::size_t j = 0; j < n; ++j) {
    gi[j] = sigmoid(gi[j] + p.vi[j] * c_prev[j]);
    gf[j] = sigmoid(gf[j] + p.vf[j] * c_prev[j]);
    cc[j] = std::tanh(cc[j]);
    c[j] = gf[j] * c_prev[j] + gi[j] * cc[j];
    go[j] = sigmoid(go[j] + p.vo[j] * c[j]);
    tc[j] = std::tanh(c[j]);
    h_out[j] = go[j] * tc[j];
    c_out[j] = c[j];
  }
  if (cache) {
    cache->x.assign(x, x + d);
    cache->h_prev.assign(h_prev, h_prev + n);
    cache->c_prev.assign(c_prev, c_prev + n);
    cache->h_drop = std::move(hd);
    cache->i = std::move(gi);
    cache->o = std::move(go);
    cache->f = std::move(gf);
    cache->ccand = std::move(cc);
    cache->c = std::move(c);
    cache->tanh_c = std::move(tc);
  }
}

template <typename T>
struct LstmGrads {
  Tensor<T> wi, wo, wf, wc, ui, uo, uf, uc;
  std::vector<T> vi, vo, vf;
  explicit LstmGrads(const LstmParams<T>& p)
      : wi(p.wi.shape()), wo(p.wo.shape()), wf(p.wf.shape()), wc(p.wc.shape()),
        ui(p.ui.shape()), uo(p.uo.shape()), uf(p.uf.shape()), uc(p.uc.shape()),
        vi(p.n, T(0)), vo(p.n, T(0)), vf(p.n, T(0)) {}
};

template <typename T>
void lstm_sequence_backward(const LstmParams<T>& p,
                            const std::vector<LstmStepCache<T>>& caches,
                            const T* mask, const std::vector<std::vector<T>>& dh_seq,
                            std::vector<std::vector<T>>& dx_seq, LstmGrads<T>& grads) {
  const std::size_t n = p.n, d = p.d;
  const std::size_t steps = caches.size();
  dx_seq.assign(steps, std::vector<T>(d, T(0)));

  std::vector<T> dh(n, T(0)), dc(n, T(0));
  std::vector<T> do_pre(n), di_pre(n), df_pre(n), dcc_pre(n), dhd(n);
  for (std::size_t t = steps; t-- > 0;) {
    const LstmStepCache<T>& c = caches[t];
    for (std::size_t j = 0; j < n; ++j) dh[j] += dh_seq[t][j];

    std::vector<T> dh_prev(n, T(0)), dc_prev(n, T(0));
    std::fill(dhd.begin(), dhd.end(), T(0));
    for (std::size_t j = 0; j < n; ++j) {
      do_pre[j] = dh[j] * c.tanh_c[j] * c.o[j] * (T(1) - c.o[j]);
      // c_t feeds h through tanh and through the o-gate peephole
      dc[j] += dh[j] * c.o[j] * (T(1) - c.tanh_c[j] * c.tanh_c[j]) + do_pre[j] * p.vo[j];
      grads.vo[j] += do_pre[j] * c.c[j];

      di_pre[j] = dc[j] * c.ccand[j] * c.i[j] * (T(1) - c.i[j]);
      df_pre[j] = dc[j] * c.c_prev[j] * c.f[j] * (T(1) - c.f[j]);
      dcc_pre[j] = dc[j] * c.i[j] * (T(1) - c.ccand[j] * c.ccand[j]);
      dc_prev[j] = dc[j] * c.f[j] + di_pre[j] * p.vi[j] + df_pre[j] * p.vf[j];
      grads.vi[j] += di_pre[j] * c.c_prev[j];
      grads.vf[j] += df_pre[j] * c.c_prev[j];
    }
    detail::matvec_backward(p.wo, c.x.data(), do_pre.data(), dx_seq[t].data(), grads.wo);
    detail::matvec_backward(p.uo, c.h_drop.data(), do_pre.data(), dhd.data(), grads.uo);
    detail::matvec_backward(p.wi, c.x.data(), di_pre.data(), dx_seq[t].data(), grads.wi);
    detail::matvec_backward(p.ui, c.h_drop.data(), di_pre.data(), dhd.data(), grads.ui);
    detail::matvec_backward(p.wf, c.x.data(), df_pre.data(), dx_seq[t].data(), grads.wf);
    detail::matvec_backward(p.uf, c.h_drop.data(), df_pre.data(), dhd.data(), grads.uf);
    detail::matvec_backward(p.wc, c.x.data(), dcc_pre.data(), dx_seq[t].data(), grads.wc);
    detail::matvec_backward(p.uc, c.h_drop.data(), dcc_pre.data(), dhd.data(), grads.uc);
    for (std::size_t j = 0; j < n; ++j) {
      dh_prev[j] += mask ? dhd[j] * mask[j] : dhd[j];
    }
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
}

}  // namespace neurobit::nn
