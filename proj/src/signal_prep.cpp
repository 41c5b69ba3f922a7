#include "neurobit/signal_prep.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neurobit {

namespace {

constexpr double kPi = 3.14159265358979323846;
using cd = std::complex<double>;

}  // namespace

BandSpec band_by_name(const std::string& name) {
  if (name == "theta") return {"theta", 4.0, 8.0};
  if (name == "alpha") return {"alpha", 8.0, 15.0};
  if (name == "beta") return {"beta", 15.0, 32.0};
  if (name == "gamma") return {"gamma", 32.0, 40.0};
  if (name == "all") return {"all", 4.0, 40.0};
  throw std::invalid_argument("unknown band: " + name);
}

FilterCoeffs design_butterworth_bandpass(int order, const BandSpec& band, double fs) {
  if (order < 2 || order > 8) throw std::invalid_argument("filter order must be in [2, 8]");
  if (!(band.low_hz > 0.0 && band.low_hz < band.high_hz && band.high_hz < fs / 2.0)) {
    throw std::invalid_argument("band edges must satisfy 0 < low < high < fs/2");
  }

  // Prewarped analog edges, lowpass prototype -> bandpass -> bilinear.
  const double w1 = 2.0 * fs * std::tan(kPi * band.low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(kPi * band.high_hz / fs);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  std::vector<cd> analog_poles;
  for (int k = 1; k <= order; ++k) {
    const double theta = kPi * (2.0 * k + order - 1.0) / (2.0 * order);
    const cd proto(std::cos(theta), std::sin(theta));
    const cd bp = bw * proto;
    const cd disc = std::sqrt(bp * bp - 4.0 * w0 * w0);
    analog_poles.push_back((bp + disc) / 2.0);
    analog_poles.push_back((bp - disc) / 2.0);
  }

  const double fs2 = 2.0 * fs;
  std::vector<cd> poles;
  for (const cd& s : analog_poles) {
    poles.push_back((fs2 + s) / (fs2 - s));
  }
  for (const cd& z : poles) {
    if (std::abs(z) >= 1.0 - 1e-12) throw std::runtime_error("unstable bandpass design");
  }

  // Keep one of each conjugate pair; leftover (numerically) real poles pair up.
  std::vector<cd> complex_poles;
  std::vector<double> real_poles;
  for (const cd& z : poles) {
    if (z.imag() > 1e-10) {
      complex_poles.push_back(z);
    } else if (std::abs(z.imag()) <= 1e-10) {
      real_poles.push_back(z.real());
    }
  }
  std::sort(complex_poles.begin(), complex_poles.end(),
            [](const cd& a, const cd& b) { return std::abs(a) > std::abs(b); });
  std::sort(real_poles.begin(), real_poles.end());

  FilterCoeffs coeffs;
  coeffs.order = order;
  coeffs.band = band;
  coeffs.fs = fs;
  // Digital zeros: `order` at z=+1 and `order` at z=-1, one of each per
  // section, so every numerator is (z^2 - 1) up to gain.
  for (const cd& p : complex_poles) {
    SosSection s;
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    s.a1 = -2.0 * p.real();
    s.a2 = std::norm(p);
    coeffs.sections.push_back(s);
  }
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    SosSection s;
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    s.a1 = -(real_poles[i] + real_poles[i + 1]);
    s.a2 = real_poles[i] * real_poles[i + 1];
    coeffs.sections.push_back(s);
  }
  if (coeffs.sections.size() != static_cast<std::size_t>(order)) {
    throw std::runtime_error("bandpass pole pairing failed");
  }

  // Normalize to unit gain at the (warped) center frequency, gain spread
  // evenly across sections.
  const double fc = std::atan(w0 / fs2) * fs / kPi;
  const double g0 = filter_response_magnitude(coeffs, fc);
  if (!(g0 > 0.0) || !std::isfinite(g0)) throw std::runtime_error("degenerate bandpass gain");
  const double per_section = std::pow(1.0 / g0, 1.0 / static_cast<double>(coeffs.sections.size()));
  for (SosSection& s : coeffs.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
  return coeffs;
}

double filter_response_magnitude(const FilterCoeffs& coeffs, double freq_hz) {
  const double w = 2.0 * kPi * freq_hz / coeffs.fs;
  const cd z(std::cos(w), std::sin(w));
  const cd z2 = z * z;
  cd h(1.0, 0.0);
  for (const SosSection& s : coeffs.sections) {
    h *= (s.b0 * z2 + s.b1 * z + s.b2) / (z2 + s.a1 * z + s.a2);
  }
  return std::abs(h);
}

namespace {

void sosfilt_inplace(std::vector<double>& x, const std::vector<SosSection>& sections) {
  for (const SosSection& s : sections) {
    double w1 = 0.0, w2 = 0.0;  // direct form II transposed state
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + w1;
      w1 = s.b1 * in - s.a1 * out + w2;
      w2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

}  // namespace

std::vector<std::vector<float>> filter_signal(
    const std::vector<std::vector<float>>& x, const FilterCoeffs& coeffs) {
  if (x.empty()) throw std::invalid_argument("filter_signal: empty input");
  const std::size_t t_len = x[0].size();
  if (static_cast<int>(t_len) <= 6 * coeffs.order) {
    throw std::invalid_argument("filter_signal: signal too short for the filter order");
  }
  const std::size_t pad = std::min<std::size_t>(t_len - 1, 384);

  std::vector<std::vector<float>> out(x.size());
  std::vector<double> buf;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const auto& chan = x[c];
    if (chan.size() != t_len) throw std::invalid_argument("filter_signal: ragged channels");
    buf.assign(t_len + 2 * pad, 0.0);
    // odd reflection at both ends
    for (std::size_t i = 0; i < pad; ++i) {
      buf[i] = 2.0 * chan[0] - chan[pad - i];
    }
    for (std::size_t i = 0; i < t_len; ++i) buf[pad + i] = chan[i];
    for (std::size_t i = 0; i < pad; ++i) {
      buf[pad + t_len + i] = 2.0 * chan[t_len - 1] - chan[t_len - 2 - i];
    }
    sosfilt_inplace(buf, coeffs.sections);
    std::reverse(buf.begin(), buf.end());
    sosfilt_inplace(buf, coeffs.sections);
    std::reverse(buf.begin(), buf.end());
    out[c].resize(t_len);
    for (std::size_t i = 0; i < t_len; ++i) out[c][i] = static_cast<float>(buf[pad + i]);
  }
  return out;
}

std::vector<std::vector<float>> common_average_reference(
    const std::vector<std::vector<float>>& x) {
  if (x.size() < 2) throw std::invalid_argument("common average reference needs >= 2 channels");
  const std::size_t t_len = x[0].size();
  for (const auto& chan : x) {
    if (chan.size() != t_len) throw std::invalid_argument("ragged channels");
  }
  std::vector<std::vector<float>> out(x.size(), std::vector<float>(t_len));
  for (std::size_t t = 0; t < t_len; ++t) {
    double mean = 0.0;
    for (const auto& chan : x) mean += chan[t];
    mean /= static_cast<double>(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) {
      out[c][t] = static_cast<float>(x[c][t] - mean);
    }
  }
  return out;
}

Standardizer fit_standardizer(const std::vector<std::vector<double>>& train) {
  if (train.size() < 2) throw std::invalid_argument("standardizer needs >= 2 training rows");
  const std::size_t d = train[0].size();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (const auto& row : train) {
    if (row.size() != d) throw std::invalid_argument("ragged feature rows");
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
  }
  const double n = static_cast<double>(train.size());
  for (std::size_t j = 0; j < d; ++j) s.mean[j] /= n;
  for (const auto& row : train) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = row[j] - s.mean[j];
      s.stddev[j] += dv * dv;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    s.stddev[j] = std::sqrt(s.stddev[j] / (n - 1.0));
    if (!(s.stddev[j] > 0.0)) {
      throw std::runtime_error("standardizer: zero-variance feature at index " +
                               std::to_string(j));
    }
  }
  return s;
}

std::vector<double> apply_standardizer(const Standardizer& s,
                                       const std::vector<double>& x) {
  if (x.size() != s.mean.size()) throw std::invalid_argument("standardizer dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - s.mean[j]) / s.stddev[j];
  return out;
}

void fft_inplace(std::vector<cd>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const cd wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cd u = a[i + k];
        const cd v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

namespace {

std::vector<double> hamming(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.54 - 0.46 * std::cos(2.0 * kPi * i / static_cast<double>(n - 1));
  }
  return w;
}

struct SegmentSpectra {
  std::vector<double> sxx, syy;  // averaged auto spectra (un-normalized |X|^2)
  std::vector<cd> sxy;           // averaged cross spectrum
  int n_segments = 0;
  double window_power = 0.0;  // sum of w^2
};

// Shared segmentation core for welch_psd and spectral_coherence.
SegmentSpectra segment_spectra(const std::vector<double>& x,
                               const std::vector<double>* y, const WelchParams& p) {
  if (p.seg_len < 2 || p.nfft < p.seg_len || (p.nfft & (p.nfft - 1)) != 0) {
    throw std::invalid_argument("welch: invalid segment/nfft parameters");
  }
  if (p.overlap < 0 || p.overlap >= p.seg_len) {
    throw std::invalid_argument("welch: overlap must be in [0, seg_len)");
  }
  if (static_cast<int>(x.size()) < p.seg_len) {
    throw std::invalid_argument("welch: signal shorter than one segment");
  }
  if (y && y->size() != x.size()) throw std::invalid_argument("welch: length mismatch");

  const auto w = hamming(p.seg_len);
  double u = 0.0;
  for (double wi : w) u += wi * wi;

  const int n_bins = p.nfft / 2 + 1;
  SegmentSpectra out;
  out.sxx.assign(static_cast<std::size_t>(n_bins), 0.0);
  out.syy.assign(static_cast<std::size_t>(n_bins), 0.0);
  out.sxy.assign(static_cast<std::size_t>(n_bins), cd(0.0, 0.0));
  out.window_power = u;

  const int hop = p.seg_len - p.overlap;
  std::vector<cd> bx, by;
  for (int start = 0; start + p.seg_len <= static_cast<int>(x.size()); start += hop) {
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < p.seg_len; ++i) mx += x[static_cast<std::size_t>(start + i)];
    mx /= p.seg_len;
    if (y) {
      for (int i = 0; i < p.seg_len; ++i) my += (*y)[static_cast<std::size_t>(start + i)];
      my /= p.seg_len;
    }
    bx.assign(static_cast<std::size_t>(p.nfft), cd(0.0, 0.0));
    for (int i = 0; i < p.seg_len; ++i) {
      bx[static_cast<std::size_t>(i)] =
          cd((x[static_cast<std::size_t>(start + i)] - mx) * w[static_cast<std::size_t>(i)], 0.0);
    }
    fft_inplace(bx);
    if (y) {
      by.assign(static_cast<std::size_t>(p.nfft), cd(0.0, 0.0));
      for (int i = 0; i < p.seg_len; ++i) {
        by[static_cast<std::size_t>(i)] =
            cd(((*y)[static_cast<std::size_t>(start + i)] - my) * w[static_cast<std::size_t>(i)],
               0.0);
      }
      fft_inplace(by);
    }
    for (int k = 0; k < n_bins; ++k) {
      const cd xv = bx[static_cast<std::size_t>(k)];
      out.sxx[static_cast<std::size_t>(k)] += std::norm(xv);
      if (y) {
        const cd yv = by[static_cast<std::size_t>(k)];
        out.syy[static_cast<std::size_t>(k)] += std::norm(yv);
        out.sxy[static_cast<std::size_t>(k)] += xv * std::conj(yv);
      }
    }
    ++out.n_segments;
  }
  return out;
}

}  // namespace

std::vector<double> welch_psd(const std::vector<double>& x, const WelchParams& p) {
  const SegmentSpectra s = segment_spectra(x, nullptr, p);
  const int n_bins = p.nfft / 2 + 1;
  std::vector<double> psd(static_cast<std::size_t>(n_bins));
  const double scale = 1.0 / (p.fs * s.window_power * s.n_segments);
  for (int k = 0; k < n_bins; ++k) {
    double v = s.sxx[static_cast<std::size_t>(k)] * scale;
    if (k != 0 && k != p.nfft / 2) v *= 2.0;  // one-sided
    psd[static_cast<std::size_t>(k)] = v;
  }
  return psd;
}

std::vector<double> welch_psd(const std::vector<float>& x, const WelchParams& p) {
  return welch_psd(std::vector<double>(x.begin(), x.end()), p);
}

std::vector<double> spectral_coherence(const std::vector<double>& x,
                                       const std::vector<double>& y,
                                       const WelchParams& p) {
  const SegmentSpectra s = segment_spectra(x, &y, p);
  if (s.n_segments < 2) {
    throw std::invalid_argument("coherence needs >= 2 segments (it is identically 1 on one)");
  }
  const int n_bins = p.nfft / 2 + 1;
  std::vector<double> coh(static_cast<std::size_t>(n_bins), 0.0);
  for (int k = 0; k < n_bins; ++k) {
    const double denom =
        s.sxx[static_cast<std::size_t>(k)] * s.syy[static_cast<std::size_t>(k)];
    if (denom > 0.0) {
      coh[static_cast<std::size_t>(k)] = std::norm(s.sxy[static_cast<std::size_t>(k)]) / denom;
    }
  }
  return coh;
}

std::vector<double> spectral_coherence(const std::vector<float>& x,
                                       const std::vector<float>& y,
                                       const WelchParams& p) {
  return spectral_coherence(std::vector<double>(x.begin(), x.end()),
                            std::vector<double>(y.begin(), y.end()), p);
}

}  // namespace neurobit
