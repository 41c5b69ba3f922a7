#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

#include "neurobit/signal_prep.hpp"

using namespace neurobit;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<float> sinusoid(double freq, double fs, std::size_t n, double amp = 1.0) {
  std::vector<float> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = static_cast<float>(amp * std::sin(2.0 * kPi * freq * k / fs));
  }
  return x;
}

double rms(const std::vector<float>& x, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += static_cast<double>(x[i]) * x[i];
  return std::sqrt(s / static_cast<double>(hi - lo));
}

// independent per-segment periodogram average, for oracle equivalence
std::vector<double> direct_welch_oracle(const std::vector<double>& x, const WelchParams& p) {
  std::vector<double> w(static_cast<std::size_t>(p.seg_len));
  double u = 0.0;
  for (int i = 0; i < p.seg_len; ++i) {
    w[static_cast<std::size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (p.seg_len - 1.0));
    u += w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i)];
  }
  const int n_bins = p.nfft / 2 + 1;
  std::vector<double> acc(static_cast<std::size_t>(n_bins), 0.0);
  int n_seg = 0;
  const int hop = p.seg_len - p.overlap;
  for (int start = 0; start + p.seg_len <= static_cast<int>(x.size()); start += hop) {
    double mean = 0.0;
    for (int i = 0; i < p.seg_len; ++i) mean += x[static_cast<std::size_t>(start + i)];
    mean /= p.seg_len;
    // direct DFT per bin, O(n^2) on purpose
    for (int k = 0; k < n_bins; ++k) {
      std::complex<double> sum(0.0, 0.0);
      for (int i = 0; i < p.seg_len; ++i) {
        const double v = (x[static_cast<std::size_t>(start + i)] - mean) *
                         w[static_cast<std::size_t>(i)];
        const double ang = -2.0 * kPi * k * i / static_cast<double>(p.nfft);
        sum += v * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      double pw = std::norm(sum) / (p.fs * u);
      if (k != 0 && k != p.nfft / 2) pw *= 2.0;
      acc[static_cast<std::size_t>(k)] += pw;
    }
    ++n_seg;
  }
  for (double& v : acc) v /= n_seg;
  return acc;
}

}  // namespace

TEST_CASE("band table matches the published ranges") {
  CHECK(band_by_name("theta").low_hz == 4.0);
  CHECK(band_by_name("theta").high_hz == 8.0);
  CHECK(band_by_name("alpha").high_hz == 15.0);
  CHECK(band_by_name("beta").low_hz == 15.0);
  CHECK(band_by_name("gamma").high_hz == 40.0);
  CHECK(band_by_name("all").low_hz == 4.0);
  CHECK(band_by_name("all").high_hz == 40.0);
  CHECK_THROWS_AS(band_by_name("delta"), std::invalid_argument);
}

TEST_CASE("bandpass response: passband, band edges, and stopband attenuation") {
  for (const char* name : {"theta", "alpha", "beta", "gamma", "all"}) {
    const BandSpec band = band_by_name(name);
    for (int order : {2, 4, 6, 8}) {
      CAPTURE(name);
      CAPTURE(order);
      const auto coeffs = design_butterworth_bandpass(order, band, 128.0);
      CHECK(coeffs.sections.size() == static_cast<std::size_t>(order));
      // -3 dB within +-0.5 dB at both edges
      for (double edge : {band.low_hz, band.high_hz}) {
        const double db = 20.0 * std::log10(filter_response_magnitude(coeffs, edge));
        CHECK(db > -3.5);
        CHECK(db < -2.5);
      }
      // < -40 dB at twice the upper edge (or Nyquist-limited probe);
      // order 2 rolls off too slowly to make that figure
      const double probe = std::min(2.0 * band.high_hz, 63.9);
      const double stop_db = 20.0 * std::log10(filter_response_magnitude(coeffs, probe));
      CHECK(stop_db < (order >= 4 ? -40.0 : -12.0));
      CHECK(filter_response_magnitude(coeffs, 0.0) < 1e-6);
      CHECK(filter_response_magnitude(coeffs, 64.0) < 1e-6);
    }
  }
}

TEST_CASE("all-band order-4 design keeps 6 Hz near unity") {
  const auto coeffs = design_butterworth_bandpass(4, band_by_name("all"), 128.0);
  const double h = filter_response_magnitude(coeffs, 6.0);
  CHECK(h >= 0.97);
  CHECK(h <= 1.0 + 1e-9);
}

TEST_CASE("theta design attenuates one octave above the upper edge") {
  const auto coeffs = design_butterworth_bandpass(4, band_by_name("theta"), 128.0);
  CHECK(filter_response_magnitude(coeffs, 16.0) < 0.1);
}

TEST_CASE("filter design rejects bad orders and bands") {
  CHECK_THROWS_AS(design_butterworth_bandpass(1, band_by_name("all"), 128.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(design_butterworth_bandpass(9, band_by_name("all"), 128.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(design_butterworth_bandpass(4, {"bad", 30.0, 10.0}, 128.0),
                  std::invalid_argument);
}

TEST_CASE("zero-phase filtering: passband retention, stopband rejection, zero in/out") {
  const auto theta = design_butterworth_bandpass(4, band_by_name("theta"), 128.0);
  const auto all = design_butterworth_bandpass(4, band_by_name("all"), 128.0);
  const std::size_t n = 1280;

  const auto in_band = filter_signal({sinusoid(6.0, 128.0, n)}, theta);
  CHECK(rms(in_band[0], 128, n - 128) >= 0.9 * rms(sinusoid(6.0, 128.0, n), 128, n - 128));

  const auto out_band = filter_signal({sinusoid(50.0, 128.0, n)}, all);
  CHECK(rms(out_band[0], 0, n) <= 0.05 * rms(sinusoid(50.0, 128.0, n), 0, n));

  const auto zeros = filter_signal({std::vector<float>(n, 0.0f)}, all);
  for (float v : zeros[0]) CHECK(v == 0.0f);

  CHECK_THROWS_AS(filter_signal({std::vector<float>(20, 1.0f)}, all),
                  std::invalid_argument);
}

TEST_CASE("filtering is linear") {
  const auto all = design_butterworth_bandpass(4, band_by_name("all"), 128.0);
  std::mt19937_64 rng(5);
  auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5; };
  const std::size_t n = 512;
  std::vector<float> x(n), y(n), mix(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<float>(unit());
    y[i] = static_cast<float>(unit());
    mix[i] = static_cast<float>(2.0 * x[i] - 3.0 * y[i]);
  }
  const auto fx = filter_signal({x}, all)[0];
  const auto fy = filter_signal({y}, all)[0];
  const auto fm = filter_signal({mix}, all)[0];
  for (std::size_t i = 0; i < n; ++i) {
    // float storage bounds the achievable agreement
    CHECK(std::abs(2.0 * fx[i] - 3.0 * fy[i] - fm[i]) < 2e-5);
  }
}

TEST_CASE("zero-phase property: cross-correlation peak lag is 0") {
  const auto all = design_butterworth_bandpass(4, band_by_name("all"), 128.0);
  const std::size_t n = 1280;
  const auto x = sinusoid(10.0, 128.0, n);
  const auto y = filter_signal({x}, all)[0];
  int best_lag = -100;
  double best = -1e300;
  for (int lag = -16; lag <= 16; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 64; i + 64 < n; ++i) {
      acc += static_cast<double>(x[i]) * y[static_cast<std::size_t>(static_cast<int>(i) + lag)];
    }
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
}

TEST_CASE("common average reference zeroes the cross-channel mean") {
  SUBCASE("two constant channels") {
    const std::vector<std::vector<float>> x = {{3, 3, 3}, {5, 5, 5}};
    const auto y = common_average_reference(x);
    for (float v : y[0]) CHECK(v == doctest::Approx(-1.0));
    for (float v : y[1]) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("idempotent on re-referenced input") {
    std::mt19937_64 rng(3);
    std::vector<std::vector<float>> x(4, std::vector<float>(50));
    for (auto& chan : x) {
      for (float& v : chan) v = static_cast<float>((rng() >> 11) * 0x1.0p-53);
    }
    const auto once = common_average_reference(x);
    const auto twice = common_average_reference(once);
    for (std::size_t c = 0; c < once.size(); ++c) {
      for (std::size_t t = 0; t < once[c].size(); ++t) {
        CHECK(std::abs(once[c][t] - twice[c][t]) < 1e-6);
      }
    }
  }
  SUBCASE("random 32x1280: column means vanish") {
    std::mt19937_64 rng(17);
    std::vector<std::vector<float>> x(32, std::vector<float>(1280));
    for (auto& chan : x) {
      for (float& v : chan) v = static_cast<float>((rng() >> 11) * 0x1.0p-53 - 0.5);
    }
    const auto y = common_average_reference(x);
    for (std::size_t t = 0; t < 1280; ++t) {
      double mean = 0.0;
      for (const auto& chan : y) mean += chan[t];
      CHECK(std::abs(mean / 32.0) < 1e-7);  // float32 storage limit
    }
  }
  CHECK_THROWS_AS(common_average_reference({{1.0f, 2.0f}}), std::invalid_argument);
}

TEST_CASE("standardizer: unbiased estimator, zero-variance error, train-set identity") {
  SUBCASE("hand case {1, 3}") {
    const auto s = fit_standardizer({{1.0}, {3.0}});
    CHECK(s.mean[0] == doctest::Approx(2.0));
    CHECK(s.stddev[0] == doctest::Approx(std::sqrt(2.0)));  // n-1 denominator
    CHECK(apply_standardizer(s, {3.0})[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  }
  SUBCASE("training matrix standardizes to mean 0, sd 1") {
    std::mt19937_64 rng(11);
    std::vector<std::vector<double>> train(40, std::vector<double>(3));
    for (auto& row : train) {
      for (double& v : row) v = 5.0 + 3.0 * ((rng() >> 11) * 0x1.0p-53);
    }
    const auto s = fit_standardizer(train);
    std::vector<double> mean(3, 0.0), var(3, 0.0);
    for (const auto& row : train) {
      const auto z = apply_standardizer(s, row);
      for (int j = 0; j < 3; ++j) mean[static_cast<std::size_t>(j)] += z[static_cast<std::size_t>(j)];
    }
    for (double& m : mean) m /= 40.0;
    for (const auto& row : train) {
      const auto z = apply_standardizer(s, row);
      for (int j = 0; j < 3; ++j) {
        var[static_cast<std::size_t>(j)] +=
            (z[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]) *
            (z[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]);
      }
    }
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(mean[static_cast<std::size_t>(j)]) < 1e-9);
      CHECK(std::abs(var[static_cast<std::size_t>(j)] / 39.0 - 1.0) < 1e-9);
    }
  }
  SUBCASE("constant feature raises an error naming the index") {
    try {
      fit_standardizer({{1.0, 7.0}, {2.0, 7.0}});
      FAIL("expected error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("index 1") != std::string::npos);
    }
  }
}

TEST_CASE("welch psd equals an independent per-segment periodogram average") {
  std::mt19937_64 rng(23);
  std::vector<double> x(640);
  for (double& v : x) v = (rng() >> 11) * 0x1.0p-53 - 0.5;
  WelchParams p;
  const auto fast = welch_psd(x, p);
  const auto slow = direct_welch_oracle(x, p);
  REQUIRE(fast.size() == 65);
  for (std::size_t k = 0; k < 65; ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-12);
}

TEST_CASE("welch psd basics: zero signal, tone peak, Parseval") {
  WelchParams p;
  SUBCASE("zero signal") {
    const auto psd = welch_psd(std::vector<double>(256, 0.0), p);
    for (double v : psd) CHECK(v == 0.0);
  }
  SUBCASE("8 Hz tone peaks at bin 8") {
    std::vector<double> x(1280);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::sin(2.0 * kPi * 8.0 * k / 128.0);
    const auto psd = welch_psd(x, p);
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < psd.size(); ++k) {
      if (psd[k] > psd[argmax]) argmax = k;
    }
    CHECK(argmax == 8);
  }
  SUBCASE("white noise power integrates to the sample variance") {
    double ratio_sum = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(seed) + 1000);
      std::vector<double> x(1280);
      double mean = 0.0;
      for (double& v : x) {
        const double u1 = (rng() >> 11) * 0x1.0p-53 + 1e-300;
        const double u2 = (rng() >> 11) * 0x1.0p-53;
        v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
        mean += v;
      }
      mean /= static_cast<double>(x.size());
      double var = 0.0;
      for (double v : x) var += (v - mean) * (v - mean);
      var /= static_cast<double>(x.size());
      const auto psd = welch_psd(x, p);
      const double total = std::accumulate(psd.begin(), psd.end(), 0.0);  // 1 Hz bins
      ratio_sum += total / var;
    }
    CHECK(std::abs(ratio_sum / 100.0 - 1.0) < 0.05);
  }
  SUBCASE("too-short signal") {
    CHECK_THROWS_AS(welch_psd(std::vector<double>(100, 1.0), p), std::invalid_argument);
  }
}

TEST_CASE("coherence: self, scale invariance, independence, bounds") {
  WelchParams p;
  std::mt19937_64 rng(31);
  std::vector<double> x(640);
  for (double& v : x) v = (rng() >> 11) * 0x1.0p-53 - 0.5;

  SUBCASE("self-coherence is 1 on every powered bin") {
    const auto c = spectral_coherence(x, x, p);
    for (double v : c) {
      if (v != 0.0) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("linear dependence gives coherence 1") {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 * x[i];
    const auto c = spectral_coherence(x, y, p);
    for (double v : c) {
      if (v != 0.0) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("independent noises have low average coherence") {
    double acc = 0.0;
    int count = 0;
    for (int seed = 0; seed < 100; ++seed) {
      std::mt19937_64 ra(static_cast<std::uint64_t>(seed) * 2 + 1);
      std::mt19937_64 rb(static_cast<std::uint64_t>(seed) * 2 + 2);
      std::vector<double> a(640), b(640);
      for (double& v : a) v = (ra() >> 11) * 0x1.0p-53 - 0.5;
      for (double& v : b) v = (rb() >> 11) * 0x1.0p-53 - 0.5;
      const auto c = spectral_coherence(a, b, p);
      for (double v : c) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
        acc += v;
        ++count;
      }
    }
    CHECK(acc / count < 0.3);
  }
  SUBCASE("single segment is rejected") {
    CHECK_THROWS_AS(spectral_coherence(std::vector<double>(128, 1.0),
                                       std::vector<double>(128, 1.0), p),
                    std::invalid_argument);
  }
}
