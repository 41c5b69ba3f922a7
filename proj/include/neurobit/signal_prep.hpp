#pragma once

#include <complex>
#include <string>
#include <vector>

namespace neurobit {

struct BandSpec {
  std::string name;  // theta | alpha | beta | gamma | all
  double low_hz = 0.0;
  double high_hz = 0.0;
};

// theta 4-8, alpha 8-15, beta 15-32, gamma 32-40, all 4-40
BandSpec band_by_name(const std::string& name);

// Cascade of biquads; a0 normalized to 1.
struct SosSection {
  double b0 = 0, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

struct FilterCoeffs {
  std::vector<SosSection> sections;
  int order = 0;
  BandSpec band;
  double fs = 0.0;
};

FilterCoeffs design_butterworth_bandpass(int order, const BandSpec& band, double fs);

// |H(e^{j 2 pi f / fs})| evaluated directly from the coefficients.
double filter_response_magnitude(const FilterCoeffs& coeffs, double freq_hz);

// Forward-backward (zero-phase) per channel with odd-reflection padding.
std::vector<std::vector<float>> filter_signal(
    const std::vector<std::vector<float>>& x, const FilterCoeffs& coeffs);

std::vector<std::vector<float>> common_average_reference(
    const std::vector<std::vector<float>>& x);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // unbiased (n-1)
};

// rows = samples, cols = features; fit sees training rows only
Standardizer fit_standardizer(const std::vector<std::vector<double>>& train);
std::vector<double> apply_standardizer(const Standardizer& s,
                                       const std::vector<double>& x);

struct WelchParams {
  double fs = 128.0;
  int nfft = 128;
  int seg_len = 128;
  int overlap = 64;
};

// One-sided PSD averaged over Hamming-windowed, mean-detrended segments;
// nfft/2+1 bins.
std::vector<double> welch_psd(const std::vector<double>& x, const WelchParams& p);
std::vector<double> welch_psd(const std::vector<float>& x, const WelchParams& p);

// Magnitude-squared coherence over the same segmentation; needs >= 2 segments.
std::vector<double> spectral_coherence(const std::vector<double>& x,
                                       const std::vector<double>& y,
                                       const WelchParams& p);
std::vector<double> spectral_coherence(const std::vector<float>& x,
                                       const std::vector<float>& y,
                                       const WelchParams& p);

// Radix-2 in-place FFT, n a power of two. Shared by the spectral estimators
// and their tests.
void fft_inplace(std::vector<std::complex<double>>& a);

}  // namespace neurobit
