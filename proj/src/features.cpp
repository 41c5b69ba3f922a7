#include "neurobit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neurobit {

std::vector<double> FeatureVector::flattened() const {
  std::vector<double> out;
  for (const auto& e : elements) out.insert(out.end(), e.begin(), e.end());
  return out;
}

FeatureVector extract_psd_features(const Subsample& sub, const WelchParams& params) {
  if (sub.data.size() != static_cast<std::size_t>(kDeapChannels)) {
    throw std::invalid_argument("PSD features need a 32-channel subsample");
  }
  FeatureVector fv;
  fv.kind = FeatureKind::PSD;
  fv.elements.reserve(sub.data.size());
  for (const auto& chan : sub.data) {
    auto psd = welch_psd(chan, params);
    for (double& v : psd) v = std::log(std::max(v, kPsdLogFloor));
    fv.elements.push_back(std::move(psd));
  }
  return fv;
}

FeatureVector extract_coh_features(const Subsample& sub, const BandSpec& band,
                                   const WelchParams& params) {
  if (sub.data.size() != static_cast<std::size_t>(kDeapChannels)) {
    throw std::invalid_argument("COH features need a 32-channel subsample");
  }
  const double bin_hz = params.fs / params.nfft;
  const int lo = static_cast<int>(std::ceil(band.low_hz / bin_hz));
  const int hi = static_cast<int>(std::floor(band.high_hz / bin_hz));
  if (lo > hi) throw std::invalid_argument("COH band too narrow for the bin spacing");

  FeatureVector fv;
  fv.kind = FeatureKind::COH;
  for (std::size_t i = 0; i < sub.data.size(); ++i) {
    for (std::size_t j = i + 1; j < sub.data.size(); ++j) {
      auto coh = spectral_coherence(sub.data[i], sub.data[j], params);
      std::vector<double> z;
      z.reserve(static_cast<std::size_t>(hi - lo + 1));
      for (int k = lo; k <= hi; ++k) {
        // Fisher z on |coherency|, clamped below the arctanh singularity
        const double mag = std::sqrt(std::clamp(coh[static_cast<std::size_t>(k)],
                                                0.0, kCoherenceCeil));
        z.push_back(std::atanh(mag));
      }
      fv.elements.push_back(std::move(z));
    }
  }
  return fv;
}

}  // namespace neurobit
