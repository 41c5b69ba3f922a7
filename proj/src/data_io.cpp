#include "neurobit/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"

namespace neurobit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[16] = {'N', 'E', 'U', 'R', 'O', 'B', 'I', 'T',
                             '-', 'E', 'E', 'G', '\0', '\0', '\0', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

// splitmix64, used to derive independent stream seeds
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(seed ^ mix64(a ^ mix64(b)));
}

// Fisher-Yates with modulo draw: deterministic across platforms, bias is
// irrelevant at these sizes.
template <typename Rng>
void shuffle_indices(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

std::string to_string(AffectiveState s) {
  switch (s) {
    case AffectiveState::LL: return "LL";
    case AffectiveState::LH: return "LH";
    case AffectiveState::HL: return "HL";
    case AffectiveState::HH: return "HH";
  }
  return "??";
}

AffectiveState affective_state_from_string(const std::string& s) {
  if (s == "LL") return AffectiveState::LL;
  if (s == "LH") return AffectiveState::LH;
  if (s == "HL") return AffectiveState::HL;
  if (s == "HH") return AffectiveState::HH;
  throw std::invalid_argument("unknown affective state: " + s);
}

StateSelect state_select_from_string(const std::string& s) {
  if (s == "ALL") return StateSelect::ALL;
  switch (affective_state_from_string(s)) {
    case AffectiveState::LL: return StateSelect::LL;
    case AffectiveState::LH: return StateSelect::LH;
    case AffectiveState::HL: return StateSelect::HL;
    case AffectiveState::HH: return StateSelect::HH;
  }
  throw std::invalid_argument("unknown state: " + s);
}

const std::vector<std::string>& deap_channel_names() {
  static const std::vector<std::string> names = {
      "Fp1", "AF3", "F3",  "F7",  "FC5", "FC1", "C3",  "T7",
      "CP5", "CP1", "P3",  "P7",  "PO3", "O1",  "Oz",  "Pz",
      "Fp2", "AF4", "Fz",  "F4",  "F8",  "FC6", "FC2", "Cz",
      "C4",  "T8",  "CP6", "CP2", "P4",  "P8",  "PO4", "O2"};
  return names;
}

AffectiveState label_affective_state(double valence, double arousal) {
  if (valence < 1.0 || valence > 9.0 || arousal < 1.0 || arousal > 9.0) {
    throw std::invalid_argument("valence/arousal rating outside [1, 9]");
  }
  const bool high_v = valence >= 5.0;
  const bool high_a = arousal >= 5.0;
  if (high_v) return high_a ? AffectiveState::HH : AffectiveState::HL;
  return high_a ? AffectiveState::LH : AffectiveState::LL;
}

void write_deap_export(const std::string& dir,
                       const std::vector<RawRecording>& recordings,
                       const DatasetManifest& manifest) {
  fs::create_directories(dir);
  for (const RawRecording& rec : recordings) {
    char name[32];
    std::snprintf(name, sizeof(name), "s%02d.eeg", rec.subject_id);
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open export file for writing");
    f.write(kMagic, 16);
    write_u32(f, kFormatVersion);
    write_u32(f, static_cast<std::uint32_t>(rec.trials.size()));
    write_u32(f, kDeapChannels);
    write_u32(f, kSamplesPerTrial);
    // Trials are stored at the on-disk length; the 3 s pre-trial segment the
    // loader strips is written back as zeros.
    std::vector<float> row(kSamplesPerTrial, 0.0f);
    for (const auto& trial : rec.trials) {
      for (const auto& chan : trial) {
        std::fill(row.begin(), row.begin() + kPretrialSamples, 0.0f);
        std::copy(chan.begin(), chan.end(), row.begin() + kPretrialSamples);
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
      }
    }
    for (const auto& r : rec.ratings) {
      f.write(reinterpret_cast<const char*>(r.data()), 2 * sizeof(float));
    }
  }
  json m;
  m["subjects"] = manifest.subjects;
  m["channel_names"] = manifest.channel_names;
  m["sample_rate"] = manifest.sample_rate;
  m["provenance"] = manifest.provenance;
  std::ofstream mf(fs::path(dir) / "manifest.json");
  mf << m.dump(2) << "\n";
}

std::vector<RawRecording> load_deap_export(const std::string& dir,
                                           DatasetManifest* manifest_out) {
  const fs::path mpath = fs::path(dir) / "manifest.json";
  if (!fs::exists(mpath)) throw LoadError("manifest", "manifest.json not found in " + dir);
  json m;
  {
    std::ifstream mf(mpath);
    try {
      mf >> m;
    } catch (const std::exception& e) {
      throw LoadError("manifest", std::string("malformed JSON: ") + e.what());
    }
  }
  DatasetManifest manifest;
  try {
    manifest.subjects = m.at("subjects").get<std::vector<int>>();
    manifest.channel_names = m.at("channel_names").get<std::vector<std::string>>();
    manifest.sample_rate = m.value("sample_rate", kSampleRateHz);
    manifest.provenance = m.value("provenance", "deap-export");
  } catch (const std::exception& e) {
    throw LoadError("manifest", std::string("missing field: ") + e.what());
  }
  if (manifest.channel_names.size() != kDeapChannels) {
    throw LoadError("channel_names", "expected 32 channel names");
  }
  if (manifest.subjects.empty() || manifest.subjects.size() > 32) {
    throw LoadError("subjects", "expected 1-32 subjects");
  }

  std::vector<RawRecording> out;
  out.reserve(manifest.subjects.size());
  for (int sid : manifest.subjects) {
    char name[32];
    std::snprintf(name, sizeof(name), "s%02d.eeg", sid);
    const fs::path p = fs::path(dir) / name;
    std::ifstream f(p, std::ios::binary);
    if (!f) throw LoadError("file", std::string(name) + " missing");
    char magic[16];
    f.read(magic, 16);
    if (!f || std::memcmp(magic, kMagic, 16) != 0) {
      throw LoadError("magic", std::string(name) + ": bad magic");
    }
    const std::uint32_t version = read_u32(f);
    const std::uint32_t n_trials = read_u32(f);
    const std::uint32_t n_channels = read_u32(f);
    const std::uint32_t n_samples = read_u32(f);
    if (version != kFormatVersion) throw LoadError("version", "unsupported version");
    if (n_channels != kDeapChannels) {
      throw LoadError("n_channels", "shape mismatch: header claims " +
                                        std::to_string(n_channels) + " channels, expected 32");
    }
    if (n_samples != kSamplesPerTrial) {
      throw LoadError("n_samples", "shape mismatch: expected 8064 samples per trial");
    }
    if (n_trials == 0 || n_trials > kTrialsPerRecording) {
      throw LoadError("n_trials", "shape mismatch: expected 1-40 trials");
    }

    RawRecording rec;
    rec.subject_id = sid;
    rec.trials.resize(n_trials);
    std::vector<float> row(kSamplesPerTrial);
    for (auto& trial : rec.trials) {
      trial.resize(kDeapChannels);
      for (auto& chan : trial) {
        f.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!f) throw LoadError("samples", std::string(name) + ": truncated sample block");
        chan.assign(row.begin() + kPretrialSamples, row.end());
      }
    }
    rec.ratings.resize(n_trials);
    for (auto& r : rec.ratings) {
      f.read(reinterpret_cast<char*>(r.data()), 2 * sizeof(float));
      if (!f) throw LoadError("ratings", std::string(name) + ": truncated rating block");
      if (r[0] < 1.0f || r[0] > 9.0f || r[1] < 1.0f || r[1] > 9.0f) {
        throw LoadError("ratings", std::string(name) + ": rating outside [1, 9]");
      }
    }
    out.push_back(std::move(rec));
  }
  if (manifest_out) *manifest_out = std::move(manifest);
  return out;
}

std::vector<RawRecording> generate_synthetic_dataset(int n_subjects,
                                                     int n_trials_per_state,
                                                     std::uint64_t seed) {
  if (n_subjects < 2) throw std::invalid_argument("synthetic dataset needs >= 2 subjects");
  if (n_trials_per_state < 1 || n_trials_per_state > 10) {
    throw std::invalid_argument("n_trials_per_state must be in [1, 10]");
  }
  const int n_trials = 4 * n_trials_per_state;
  const double two_pi = 2.0 * std::acos(-1.0);

  std::vector<RawRecording> out;
  out.reserve(static_cast<std::size_t>(n_subjects));
  for (int s = 1; s <= n_subjects; ++s) {
    RawRecording rec;
    rec.subject_id = s;
    rec.trials.resize(n_trials);
    rec.ratings.resize(n_trials);

    // State slots interleaved, then shuffled per subject.
    std::vector<int> state_of_trial(n_trials);
    for (int t = 0; t < n_trials; ++t) state_of_trial[t] = t % 4;
    {
      std::mt19937_64 rng(stream_seed(seed, 0x5157, static_cast<std::uint64_t>(s)));
      shuffle_indices(state_of_trial, rng);
    }

    // Identity signature: channel 0 carries a subject-unique tone, the rest
    // follow a subject-dependent frequency pattern.
    const double f0 = 5.0 + static_cast<double>((s - 1) % 35);
    for (int t = 0; t < n_trials; ++t) {
      const int st = state_of_trial[t];
      static const float rating_of_state[4][2] = {
          {2.5f, 2.5f}, {2.5f, 7.5f}, {7.5f, 2.5f}, {7.5f, 7.5f}};
      std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(s) * 64 + t, 0xEE61));
      auto unit = [&rng]() { return (static_cast<double>(rng() >> 11) * 0x1.0p-53); };
      rec.ratings[t][0] = rating_of_state[st][0] + static_cast<float>(unit() - 0.5);
      rec.ratings[t][1] = rating_of_state[st][1] + static_cast<float>(unit() - 0.5);

      auto& trial = rec.trials[t];
      trial.resize(kDeapChannels);
      for (int c = 0; c < kDeapChannels; ++c) {
        auto& chan = trial[c];
        chan.resize(kUsableSamples);
        const double fc = (c == 0) ? f0 : 4.0 + static_cast<double>(((s * 5 + c * 3) % 36));
        const double fc2 = 4.0 + static_cast<double>(((s * 11 + c * 7) % 36));
        // phases belong to the subject signature, so they repeat across
        // trials; only the AR(1) noise is fresh per trial
        std::mt19937_64 phase_rng(stream_seed(
            seed, 0x9A5E, static_cast<std::uint64_t>(s) * 64 + static_cast<std::uint64_t>(c)));
        auto phase_unit = [&phase_rng]() {
          return static_cast<double>(phase_rng() >> 11) * 0x1.0p-53;
        };
        const double phase1 = phase_unit() * two_pi;
        const double phase2 = phase_unit() * two_pi;
        // AR(1) noise, phi = 0.9
        double noise = 0.0;
        const double amp1 = 30.0, amp2 = 10.0, noise_sigma = 4.0;
        for (int k = 0; k < kUsableSamples; ++k) {
          const double time = static_cast<double>(k) / kSampleRateHz;
          const double gauss =
              std::sqrt(-2.0 * std::log(unit() + 1e-300)) * std::cos(two_pi * unit());
          noise = 0.9 * noise + noise_sigma * gauss;
          chan[k] = static_cast<float>(amp1 * std::sin(two_pi * fc * time + phase1) +
                                       amp2 * std::sin(two_pi * fc2 * time + phase2) +
                                       noise);
        }
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

namespace {

std::vector<Subsample> select_one_state(const std::vector<RawRecording>& recordings,
                                        AffectiveState state, int trials_per_state,
                                        std::uint64_t seed) {
  std::vector<Subsample> out;
  for (const RawRecording& rec : recordings) {
    std::vector<int> qualifying;
    for (std::size_t t = 0; t < rec.trials.size(); ++t) {
      if (label_affective_state(rec.ratings[t][0], rec.ratings[t][1]) == state) {
        qualifying.push_back(static_cast<int>(t));
      }
    }
    if (static_cast<int>(qualifying.size()) < trials_per_state) continue;  // subject dropped

    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(state),
                                    static_cast<std::uint64_t>(rec.subject_id)));
    shuffle_indices(qualifying, rng);
    qualifying.resize(static_cast<std::size_t>(trials_per_state));
    std::sort(qualifying.begin(), qualifying.end());

    for (int t : qualifying) {
      const auto& trial = rec.trials[static_cast<std::size_t>(t)];
      for (int k = 0; k < kSubsamplesPerTrial; ++k) {
        Subsample sub;
        sub.subject_id = rec.subject_id;
        sub.trial_id = t;
        sub.subsample_index = k;
        sub.state = state;
        sub.data.resize(trial.size());
        const int off = k * kSubsampleLen;
        for (std::size_t c = 0; c < trial.size(); ++c) {
          sub.data[c].assign(trial[c].begin() + off,
                             trial[c].begin() + off + kSubsampleLen);
        }
        out.push_back(std::move(sub));
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Subsample> select_trials_and_subsample(
    const std::vector<RawRecording>& recordings, StateSelect state,
    int trials_per_state, std::uint64_t seed) {
  std::vector<Subsample> out;
  if (state == StateSelect::ALL) {
    for (AffectiveState st : {AffectiveState::LL, AffectiveState::LH,
                              AffectiveState::HL, AffectiveState::HH}) {
      auto part = select_one_state(recordings, st, trials_per_state, seed);
      out.insert(out.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    }
  } else {
    out = select_one_state(recordings, static_cast<AffectiveState>(state),
                           trials_per_state, seed);
  }
  if (out.empty()) throw std::runtime_error("no subject qualifies for the requested state");
  return out;
}

}  // namespace neurobit
