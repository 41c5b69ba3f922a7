#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace neurobit {

inline constexpr int kTrialsPerRecording = 40;
inline constexpr int kDeapChannels = 32;
inline constexpr int kSamplesPerTrial = 8064;   // 63 s at 128 Hz as stored
inline constexpr int kPretrialSamples = 384;    // 3 s dropped at load time
inline constexpr int kUsableSamples = 7680;     // 60 s of stimulus
inline constexpr int kSampleRateHz = 128;
inline constexpr int kSubsampleLen = 1280;      // 10 s
inline constexpr int kSubsamplesPerTrial = 6;

enum class AffectiveState { LL, LH, HL, HH };

// Sentinel used by trial selection to mean "union of all four states".
enum class StateSelect { LL, LH, HL, HH, ALL };

std::string to_string(AffectiveState s);
AffectiveState affective_state_from_string(const std::string& s);
StateSelect state_select_from_string(const std::string& s);

// One subject's export: 40 trials x 32 channels, pre-trial segment already
// stripped so each trial holds 7680 usable samples.
struct RawRecording {
  int subject_id = 0;
  // [trial][channel][sample], kUsableSamples per channel
  std::vector<std::vector<std::vector<float>>> trials;
  // [trial] = (valence, arousal), each in [1, 9]
  std::vector<std::array<float, 2>> ratings;
};

struct Subsample {
  int subject_id = 0;
  int trial_id = 0;         // [0, 39]
  int subsample_index = 0;  // [0, 5]
  AffectiveState state = AffectiveState::LL;
  // [channel][sample], kSubsampleLen samples
  std::vector<std::vector<float>> data;
};

struct DatasetManifest {
  std::vector<int> subjects;
  std::vector<std::string> channel_names;  // 32 ten-twenty labels in storage order
  int sample_rate = kSampleRateHz;
  std::string provenance;  // "deap-export" | "synthetic"
};

// The 32 DEAP channel labels in the upstream storage order.
const std::vector<std::string>& deap_channel_names();

struct LoadError : std::runtime_error {
  LoadError(const std::string& field, const std::string& detail)
      : std::runtime_error("load error [" + field + "]: " + detail), field(field) {}
  std::string field;
};

// Export directory layout: one "sNN.eeg" binary per subject plus
// "manifest.json". See write_deap_export for the binary format.
std::vector<RawRecording> load_deap_export(const std::string& dir,
                                           DatasetManifest* manifest_out = nullptr);
void write_deap_export(const std::string& dir,
                       const std::vector<RawRecording>& recordings,
                       const DatasetManifest& manifest);

AffectiveState label_affective_state(double valence, double arousal);

// Each subject gets a distinct set of per-channel sinusoid frequencies in
// 4-40 Hz plus AR(1) noise; ratings give exactly n_trials_per_state trials
// in each of the four states.
std::vector<RawRecording> generate_synthetic_dataset(int n_subjects,
                                                     int n_trials_per_state,
                                                     std::uint64_t seed);

// Per state, draws trials_per_state qualifying trials per subject (seeded,
// without replacement) and cuts each into 6 disjoint 10 s subsamples.
// Subjects short of trials_per_state qualifying trials are dropped.
std::vector<Subsample> select_trials_and_subsample(
    const std::vector<RawRecording>& recordings, StateSelect state,
    int trials_per_state, std::uint64_t seed);

}  // namespace neurobit
