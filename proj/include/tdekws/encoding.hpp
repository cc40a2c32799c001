#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tdekws/dynamics.hpp"
#include "tdekws/raster.hpp"

namespace tdekws {

inline constexpr int kFormants = 3;
inline constexpr double kMaxFrequencyHz = 4000.0;

struct FormantFrame {
  double t_sec = 0.0;
  std::array<double, kFormants> freq_hz{};
  std::array<double, kFormants> amp{};

  bool operator==(const FormantFrame&) const = default;
};

// Frames of the three strongest formants of one utterance, sorted by time.
struct FormantTrack {
  int class_id = 0;
  std::vector<FormantFrame> frames;
  double frame_dt = 0.01;
  double total_duration = 1.5;

  void validate() const;
  bool operator==(const FormantTrack&) const = default;
};

// Per-channel amplitude over time, row-major [channel][t].
struct AmplitudeGrid {
  int channels = 0;
  int steps = 0;
  double dt = 0.0;
  std::vector<double> values;

  AmplitudeGrid() = default;
  AmplitudeGrid(int channels_, int steps_, double dt_)
      : channels(channels_), steps(steps_), dt(dt_),
        values(static_cast<std::size_t>(channels_) * steps_, 0.0) {}

  double& at(int c, int t) {
    return values[static_cast<std::size_t>(c) * steps + t];
  }
  double at(int c, int t) const {
    return values[static_cast<std::size_t>(c) * steps + t];
  }
};

// Number of simulation steps spanned by `duration` at step `dt`.
int steps_for(double duration, double dt);

// Band index of frequency `f_hz`, clamped into the top channel.
int frequency_channel(double f_hz, int n_channels = 32, double band_hz = 125.0);

// Resamples a track onto the `dt` grid (nearest frame) and writes each
// formant's amplitude into its frequency band, keeping the larger amplitude
// when two formants share a band.
AmplitudeGrid quantize_to_channels(const FormantTrack& track, double dt,
                                   int n_channels = 32, double band_hz = 125.0);

// Drives one L0 CuBa-LIF neuron per channel with input_gain * amplitude.
SpikeRaster encode_l0(const AmplitudeGrid& grid, const LifParams& l0_params,
                      double input_gain);

struct EncodingOptions {
  double dt = 0.015;
  int n_channels = 32;
  double band_hz = 125.0;
  double input_gain = 1.5;
  LifParams l0 = LifParams::from_time_constants(0.008, 0.002, 0.015);
  int n_classes = 0;  // 0: infer from the largest class id
};

Dataset encode_tracks(const std::vector<FormantTrack>& tracks,
                      const EncodingOptions& options);

// Synthetic keyword corpus: each class is a fixed template of three formant
// trajectories, instantiated with seeded frequency/amplitude jitter and a
// random onset inside the clip.
struct SyntheticOptions {
  std::uint64_t seed = 0;
  int n_classes = 11;
  int reps_per_class = 40;
  int steps = 100;
  double word_duration = 0.4;
  double frame_dt = 0.005;
  EncodingOptions encoding;
};

struct FormantTemplate {
  // Frequency knots (start, middle, end) in Hz and peak amplitude per formant.
  std::array<std::array<double, 3>, kFormants> freq_hz;
  std::array<double, kFormants> peak_amp;
};

// The shipped class templates (11 entries).
const std::vector<FormantTemplate>& synthetic_templates();

struct SyntheticCorpus {
  Dataset dataset;
  std::vector<FormantTrack> tracks;
  std::vector<double> onsets;  // seconds, one per sample
};

SyntheticCorpus generate_synthetic_dataset(const SyntheticOptions& options);

// Formant CSV: header `class_id,t_sec,f1,a1,f2,a2,f3,a3`, one frame per row.
// A new track starts whenever class_id changes or t_sec stops increasing.
std::vector<FormantTrack> load_formant_csv(const std::filesystem::path& path,
                                           double total_duration = 1.5);
void save_formant_csv(const std::filesystem::path& path,
                      const std::vector<FormantTrack>& tracks);

// Raster file: `tdekws-raster-v1 <n_neurons> <T> <dt>` then one line per
// sample: class id followed by `neuron:t` spike coordinates.
void save_raster_file(const std::filesystem::path& path, const Dataset& data);
Dataset load_raster_file(const std::filesystem::path& path,
                         int n_classes = 0);

}  // namespace tdekws
