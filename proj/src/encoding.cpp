#include "tdekws/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "tdekws/error.hpp"

namespace tdekws {

void FormantTrack::validate() const {
  if (!(frame_dt > 0.0)) throw DomainError("frame_dt must be positive");
  if (!(total_duration > 0.0)) {
    throw DomainError("total_duration must be positive");
  }
  double prev = -1.0;
  for (const auto& f : frames) {
    if (!(f.t_sec > prev)) {
      throw DomainError("formant frames must have increasing t_sec");
    }
    prev = f.t_sec;
    for (int k = 0; k < kFormants; ++k) {
      if (!(f.freq_hz[k] >= 0.0 && f.freq_hz[k] <= kMaxFrequencyHz)) {
        throw DomainError("formant frequency outside [0, 4000] Hz");
      }
      if (!(f.amp[k] >= 0.0 && f.amp[k] <= 1.0)) {
        throw DomainError("formant amplitude outside [0, 1]");
      }
    }
  }
}

int steps_for(double duration, double dt) {
  return static_cast<int>(std::lround(duration / dt));
}

int frequency_channel(double f_hz, int n_channels, double band_hz) {
  if (!(f_hz >= 0.0)) {
    throw DomainError("negative frequency " + std::to_string(f_hz));
  }
  const int c = static_cast<int>(std::floor(f_hz / band_hz));
  return std::min(c, n_channels - 1);
}

AmplitudeGrid quantize_to_channels(const FormantTrack& track, double dt,
                                   int n_channels, double band_hz) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  for (const auto& f : track.frames) {
    for (double hz : f.freq_hz) {
      if (hz < 0.0) throw DomainError("negative frequency in formant track");
    }
  }
  const int steps = steps_for(track.total_duration, dt);
  AmplitudeGrid grid(n_channels, steps, dt);
  const auto& frames = track.frames;
  if (frames.empty()) return grid;
  const double reach = 0.5 * track.frame_dt + 1e-12;
  for (int t = 0; t < steps; ++t) {
    const double time = t * dt;
    auto it = std::lower_bound(
        frames.begin(), frames.end(), time,
        [](const FormantFrame& f, double v) { return f.t_sec < v; });
    const FormantFrame* best = nullptr;
    double best_gap = 0.0;
    if (it != frames.end()) {
      best = &*it;
      best_gap = it->t_sec - time;
    }
    if (it != frames.begin()) {
      const auto& prev = *std::prev(it);
      const double gap = time - prev.t_sec;
      if (!best || gap <= best_gap) {
        best = &prev;
        best_gap = gap;
      }
    }
    if (!best || best_gap > reach) continue;
    for (int k = 0; k < kFormants; ++k) {
      const int c = frequency_channel(best->freq_hz[k], n_channels, band_hz);
      grid.at(c, t) = std::max(grid.at(c, t), best->amp[k]);
    }
  }
  return grid;
}

SpikeRaster encode_l0(const AmplitudeGrid& grid, const LifParams& l0_params,
                      double input_gain) {
  if (!(input_gain > 0.0)) throw DomainError("input_gain must be positive");
  SpikeRaster raster(grid.channels, grid.steps, grid.dt);
  LifState state(grid.channels);
  std::vector<double> drive(grid.channels);
  std::vector<std::uint8_t> spikes(grid.channels);
  for (int t = 0; t < grid.steps; ++t) {
    for (int c = 0; c < grid.channels; ++c) {
      drive[c] = input_gain * grid.at(c, t);
    }
    lif_step(state, l0_params, drive, spikes);
    for (int c = 0; c < grid.channels; ++c) {
      if (spikes[c]) raster.set(c, t, true);
    }
  }
  return raster;
}

Dataset encode_tracks(const std::vector<FormantTrack>& tracks,
                      const EncodingOptions& options) {
  Dataset data;
  int max_class = -1;
  for (const auto& tr : tracks) max_class = std::max(max_class, tr.class_id);
  data.n_classes = options.n_classes > 0 ? options.n_classes : max_class + 1;
  data.samples.reserve(tracks.size());
  for (const auto& tr : tracks) {
    tr.validate();
    auto grid = quantize_to_channels(tr, options.dt, options.n_channels,
                                     options.band_hz);
    data.samples.push_back(
        {encode_l0(grid, options.l0, options.input_gain), tr.class_id});
  }
  data.validate();
  return data;
}

const std::vector<FormantTemplate>& synthetic_templates() {
  // Odd classes replay the preceding even class's trajectories backwards in
  // time, so they share the visited bands and differ only in order.
  static const std::vector<FormantTemplate> table = {
      {{{{300, 550, 800}, {1000, 1500, 2000}, {2500, 2500, 2500}}},
       {0.9, 0.8, 0.7}},
      {{{{800, 550, 300}, {2000, 1500, 1000}, {2500, 2500, 2500}}},
       {0.9, 0.8, 0.7}},
      {{{{400, 400, 400}, {1200, 1800, 2400}, {3000, 3000, 3000}}},
       {0.9, 0.8, 0.7}},
      {{{{400, 400, 400}, {2400, 1800, 1200}, {3000, 3000, 3000}}},
       {0.9, 0.8, 0.7}},
      {{{{600, 450, 300}, {1600, 1600, 1600}, {2200, 2700, 3200}}},
       {0.9, 0.8, 0.7}},
      {{{{300, 450, 600}, {1600, 1600, 1600}, {3200, 2700, 2200}}},
       {0.9, 0.8, 0.7}},
      {{{{250, 450, 650}, {2200, 2200, 2200}, {2800, 3100, 3400}}},
       {0.9, 0.8, 0.7}},
      {{{{650, 450, 250}, {2200, 2200, 2200}, {3400, 3100, 2800}}},
       {0.9, 0.8, 0.7}},
      {{{{900, 700, 500}, {1400, 1150, 900}, {2600, 2600, 2600}}},
       {0.9, 0.8, 0.7}},
      {{{{500, 700, 900}, {900, 1150, 1400}, {2600, 2600, 2600}}},
       {0.9, 0.8, 0.7}},
      {{{{600, 750, 600}, {1800, 1800, 1800}, {2700, 2700, 2700}}},
       {0.9, 0.8, 0.7}},
  };
  return table;
}

namespace {

double piecewise(const std::array<double, 3>& knots, double u) {
  return u < 0.5 ? knots[0] + (knots[1] - knots[0]) * (u / 0.5)
                 : knots[1] + (knots[2] - knots[1]) * ((u - 0.5) / 0.5);
}

// Symmetric envelope: 0.6 at the word edges, 1.0 over the middle half.
double envelope(double u) {
  const double ramp = std::min({1.0, u / 0.25, (1.0 - u) / 0.25});
  return 0.6 + 0.4 * std::max(0.0, ramp);
}

}  // namespace

SyntheticCorpus generate_synthetic_dataset(const SyntheticOptions& options) {
  const auto& templates = synthetic_templates();
  if (options.reps_per_class < 1) {
    throw DomainError("reps_per_class must be at least 1");
  }
  if (options.n_classes < 1 ||
      options.n_classes > static_cast<int>(templates.size())) {
    throw DomainError("n_classes must be in [1, " +
                      std::to_string(templates.size()) + "]");
  }
  const double dt = options.encoding.dt;
  const double total = options.steps * dt;
  if (!(options.word_duration > 0.0 && options.word_duration < total)) {
    throw DomainError("word_duration must fit inside the clip");
  }
  const double band = options.encoding.band_hz;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> freq_jitter(-band, band);
  std::uniform_real_distribution<double> amp_jitter(0.9, 1.1);
  std::uniform_real_distribution<double> onset_dist(
      0.0, total - options.word_duration);

  const int n_frames =
      static_cast<int>(std::lround(options.word_duration / options.frame_dt)) +
      1;

  SyntheticCorpus corpus;
  corpus.dataset.n_classes = options.n_classes;
  corpus.dataset.provenance =
      "synthetic seed=" + std::to_string(options.seed) +
      " reps=" + std::to_string(options.reps_per_class);
  for (int c = 0; c < options.n_classes; ++c) {
    const auto& tpl = templates[c];
    for (int r = 0; r < options.reps_per_class; ++r) {
      std::array<double, kFormants> df{}, ga{};
      for (int k = 0; k < kFormants; ++k) {
        df[k] = freq_jitter(rng);
        ga[k] = amp_jitter(rng);
      }
      const double onset = onset_dist(rng);

      FormantTrack track;
      track.class_id = c;
      track.frame_dt = options.frame_dt;
      track.total_duration = total;
      // Silent frames on the same grid cover the rest of the clip, so every
      // track starts near t = 0 like a per-utterance formant file.
      const int lead = static_cast<int>(
          std::floor(onset / options.frame_dt));
      for (int i = -lead; onset + i * options.frame_dt < total; ++i) {
        const double u =
            std::clamp(static_cast<double>(i) / (n_frames - 1), 0.0, 1.0);
        const bool voiced = i >= 0 && i < n_frames;
        FormantFrame frame;
        frame.t_sec = std::max(0.0, onset + i * options.frame_dt);
        for (int k = 0; k < kFormants; ++k) {
          frame.freq_hz[k] = std::clamp(piecewise(tpl.freq_hz[k], u) + df[k],
                                        0.0, kMaxFrequencyHz);
          frame.amp[k] =
              voiced ? std::clamp(tpl.peak_amp[k] * envelope(u) * ga[k], 0.0, 1.0)
                     : 0.0;
        }
        track.frames.push_back(frame);
      }
      auto grid = quantize_to_channels(track, dt, options.encoding.n_channels,
                                       band);
      corpus.dataset.samples.push_back(
          {encode_l0(grid, options.encoding.l0, options.encoding.input_gain),
           c});
      corpus.tracks.push_back(std::move(track));
      corpus.onsets.push_back(onset);
    }
  }
  return corpus;
}

}  // namespace tdekws
