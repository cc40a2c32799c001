#pragma once

#include <array>
#include <cstdint>

namespace tdekws {

// Per-layer event counters accumulated while running a network.
// input_events counts spike deliveries after fan-out; output_spikes counts
// spikes emitted by the layer's neurons.
struct LayerEvents {
  std::uint64_t input_events = 0;
  std::uint64_t output_spikes = 0;

  bool operator==(const LayerEvents&) const = default;
};

struct EventLog {
  static constexpr int kLayers = 3;  // L0, L1, L2

  std::array<LayerEvents, kLayers> layers{};
  std::uint64_t samples = 0;

  EventLog& operator+=(const EventLog& o) {
    for (int l = 0; l < kLayers; ++l) {
      layers[l].input_events += o.layers[l].input_events;
      layers[l].output_spikes += o.layers[l].output_spikes;
    }
    samples += o.samples;
    return *this;
  }
  bool operator==(const EventLog&) const = default;
};

}  // namespace tdekws
