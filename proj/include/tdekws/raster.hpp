#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tdekws {

// Binary spike matrix, row-major [neuron][timestep].
class SpikeRaster {
 public:
  SpikeRaster() = default;
  SpikeRaster(int n_neurons, int steps, double dt)
      : n_neurons_(n_neurons),
        steps_(steps),
        dt_(dt),
        bits_(static_cast<std::size_t>(n_neurons) * steps, 0) {}

  int neurons() const { return n_neurons_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }

  std::uint8_t at(int neuron, int t) const {
    return bits_[static_cast<std::size_t>(neuron) * steps_ + t];
  }
  void set(int neuron, int t, bool v) {
    bits_[static_cast<std::size_t>(neuron) * steps_ + t] = v ? 1 : 0;
  }
  std::span<const std::uint8_t> row(int neuron) const {
    return {bits_.data() + static_cast<std::size_t>(neuron) * steps_,
            static_cast<std::size_t>(steps_)};
  }
  // Copies the column at `t` into `out` (size = neurons()).
  void column(int t, std::span<std::uint8_t> out) const;

  long long count() const;
  long long row_count(int neuron) const;

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const SpikeRaster& o) const = default;

 private:
  int n_neurons_ = 0;
  int steps_ = 0;
  double dt_ = 0.0;
  std::vector<std::uint8_t> bits_;
};

struct Sample {
  SpikeRaster raster;
  int class_id = 0;

  bool operator==(const Sample&) const = default;
};

// Encoded L0 spike data with labels. All rasters share one shape.
struct Dataset {
  std::vector<Sample> samples;
  int n_classes = 0;
  std::string provenance;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  int neurons() const { return samples.empty() ? 0 : samples[0].raster.neurons(); }
  int steps() const { return samples.empty() ? 0 : samples[0].raster.steps(); }
  double dt() const { return samples.empty() ? 0.0 : samples[0].raster.dt(); }
  std::vector<int> class_counts() const;

  // Throws StructuralError on mixed shapes or out-of-range labels.
  void validate() const;
};

}  // namespace tdekws
