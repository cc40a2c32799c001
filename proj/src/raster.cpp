#include "tdekws/raster.hpp"

#include <numeric>

#include "tdekws/error.hpp"

namespace tdekws {

void SpikeRaster::column(int t, std::span<std::uint8_t> out) const {
  for (int n = 0; n < n_neurons_; ++n) out[n] = at(n, t);
}

long long SpikeRaster::count() const {
  return std::accumulate(bits_.begin(), bits_.end(), 0LL);
}

long long SpikeRaster::row_count(int neuron) const {
  auto r = row(neuron);
  return std::accumulate(r.begin(), r.end(), 0LL);
}

std::vector<int> Dataset::class_counts() const {
  std::vector<int> counts(n_classes, 0);
  for (const auto& s : samples) {
    if (s.class_id >= 0 && s.class_id < n_classes) ++counts[s.class_id];
  }
  return counts;
}

void Dataset::validate() const {
  if (samples.empty()) return;
  const auto& first = samples.front().raster;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& r = samples[i].raster;
    if (r.neurons() != first.neurons() || r.steps() != first.steps() ||
        r.dt() != first.dt()) {
      throw StructuralError("dataset sample " + std::to_string(i) +
                            " has a different raster shape");
    }
    if (samples[i].class_id < 0 || samples[i].class_id >= n_classes) {
      throw StructuralError("dataset sample " + std::to_string(i) +
                            " has class id out of range");
    }
  }
}

}  // namespace tdekws
