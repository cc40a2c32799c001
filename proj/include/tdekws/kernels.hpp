#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tdekws/raster.hpp"
#include "tdekws/topology.hpp"
#include "tdekws/training.hpp"

namespace tdekws {

// Thread count for the OpenMP kernels; 0 leaves the runtime default.
void set_thread_count(int threads);
int thread_count();

struct BatchGradient {
  Gradients grads;  // of the batch-mean loss
  double loss = 0.0;  // batch-mean loss
  int correct = 0;
};

// Forward + backward for samples `indices` of `data`. Dropout masks are drawn
// from `sampler` with stream mix_seed(stream_base, sample index). Per-sample
// gradients are summed in index order, so both variants agree bit for bit.
BatchGradient batch_gradient_serial(const Network& net, const Dataset& data,
                                    std::span<const int> indices,
                                    const DropoutSampler* sampler,
                                    std::uint64_t stream_base, double lambda);
BatchGradient batch_gradient(const Network& net, const Dataset& data,
                             std::span<const int> indices,
                             const DropoutSampler* sampler,
                             std::uint64_t stream_base, double lambda);

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::vector<int> predictions;
  EventLog events;
};

Evaluation evaluate_serial(const Network& net, const Dataset& data);
Evaluation evaluate(const Network& net, const Dataset& data);

}  // namespace tdekws
