#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tdekws/raster.hpp"
#include "tdekws/topology.hpp"

namespace tdekws {

enum class TauInit { Constant, Lags };

// Supervised-learning hyperparameters. Defaults for the neuron constants,
// surrogate scale, learning rate, weight decay and dropout follow the
// published setup; batch_size and epochs are desk-scale choices.
struct TrainConfig {
  double lambda = 5.0;
  double dt = 0.015;
  double tau_mem = 0.002;
  double tau_syn = 0.008;
  double threshold = 1.0;
  double learning_rate = 0.0015;
  double weight_decay = 0.0001;
  double p_drop = 0.1;
  int batch_size = 64;
  int epochs = 200;
  std::uint64_t seed = 0;
  double train_fraction = 1.0;
  double test_fraction = 0.2;
  double input_gain = 1.5;
  double init_scale = 1.0;      // multiplies the +-1/sqrt(fan_in) bound
  double tau_g_init = 0.03;     // seconds, for TauInit::Constant
  TauInit tau_init = TauInit::Lags;
  int top_k = 25;               // epochs averaged for the reported accuracy

  void validate() const;
  LifParams neuron_params() const;
};

// Random initialization: weights uniform in +-init_scale/sqrt(fan_in),
// tau_g_raw = softplus^-1(tau_g_init) unless `tau_raw` is supplied.
ParameterSet init_parameters(const NetworkSpec& spec, const TrainConfig& cfg,
                             std::uint64_t seed,
                             std::span<const double> tau_raw = {});

// Cross entropy of softmax(spike counts) against `label`.
double spike_count_cross_entropy(std::span<const double> counts, int label);
double spike_count_cross_entropy(const SpikeRaster& l2, int label);

// Index of the largest count; ties go to the lowest index.
int predict_class(std::span<const double> counts);

// Gradient blocks mirroring the trainable parts of a ParameterSet.
struct Gradients {
  Matrix w1;
  Matrix w_rec;
  Matrix w2;
  std::vector<double> tau_g_raw;

  static Gradients zeros_like(const NetworkSpec& spec);
  Gradients& operator+=(const Gradients& o);
  void scale(double s);
  bool operator==(const Gradients&) const = default;
};

// Trainable blocks of each kind, in a fixed order: w1, w_rec, w2, tau_g_raw.
std::vector<std::span<double>> trainable_blocks(ParameterSet& params,
                                                ArchKind kind);
std::vector<std::span<double>> trainable_blocks(Gradients& grads,
                                                ArchKind kind);
std::vector<std::span<const double>> trainable_blocks(const Gradients& grads,
                                                      ArchKind kind);

/// Reverse-mode pass through a recorded forward. The Heaviside derivative is
/// replaced by surrogate_dsigma(U - threshold); the reset factor is treated
/// as a constant. `loss_scale` multiplies the loss (1/N_b for a batch mean).
Gradients backward(const AdjointTape& tape, const Network& net, int label,
                   double loss_scale = 1.0);

// Binary keep masks for dropout on L1 outputs, from a counter-based stream so
// every sample's mask depends only on (seed, epoch, sample).
class DropoutSampler {
 public:
  DropoutSampler(std::uint64_t seed, double p_drop);
  // Fills `mask` with 1 (keep) / 0 (drop).
  void fill(std::uint64_t stream, std::span<std::uint8_t> mask) const;

 private:
  std::uint64_t seed_;
  std::uint32_t drop_below_;  // out of 2^16
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

struct AdamConfig {
  double learning_rate = 0.0015;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0001;  // decoupled, weight matrices only
};

class Adam {
 public:
  Adam(const NetworkSpec& spec, AdamConfig cfg);
  void step(ParameterSet& params, const Gradients& grads);
  long steps() const { return t_; }

 private:
  ArchKind kind_;
  AdamConfig cfg_;
  Gradients m_;
  Gradients v_;
  long t_ = 0;
};

struct Split {
  Dataset train;
  Dataset test;
};

// Stratified split with the same number of test samples per class; the
// training side is then subsampled per class by `train_fraction`.
Split split_dataset(const Dataset& data, double test_fraction,
                    double train_fraction, std::uint64_t seed);

struct TrainReport {
  ArchKind arch = ArchKind::Tde;
  int n_l1 = 0;
  std::uint64_t seed = 0;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_test_accuracy;
  double top_accuracy = 0.0;  // mean of the top_k best epochs
  int top_k = 25;
  double wall_clock_sec = 0.0;  // not serialized
};

// Mean of the k largest values (all of them when fewer than k).
double top_k_mean(std::span<const double> values, int k);

struct TrainResult {
  ParameterSet params;
  TrainReport report;
};

TrainResult train(const Dataset& train_set, const Dataset& test_set,
                  const NetworkSpec& spec, ParameterSet init,
                  const TrainConfig& cfg);

}  // namespace tdekws
