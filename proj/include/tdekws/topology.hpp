#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdekws/dynamics.hpp"
#include "tdekws/events.hpp"
#include "tdekws/matrix.hpp"
#include "tdekws/raster.hpp"

namespace tdekws {

enum class ArchKind { Tde, Lif, LifRec };

std::string_view to_string(ArchKind kind);
ArchKind parse_arch(std::string_view name);

struct TdePair {
  int fac = 0;
  int trig = 0;

  auto operator<=>(const TdePair&) const = default;
};

// Three-layer architecture: L0 encoder -> L1 hidden -> L2 readout.
struct NetworkSpec {
  ArchKind kind = ArchKind::Lif;
  int n_l0 = 32;
  int n_l1 = 0;
  int n_l2 = 11;
  std::vector<TdePair> tde_pairs;  // only for ArchKind::Tde, one per L1 cell

  static NetworkSpec tde(std::vector<TdePair> pairs, int n_l0 = 32,
                         int n_l2 = 11);
  static NetworkSpec lif(int n_l1, int n_l0 = 32, int n_l2 = 11);
  static NetworkSpec lifrec(int n_l1, int n_l0 = 32, int n_l2 = 11);

  void validate() const;
  bool operator==(const NetworkSpec&) const = default;
};

// Synaptic connection count of an architecture.
long long connection_count(const NetworkSpec& spec);
long long connection_count(ArchKind kind, long long n_l1, long long n_l0,
                           long long n_l2);

// Number of trained scalars: tau_g per TDE cell plus all trained weights.
long long trained_parameter_count(const NetworkSpec& spec);

// Hidden size of a LIF/LIFREC net whose connection count is closest to
// `target_connections`; ties go to the smaller size.
int balance_hidden_size(long long target_connections, ArchKind kind,
                        int n_l0 = 32, int n_l2 = 11);

// All ordered (fac, trig) channel pairs, fac-major.
std::vector<TdePair> enumerate_tde_pairs(int n_l0);

struct ParameterSet {
  Matrix w1;                       // [n_l1 x n_l0], LIF and LIFREC
  Matrix w_rec;                    // [n_l1 x n_l1], LIFREC
  Matrix w2;                       // [n_l2 x n_l1], all kinds
  std::vector<double> tau_g_raw;   // [n_l1], TDE; tau_g = softplus(raw)
  LifParams encoder;
  LifParams hidden;
  LifParams output;
  double input_gain = 1.5;

  // Throws StructuralError if the blocks do not match the spec's kind.
  void validate_for(const NetworkSpec& spec) const;
  bool operator==(const ParameterSet&) const = default;
};

enum class SpikeMode {
  Hard,  // Heaviside forward; surrogate only in backward
  Soft,  // surrogate_sigma(U - threshold) forward, for gradient checking
};

// Forward states recorded per timestep, flattened [t][neuron].
struct LayerTape {
  int neurons = 0;
  std::vector<double> current;
  std::vector<double> membrane;
  std::vector<double> gain;   // TDE hidden layer only
  std::vector<double> value;  // transmitted spike value (0/1 in hard mode)
  std::vector<std::uint8_t> fired;
};

struct AdjointTape {
  int steps = 0;
  int n_l0 = 0;
  SpikeMode mode = SpikeMode::Hard;
  double lambda = 5.0;
  std::vector<std::uint8_t> l0;       // [t][n_l0]
  std::vector<std::uint8_t> dropout;  // [t][n_l1], empty when not applied
  LayerTape hidden;
  LayerTape output;
};

struct RunOptions {
  bool record_tape = false;
  bool record_rasters = true;
  SpikeMode mode = SpikeMode::Hard;
  double lambda = 5.0;
  // [t][n_l1] keep mask on L1 outputs feeding L2; nullptr for inference.
  const std::vector<std::uint8_t>* dropout = nullptr;
};

struct RunResult {
  SpikeRaster l1;
  SpikeRaster l2;
  std::vector<double> logits;  // per L2 neuron, sum of transmitted values
  EventLog events;
  std::optional<AdjointTape> tape;
};

// Mutable per-sample state plus scratch buffers.
struct NetworkState {
  LifState hidden_lif;
  TdeState hidden_tde;
  LifState out;
  std::vector<double> l1_value;       // values emitted this step
  std::vector<double> l1_prev_value;  // previous step, for recurrence
  std::vector<double> l2_value;
  std::vector<std::uint8_t> l1_fired;
  std::vector<std::uint8_t> l2_fired;
  std::vector<double> drive1;
  std::vector<double> drive2;
  std::vector<std::uint8_t> fac;
  std::vector<std::uint8_t> trig;
  std::vector<int> active;
};

// Immutable network: spec, parameters and derived TDE constants.
class Network {
 public:
  Network(NetworkSpec spec, ParameterSet params);

  const NetworkSpec& spec() const { return spec_; }
  const ParameterSet& params() const { return params_; }
  const TdeParams& tde_params() const { return tde_; }

  NetworkState initial_state() const;

  // Advances all layers by one step. `dropout` is the L1 keep mask for this
  // step (empty for none). Appends event counts to `log` when non-null.
  void forward_timestep(std::span<const std::uint8_t> l0_spikes,
                        NetworkState& state,
                        std::span<const std::uint8_t> dropout,
                        SpikeMode mode, double lambda, EventLog* log) const;

  // Runs a whole L0 raster from rest.
  RunResult run(const SpikeRaster& l0, const RunOptions& options = {}) const;

 private:
  NetworkSpec spec_;
  ParameterSet params_;
  TdeParams tde_;
  std::vector<int> tde_fanout_;  // per L0 channel: fac + trig lines attached
};

inline RunResult run_network(const NetworkSpec& spec,
                             const ParameterSet& params,
                             const SpikeRaster& raster,
                             const RunOptions& options = {}) {
  return Network(spec, params).run(raster, options);
}

}  // namespace tdekws
