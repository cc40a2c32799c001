#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tdekws {

// Discrete-time CuBa-LIF constants. alpha and beta are per-step decay factors.
struct LifParams {
  double alpha = 0.0;
  double beta = 0.0;
  double threshold = 1.0;
  double dt = 0.0;

  static LifParams from_time_constants(double tau_syn, double tau_mem,
                                       double dt, double threshold = 1.0);
  void validate() const;
  bool operator==(const LifParams&) const = default;
};

struct LifState {
  std::vector<double> current;
  std::vector<double> membrane;
  std::vector<std::uint8_t> spiked_prev;

  LifState() = default;
  explicit LifState(std::size_t n)
      : current(n, 0.0), membrane(n, 0.0), spiked_prev(n, 0) {}
  std::size_t size() const { return current.size(); }
};

// Time difference encoder: a CuBa-LIF whose trigger synapse is weighted by a
// gain trace charged by the facilitatory input.
struct TdeParams {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> gamma;  // per cell, in (0, 1)
  double w_fac = 1.0;
  double threshold = 1.0;

  void validate() const;
};

struct TdeState {
  std::vector<double> gain;
  std::vector<double> current;
  std::vector<double> membrane;
  std::vector<std::uint8_t> spiked_prev;

  TdeState() = default;
  explicit TdeState(std::size_t n)
      : gain(n, 0.0), current(n, 0.0), membrane(n, 0.0), spiked_prev(n, 0) {}
  std::size_t size() const { return current.size(); }
};

/// Advances every neuron in `state` by one step.
///
///   I' = alpha I + drive
///   U' = (beta U + I') (1 - spiked_prev)
///   spike = U' >= threshold
///
/// `spikes` receives the new spike vector, which also becomes
/// `state.spiked_prev`. Throws NumericError on a non-finite drive.
void lif_step(LifState& state, const LifParams& params,
              std::span<const double> drive, std::span<std::uint8_t> spikes);

/// Value-returning form of lif_step.
std::pair<LifState, std::vector<std::uint8_t>> lif_step(
    const LifState& state, const LifParams& params,
    std::span<const double> drive);

/// One TDE step. The gain is charged by a facilitatory spike before it is
/// sampled by the trigger, so a coincident pair injects w_fac into I.
///
///   G' = gamma G + w_fac fac
///   I' = alpha I + G' trig
///   U' = (beta U + I') (1 - spiked_prev)
void tde_step(TdeState& state, const TdeParams& params,
              std::span<const std::uint8_t> fac_spikes,
              std::span<const std::uint8_t> trig_spikes,
              std::span<std::uint8_t> spikes);

std::pair<TdeState, std::vector<std::uint8_t>> tde_step(
    const TdeState& state, const TdeParams& params,
    std::span<const std::uint8_t> fac_spikes,
    std::span<const std::uint8_t> trig_spikes);

// Fast sigmoid used as the spike surrogate: U / (1 + lambda |U|).
inline double surrogate_sigma(double u, double lambda) {
  return u / (1.0 + lambda * (u < 0 ? -u : u));
}

// Its derivative 1 / (1 + lambda |U|)^2, used in place of the Heaviside's.
inline double surrogate_dsigma(double u, double lambda) {
  const double d = 1.0 + lambda * (u < 0 ? -u : u);
  return 1.0 / (d * d);
}

double softplus(double x);
double softplus_inverse(double y);
double logistic(double x);

// gamma = exp(-dt / softplus(raw)); the trainable TDE time constant lives in
// the unconstrained `raw` coordinate.
double gamma_from_raw(double raw, double dt);

}  // namespace tdekws
