#include "tdekws/dynamics.hpp"

#include <cmath>
#include <string>

#include "tdekws/error.hpp"

namespace tdekws {

namespace {

void check_decay(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw DomainError(std::string(name) + " must lie in (0,1), got " +
                      std::to_string(v));
  }
}

}  // namespace

LifParams LifParams::from_time_constants(double tau_syn, double tau_mem,
                                         double dt, double threshold) {
  if (!(tau_syn > 0 && tau_mem > 0 && dt > 0)) {
    throw DomainError("time constants and dt must be positive");
  }
  LifParams p;
  p.alpha = std::exp(-dt / tau_syn);
  p.beta = std::exp(-dt / tau_mem);
  p.threshold = threshold;
  p.dt = dt;
  p.validate();
  return p;
}

void LifParams::validate() const {
  check_decay(alpha, "alpha");
  check_decay(beta, "beta");
  if (!(threshold > 0 && std::isfinite(threshold))) {
    throw DomainError("threshold must be positive");
  }
}

void TdeParams::validate() const {
  check_decay(alpha, "alpha");
  check_decay(beta, "beta");
  for (double g : gamma) check_decay(g, "gamma");
}

void lif_step(LifState& state, const LifParams& params,
              std::span<const double> drive, std::span<std::uint8_t> spikes) {
  const std::size_t n = state.size();
  if (drive.size() != n || spikes.size() != n || state.membrane.size() != n ||
      state.spiked_prev.size() != n) {
    throw StructuralError("lif_step: drive/state/spike sizes disagree");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(drive[i])) {
      throw NumericError("lif_step: non-finite drive at neuron " +
                         std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double current = params.alpha * state.current[i] + drive[i];
    const double keep = state.spiked_prev[i] ? 0.0 : 1.0;
    const double membrane = (params.beta * state.membrane[i] + current) * keep;
    const std::uint8_t fired = membrane >= params.threshold ? 1 : 0;
    state.current[i] = current;
    state.membrane[i] = membrane;
    state.spiked_prev[i] = fired;
    spikes[i] = fired;
  }
}

std::pair<LifState, std::vector<std::uint8_t>> lif_step(
    const LifState& state, const LifParams& params,
    std::span<const double> drive) {
  LifState next = state;
  std::vector<std::uint8_t> spikes(state.size());
  lif_step(next, params, drive, spikes);
  return {std::move(next), std::move(spikes)};
}

void tde_step(TdeState& state, const TdeParams& params,
              std::span<const std::uint8_t> fac_spikes,
              std::span<const std::uint8_t> trig_spikes,
              std::span<std::uint8_t> spikes) {
  const std::size_t n = state.size();
  if (fac_spikes.size() != n || trig_spikes.size() != n ||
      spikes.size() != n || params.gamma.size() != n ||
      state.gain.size() != n || state.membrane.size() != n ||
      state.spiked_prev.size() != n) {
    throw StructuralError("tde_step: fac/trig/state/gamma sizes disagree");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double gain =
        params.gamma[i] * state.gain[i] + (fac_spikes[i] ? params.w_fac : 0.0);
    const double current =
        params.alpha * state.current[i] + (trig_spikes[i] ? gain : 0.0);
    const double keep = state.spiked_prev[i] ? 0.0 : 1.0;
    const double membrane = (params.beta * state.membrane[i] + current) * keep;
    const std::uint8_t fired = membrane >= params.threshold ? 1 : 0;
    state.gain[i] = gain;
    state.current[i] = current;
    state.membrane[i] = membrane;
    state.spiked_prev[i] = fired;
    spikes[i] = fired;
  }
}

std::pair<TdeState, std::vector<std::uint8_t>> tde_step(
    const TdeState& state, const TdeParams& params,
    std::span<const std::uint8_t> fac_spikes,
    std::span<const std::uint8_t> trig_spikes) {
  TdeState next = state;
  std::vector<std::uint8_t> spikes(state.size());
  tde_step(next, params, fac_spikes, trig_spikes, spikes);
  return {std::move(next), std::move(spikes)};
}

double softplus(double x) {
  // log(1 + e^x) without overflow for large x.
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw DomainError("softplus_inverse needs y > 0");
  return y > 30.0 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double gamma_from_raw(double raw, double dt) {
  return std::exp(-dt / softplus(raw));
}

}  // namespace tdekws
