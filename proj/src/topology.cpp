#include "tdekws/topology.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "tdekws/error.hpp"

namespace tdekws {

std::string_view to_string(ArchKind kind) {
  switch (kind) {
    case ArchKind::Tde: return "tde";
    case ArchKind::Lif: return "lif";
    case ArchKind::LifRec: return "lifrec";
  }
  return "?";
}

ArchKind parse_arch(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "tde") return ArchKind::Tde;
  if (lower == "lif") return ArchKind::Lif;
  if (lower == "lifrec") return ArchKind::LifRec;
  throw DomainError("unknown architecture '" + std::string(name) + "'");
}

NetworkSpec NetworkSpec::tde(std::vector<TdePair> pairs, int n_l0, int n_l2) {
  NetworkSpec s;
  s.kind = ArchKind::Tde;
  s.n_l0 = n_l0;
  s.n_l1 = static_cast<int>(pairs.size());
  s.n_l2 = n_l2;
  s.tde_pairs = std::move(pairs);
  s.validate();
  return s;
}

NetworkSpec NetworkSpec::lif(int n_l1, int n_l0, int n_l2) {
  NetworkSpec s;
  s.kind = ArchKind::Lif;
  s.n_l0 = n_l0;
  s.n_l1 = n_l1;
  s.n_l2 = n_l2;
  s.validate();
  return s;
}

NetworkSpec NetworkSpec::lifrec(int n_l1, int n_l0, int n_l2) {
  NetworkSpec s = lif(n_l1, n_l0, n_l2);
  s.kind = ArchKind::LifRec;
  return s;
}

void NetworkSpec::validate() const {
  if (n_l0 < 1 || n_l1 < 1 || n_l2 < 1) {
    throw StructuralError("layer sizes must be positive");
  }
  if (kind != ArchKind::Tde) {
    if (!tde_pairs.empty()) {
      throw StructuralError("tde_pairs given for a non-TDE architecture");
    }
    return;
  }
  if (static_cast<int>(tde_pairs.size()) != n_l1) {
    throw StructuralError("TDE n_l1 must equal the number of pairs");
  }
  std::set<TdePair> seen;
  for (const auto& p : tde_pairs) {
    if (p.fac < 0 || p.fac >= n_l0 || p.trig < 0 || p.trig >= n_l0) {
      throw StructuralError("TDE pair channel out of range");
    }
    if (p.fac == p.trig) {
      throw StructuralError("TDE pair must join two different channels");
    }
    if (!seen.insert(p).second) {
      throw StructuralError("duplicate TDE pair (" + std::to_string(p.fac) +
                            "," + std::to_string(p.trig) + ")");
    }
  }
}

long long connection_count(ArchKind kind, long long n_l1, long long n_l0,
                           long long n_l2) {
  switch (kind) {
    case ArchKind::Tde: return 2 * n_l1 + n_l1 * n_l2;
    case ArchKind::Lif: return n_l1 * n_l0 + n_l1 * n_l2;
    case ArchKind::LifRec: return n_l1 * n_l0 + n_l1 * n_l1 + n_l1 * n_l2;
  }
  return 0;
}

long long connection_count(const NetworkSpec& spec) {
  return connection_count(spec.kind, spec.n_l1, spec.n_l0, spec.n_l2);
}

long long trained_parameter_count(const NetworkSpec& spec) {
  const long long h = spec.n_l1;
  switch (spec.kind) {
    case ArchKind::Tde: return h + h * spec.n_l2;
    case ArchKind::Lif: return h * spec.n_l0 + h * spec.n_l2;
    case ArchKind::LifRec: return h * spec.n_l0 + h * h + h * spec.n_l2;
  }
  return 0;
}

int balance_hidden_size(long long target_connections, ArchKind kind, int n_l0,
                        int n_l2) {
  if (kind == ArchKind::Tde) {
    throw DomainError("balance_hidden_size applies to LIF and LIFREC only");
  }
  if (target_connections < connection_count(kind, 1, n_l0, n_l2)) {
    throw DomainError("target of " + std::to_string(target_connections) +
                      " connections is below the one-cell network");
  }
  // Connection counts grow strictly with n, so walk up to the first size at
  // or above the target and compare it with its predecessor.
  long long n = 1;
  while (connection_count(kind, n, n_l0, n_l2) < target_connections) ++n;
  if (n > 1) {
    const long long above = connection_count(kind, n, n_l0, n_l2) -
                            target_connections;
    const long long below = target_connections -
                            connection_count(kind, n - 1, n_l0, n_l2);
    if (below <= above) --n;
  }
  return static_cast<int>(n);
}

std::vector<TdePair> enumerate_tde_pairs(int n_l0) {
  if (n_l0 < 2) throw DomainError("need at least two channels for TDE pairs");
  std::vector<TdePair> pairs;
  pairs.reserve(static_cast<std::size_t>(n_l0) * (n_l0 - 1));
  for (int a = 0; a < n_l0; ++a) {
    for (int b = 0; b < n_l0; ++b) {
      if (a != b) pairs.push_back({a, b});
    }
  }
  return pairs;
}

namespace {

void expect_shape(const Matrix& m, int rows, int cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw StructuralError(std::string(name) + " must be " +
                          std::to_string(rows) + "x" + std::to_string(cols) +
                          ", got " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
  }
}

void expect_absent(const Matrix& m, const char* name) {
  if (!m.empty()) {
    throw StructuralError(std::string(name) +
                          " is not part of this architecture");
  }
}

}  // namespace

void ParameterSet::validate_for(const NetworkSpec& spec) const {
  spec.validate();
  expect_shape(w2, spec.n_l2, spec.n_l1, "w2");
  switch (spec.kind) {
    case ArchKind::Tde:
      expect_absent(w1, "w1");
      expect_absent(w_rec, "w_rec");
      if (static_cast<int>(tau_g_raw.size()) != spec.n_l1) {
        throw StructuralError("tau_g_raw must have one entry per TDE cell");
      }
      break;
    case ArchKind::Lif:
      expect_shape(w1, spec.n_l1, spec.n_l0, "w1");
      expect_absent(w_rec, "w_rec");
      if (!tau_g_raw.empty()) throw StructuralError("tau_g_raw given for LIF");
      break;
    case ArchKind::LifRec:
      expect_shape(w1, spec.n_l1, spec.n_l0, "w1");
      expect_shape(w_rec, spec.n_l1, spec.n_l1, "w_rec");
      if (!tau_g_raw.empty()) {
        throw StructuralError("tau_g_raw given for LIFREC");
      }
      break;
  }
  hidden.validate();
  output.validate();
}

Network::Network(NetworkSpec spec, ParameterSet params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  params_.validate_for(spec_);
  if (spec_.kind == ArchKind::Tde) {
    tde_.alpha = params_.hidden.alpha;
    tde_.beta = params_.hidden.beta;
    tde_.threshold = params_.hidden.threshold;
    tde_.w_fac = 1.0;
    tde_.gamma.resize(spec_.n_l1);
    for (int i = 0; i < spec_.n_l1; ++i) {
      tde_.gamma[i] = gamma_from_raw(params_.tau_g_raw[i], params_.hidden.dt);
    }
    tde_.validate();
    tde_fanout_.assign(spec_.n_l0, 0);
    for (const auto& p : spec_.tde_pairs) {
      ++tde_fanout_[p.fac];
      ++tde_fanout_[p.trig];
    }
  }
}

NetworkState Network::initial_state() const {
  NetworkState s;
  const std::size_t h = spec_.n_l1;
  if (spec_.kind == ArchKind::Tde) {
    s.hidden_tde = TdeState(h);
    s.fac.assign(h, 0);
    s.trig.assign(h, 0);
  } else {
    s.hidden_lif = LifState(h);
  }
  s.out = LifState(spec_.n_l2);
  s.l1_value.assign(h, 0.0);
  s.l1_prev_value.assign(h, 0.0);
  s.l2_value.assign(spec_.n_l2, 0.0);
  s.l1_fired.assign(h, 0);
  s.l2_fired.assign(spec_.n_l2, 0);
  s.drive1.assign(h, 0.0);
  s.drive2.assign(spec_.n_l2, 0.0);
  s.active.reserve(std::max<std::size_t>(h, spec_.n_l0));
  return s;
}

void Network::forward_timestep(std::span<const std::uint8_t> l0_spikes,
                               NetworkState& state,
                               std::span<const std::uint8_t> dropout,
                               SpikeMode mode, double lambda,
                               EventLog* log) const {
  const int n0 = spec_.n_l0;
  const int h = spec_.n_l1;
  const int n2 = spec_.n_l2;
  if (static_cast<int>(l0_spikes.size()) != n0) {
    throw StructuralError("forward_timestep: expected " + std::to_string(n0) +
                          " L0 spikes, got " +
                          std::to_string(l0_spikes.size()));
  }
  if (!dropout.empty() && static_cast<int>(dropout.size()) != h) {
    throw StructuralError("forward_timestep: dropout mask size mismatch");
  }
  if (static_cast<int>(state.l1_value.size()) != h ||
      static_cast<int>(state.out.size()) != n2) {
    throw StructuralError("forward_timestep: state does not match network");
  }

  auto& active = state.active;
  active.clear();
  for (int j = 0; j < n0; ++j) {
    if (l0_spikes[j]) active.push_back(j);
  }
  if (log) {
    log->layers[0].output_spikes += active.size();
  }

  // Hidden layer.
  state.l1_prev_value.swap(state.l1_value);
  if (spec_.kind == ArchKind::Tde) {
    for (int i = 0; i < h; ++i) {
      state.fac[i] = l0_spikes[spec_.tde_pairs[i].fac];
      state.trig[i] = l0_spikes[spec_.tde_pairs[i].trig];
    }
    if (log) {
      for (int j : active) log->layers[1].input_events += tde_fanout_[j];
    }
    tde_step(state.hidden_tde, tde_, state.fac, state.trig, state.l1_fired);
  } else {
    const Matrix& w1 = params_.w1;
    for (int i = 0; i < h; ++i) {
      const double* row = &w1.data()[static_cast<std::size_t>(i) * n0];
      double d = 0.0;
      for (int j : active) d += row[j];
      state.drive1[i] = d;
    }
    if (log) log->layers[1].input_events += active.size() * std::uint64_t(h);
    if (spec_.kind == ArchKind::LifRec) {
      const Matrix& wr = params_.w_rec;
      std::uint64_t delivered = 0;
      for (int k = 0; k < h; ++k) {
        const double v = state.l1_prev_value[k];
        if (v == 0.0) continue;
        if (state.hidden_lif.spiked_prev[k]) ++delivered;
        for (int i = 0; i < h; ++i) state.drive1[i] += wr(i, k) * v;
      }
      if (log) log->layers[1].input_events += delivered * std::uint64_t(h);
    }
    lif_step(state.hidden_lif, params_.hidden, state.drive1, state.l1_fired);
  }
  const double theta1 = params_.hidden.threshold;
  const auto& u1 = spec_.kind == ArchKind::Tde ? state.hidden_tde.membrane
                                               : state.hidden_lif.membrane;
  std::uint64_t l1_count = 0;
  for (int i = 0; i < h; ++i) {
    l1_count += state.l1_fired[i];
    state.l1_value[i] = mode == SpikeMode::Hard
                            ? double(state.l1_fired[i])
                            : surrogate_sigma(u1[i] - theta1, lambda);
  }
  if (log) log->layers[1].output_spikes += l1_count;

  // Output layer: drive = W2 (value * mask).
  std::fill(state.drive2.begin(), state.drive2.end(), 0.0);
  std::uint64_t delivered = 0;
  const Matrix& w2 = params_.w2;
  for (int j = 0; j < h; ++j) {
    double v = state.l1_value[j];
    if (!dropout.empty() && !dropout[j]) v = 0.0;
    if (v == 0.0) continue;
    if (state.l1_fired[j]) ++delivered;
    for (int k = 0; k < n2; ++k) state.drive2[k] += w2(k, j) * v;
  }
  if (log) log->layers[2].input_events += delivered * std::uint64_t(n2);
  lif_step(state.out, params_.output, state.drive2, state.l2_fired);
  const double theta2 = params_.output.threshold;
  std::uint64_t l2_count = 0;
  for (int k = 0; k < n2; ++k) {
    l2_count += state.l2_fired[k];
    state.l2_value[k] = mode == SpikeMode::Hard
                            ? double(state.l2_fired[k])
                            : surrogate_sigma(state.out.membrane[k] - theta2,
                                              lambda);
  }
  if (log) log->layers[2].output_spikes += l2_count;
}

RunResult Network::run(const SpikeRaster& l0, const RunOptions& options) const {
  if (l0.neurons() != spec_.n_l0) {
    throw StructuralError("run_network: raster has " +
                          std::to_string(l0.neurons()) + " rows, network " +
                          std::to_string(spec_.n_l0) + " inputs");
  }
  const int steps = l0.steps();
  const int h = spec_.n_l1;
  const int n2 = spec_.n_l2;
  if (options.dropout &&
      options.dropout->size() != static_cast<std::size_t>(steps) * h) {
    throw StructuralError("run_network: dropout mask must be T x n_l1");
  }

  RunResult result;
  result.logits.assign(n2, 0.0);
  result.events.samples = 1;
  if (options.record_rasters) {
    result.l1 = SpikeRaster(h, steps, l0.dt());
    result.l2 = SpikeRaster(n2, steps, l0.dt());
  }
  AdjointTape* tape = nullptr;
  if (options.record_tape) {
    result.tape.emplace();
    tape = &*result.tape;
    tape->steps = steps;
    tape->n_l0 = spec_.n_l0;
    tape->mode = options.mode;
    tape->lambda = options.lambda;
    tape->l0.resize(static_cast<std::size_t>(steps) * spec_.n_l0);
    if (options.dropout) tape->dropout = *options.dropout;
    auto init_layer = [steps](LayerTape& lt, int n, bool gain) {
      const std::size_t sz = static_cast<std::size_t>(steps) * n;
      lt.neurons = n;
      lt.current.resize(sz);
      lt.membrane.resize(sz);
      lt.value.resize(sz);
      lt.fired.resize(sz);
      if (gain) lt.gain.resize(sz);
    };
    init_layer(tape->hidden, h, spec_.kind == ArchKind::Tde);
    init_layer(tape->output, n2, false);
  }

  NetworkState state = initial_state();
  std::vector<std::uint8_t> column(spec_.n_l0);
  for (int t = 0; t < steps; ++t) {
    l0.column(t, column);
    std::span<const std::uint8_t> mask;
    if (options.dropout) {
      mask = {options.dropout->data() + static_cast<std::size_t>(t) * h,
              static_cast<std::size_t>(h)};
    }
    forward_timestep(column, state, mask, options.mode, options.lambda,
                     &result.events);
    for (int k = 0; k < n2; ++k) result.logits[k] += state.l2_value[k];
    if (options.record_rasters) {
      for (int i = 0; i < h; ++i) {
        if (state.l1_fired[i]) result.l1.set(i, t, true);
      }
      for (int k = 0; k < n2; ++k) {
        if (state.l2_fired[k]) result.l2.set(k, t, true);
      }
    }
    if (tape) {
      std::copy(column.begin(), column.end(),
                tape->l0.begin() + static_cast<std::size_t>(t) * spec_.n_l0);
      const std::size_t o1 = static_cast<std::size_t>(t) * h;
      const auto& hs = spec_.kind == ArchKind::Tde ? state.hidden_tde.current
                                                   : state.hidden_lif.current;
      const auto& hu = spec_.kind == ArchKind::Tde
                           ? state.hidden_tde.membrane
                           : state.hidden_lif.membrane;
      std::copy(hs.begin(), hs.end(), tape->hidden.current.begin() + o1);
      std::copy(hu.begin(), hu.end(), tape->hidden.membrane.begin() + o1);
      std::copy(state.l1_value.begin(), state.l1_value.end(),
                tape->hidden.value.begin() + o1);
      std::copy(state.l1_fired.begin(), state.l1_fired.end(),
                tape->hidden.fired.begin() + o1);
      if (spec_.kind == ArchKind::Tde) {
        std::copy(state.hidden_tde.gain.begin(), state.hidden_tde.gain.end(),
                  tape->hidden.gain.begin() + o1);
      }
      const std::size_t o2 = static_cast<std::size_t>(t) * n2;
      std::copy(state.out.current.begin(), state.out.current.end(),
                tape->output.current.begin() + o2);
      std::copy(state.out.membrane.begin(), state.out.membrane.end(),
                tape->output.membrane.begin() + o2);
      std::copy(state.l2_value.begin(), state.l2_value.end(),
                tape->output.value.begin() + o2);
      std::copy(state.l2_fired.begin(), state.l2_fired.end(),
                tape->output.fired.begin() + o2);
    }
  }
  return result;
}

}  // namespace tdekws
