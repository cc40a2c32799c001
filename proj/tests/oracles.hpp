#pragma once

// Reference computations written without the library kernels: scalar neuron
// recurrences, the direct cross-correlation sum, a dense network replay with
// per-event counters, and central finite differences.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tdekws/raster.hpp"
#include "tdekws/topology.hpp"
#include "tdekws/training.hpp"

namespace oracle {

struct Trace {
  std::vector<double> i, u, g;
  std::vector<int> s;
};

inline Trace lif(const std::vector<double>& drive, double a, double b, double th) {
  Trace tr;
  double i = 0, u = 0;
  int s = 0;
  for (double x : drive) {
    i = a * i + x;
    u = s ? 0.0 : b * u + i;
    s = u >= th ? 1 : 0;
    tr.i.push_back(i);
    tr.u.push_back(u);
    tr.s.push_back(s);
  }
  return tr;
}

inline Trace tde(const std::vector<int>& fac, const std::vector<int>& trig, double a,
                 double b, double gamma, double w_fac, double th) {
  Trace tr;
  double g = 0, i = 0, u = 0;
  int s = 0;
  for (std::size_t t = 0; t < fac.size(); ++t) {
    g = gamma * g + w_fac * fac[t];
    i = a * i + g * trig[t];
    u = s ? 0.0 : b * u + i;
    s = u >= th ? 1 : 0;
    tr.g.push_back(g);
    tr.i.push_back(i);
    tr.u.push_back(u);
    tr.s.push_back(s);
  }
  return tr;
}

// c(l) = sum_t a(t) b(t + l) / (T - |l|), index l + max_lag.
inline std::vector<double> xcorr(const std::vector<std::uint8_t>& a,
                                 const std::vector<std::uint8_t>& b, int max_lag) {
  const int T = static_cast<int>(a.size());
  std::vector<double> c;
  for (int l = -max_lag; l <= max_lag; ++l) {
    double sum = 0;
    for (int t = 0; t < T; ++t) {
      if (t + l >= 0 && t + l < T) sum += a[t] * b[t + l];
    }
    c.push_back(sum / (T - std::abs(l)));
  }
  return c;
}

struct Events {
  std::uint64_t in[3] = {0, 0, 0};
  std::uint64_t out[3] = {0, 0, 0};
  std::vector<std::vector<int>> l1, l2;  // [t][neuron] spikes
};

// Dense hard-threshold replay of the three-layer network. Each delivered or
// emitted spike bumps a counter on its own.
inline Events replay(const tdekws::NetworkSpec& spec, const tdekws::ParameterSet& p,
                     const tdekws::SpikeRaster& x,
                     const std::vector<std::uint8_t>* dropout = nullptr) {
  const int n0 = spec.n_l0, n1 = spec.n_l1, n2 = spec.n_l2, T = x.steps();
  Events ev;
  std::vector<double> g(n1, 0), i1(n1, 0), u1(n1, 0), i2(n2, 0), u2(n2, 0);
  std::vector<int> s1(n1, 0), s2(n2, 0);
  const double a1 = p.hidden.alpha, b1 = p.hidden.beta, th1 = p.hidden.threshold;
  const double a2 = p.output.alpha, b2 = p.output.beta, th2 = p.output.threshold;
  std::vector<double> gamma(n1, 0);
  if (spec.kind == tdekws::ArchKind::Tde) {
    for (int k = 0; k < n1; ++k) {
      const double tau = std::log1p(std::exp(p.tau_g_raw[k]));
      gamma[k] = std::exp(-p.hidden.dt / tau);
    }
  }
  for (int t = 0; t < T; ++t) {
    std::vector<double> in1(n1, 0);
    for (int j = 0; j < n0; ++j) {
      if (!x.at(j, t)) continue;
      ++ev.out[0];
      if (spec.kind == tdekws::ArchKind::Tde) {
        for (int k = 0; k < n1; ++k) {
          if (spec.tde_pairs[k].fac == j) ++ev.in[1];
          if (spec.tde_pairs[k].trig == j) ++ev.in[1];
        }
      } else {
        for (int k = 0; k < n1; ++k) {
          in1[k] += p.w1(k, j);
          ++ev.in[1];
        }
      }
    }
    if (spec.kind == tdekws::ArchKind::LifRec) {
      for (int j = 0; j < n1; ++j) {
        if (!s1[j]) continue;
        for (int k = 0; k < n1; ++k) {
          in1[k] += p.w_rec(k, j);
          ++ev.in[1];
        }
      }
    }
    std::vector<int> new1(n1, 0);
    for (int k = 0; k < n1; ++k) {
      if (spec.kind == tdekws::ArchKind::Tde) {
        const auto [f, tr] = spec.tde_pairs[k];
        g[k] = gamma[k] * g[k] + (x.at(f, t) ? 1.0 : 0.0);
        i1[k] = a1 * i1[k] + (x.at(tr, t) ? g[k] : 0.0);
      } else {
        i1[k] = a1 * i1[k] + in1[k];
      }
      u1[k] = s1[k] ? 0.0 : b1 * u1[k] + i1[k];
      new1[k] = u1[k] >= th1;
      ev.out[1] += new1[k];
    }
    s1 = new1;
    std::vector<double> in2(n2, 0);
    for (int k = 0; k < n1; ++k) {
      if (!s1[k]) continue;
      if (dropout && !(*dropout)[static_cast<std::size_t>(t) * n1 + k]) continue;
      for (int c = 0; c < n2; ++c) {
        in2[c] += p.w2(c, k);
        ++ev.in[2];
      }
    }
    std::vector<int> new2(n2, 0);
    for (int c = 0; c < n2; ++c) {
      i2[c] = a2 * i2[c] + in2[c];
      u2[c] = s2[c] ? 0.0 : b2 * u2[c] + i2[c];
      new2[c] = u2[c] >= th2;
      ev.out[2] += new2[c];
    }
    s2 = new2;
    ev.l1.push_back(s1);
    ev.l2.push_back(s2);
  }
  return ev;
}

inline tdekws::SpikeRaster random_raster(std::mt19937_64& rng, int n, int T,
                                         double density, double dt = 0.015) {
  tdekws::SpikeRaster r(n, T, dt);
  std::bernoulli_distribution b(density);
  for (int j = 0; j < n; ++j) {
    for (int t = 0; t < T; ++t) r.set(j, t, b(rng));
  }
  return r;
}

}  // namespace oracle
