#include "tdekws/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>

#include "tdekws/error.hpp"
#include "tdekws/kernels.hpp"

namespace tdekws {

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError(std::string(name) + " must be positive");
    }
  };
  positive(lambda, "lambda");
  positive(dt, "dt");
  positive(tau_mem, "tau_mem");
  positive(tau_syn, "tau_syn");
  positive(threshold, "threshold");
  positive(input_gain, "input_gain");
  positive(tau_g_init, "tau_g_init");
  positive(init_scale, "init_scale");
  if (!(learning_rate >= 0.0)) throw DomainError("learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw DomainError("weight_decay must be >= 0");
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    throw DomainError("p_drop must lie in [0, 1)");
  }
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (epochs < 1) throw DomainError("epochs must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw DomainError("train_fraction must lie in (0, 1]");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DomainError("test_fraction must lie in (0, 1)");
  }
  if (top_k < 1) throw DomainError("top_k must be >= 1");
}

LifParams TrainConfig::neuron_params() const {
  return LifParams::from_time_constants(tau_syn, tau_mem, dt, threshold);
}

ParameterSet init_parameters(const NetworkSpec& spec, const TrainConfig& cfg,
                             std::uint64_t seed,
                             std::span<const double> tau_raw) {
  spec.validate();
  ParameterSet p;
  p.encoder = p.hidden = p.output = cfg.neuron_params();
  p.input_gain = cfg.input_gain;
  std::mt19937_64 rng(seed);
  auto fill = [&](Matrix& m, int rows, int cols) {
    m = Matrix(rows, cols);
    const double bound = cfg.init_scale / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : m.data()) v = dist(rng);
  };
  if (spec.kind != ArchKind::Tde) fill(p.w1, spec.n_l1, spec.n_l0);
  if (spec.kind == ArchKind::LifRec) fill(p.w_rec, spec.n_l1, spec.n_l1);
  fill(p.w2, spec.n_l2, spec.n_l1);
  if (spec.kind == ArchKind::Tde) {
    if (!tau_raw.empty()) {
      if (static_cast<int>(tau_raw.size()) != spec.n_l1) {
        throw StructuralError("tau_g_raw init has the wrong length");
      }
      p.tau_g_raw.assign(tau_raw.begin(), tau_raw.end());
    } else {
      p.tau_g_raw.assign(spec.n_l1, softplus_inverse(cfg.tau_g_init));
    }
  }
  p.validate_for(spec);
  return p;
}

namespace {

void softmax(std::span<const double> logits, std::vector<double>& out) {
  out.resize(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
}

}  // namespace

double spike_count_cross_entropy(std::span<const double> counts, int label) {
  if (counts.empty() || label < 0 ||
      label >= static_cast<int>(counts.size())) {
    throw DomainError("label " + std::to_string(label) +
                      " out of range for " + std::to_string(counts.size()) +
                      " output neurons");
  }
  const double m = *std::max_element(counts.begin(), counts.end());
  double z = 0.0;
  for (double c : counts) z += std::exp(c - m);
  return -(counts[label] - m - std::log(z));
}

double spike_count_cross_entropy(const SpikeRaster& l2, int label) {
  std::vector<double> counts(l2.neurons());
  for (int k = 0; k < l2.neurons(); ++k) {
    counts[k] = static_cast<double>(l2.row_count(k));
  }
  return spike_count_cross_entropy(counts, label);
}

int predict_class(std::span<const double> counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                          counts.begin());
}

Gradients Gradients::zeros_like(const NetworkSpec& spec) {
  Gradients g;
  if (spec.kind != ArchKind::Tde) g.w1 = Matrix(spec.n_l1, spec.n_l0);
  if (spec.kind == ArchKind::LifRec) g.w_rec = Matrix(spec.n_l1, spec.n_l1);
  g.w2 = Matrix(spec.n_l2, spec.n_l1);
  if (spec.kind == ArchKind::Tde) g.tau_g_raw.assign(spec.n_l1, 0.0);
  return g;
}

Gradients& Gradients::operator+=(const Gradients& o) {
  auto add = [](std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
      throw StructuralError("gradient blocks differ in size");
    }
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  add(w1.data(), o.w1.data());
  add(w_rec.data(), o.w_rec.data());
  add(w2.data(), o.w2.data());
  add(tau_g_raw, o.tau_g_raw);
  return *this;
}

void Gradients::scale(double s) {
  for (auto* v : {&w1.data(), &w_rec.data(), &w2.data(), &tau_g_raw}) {
    for (double& x : *v) x *= s;
  }
}

namespace {

template <typename T, typename Blocks>
std::vector<std::span<T>> blocks_for(Blocks& b, ArchKind kind) {
  std::vector<std::span<T>> out;
  if (kind != ArchKind::Tde) out.emplace_back(b.w1.data());
  if (kind == ArchKind::LifRec) out.emplace_back(b.w_rec.data());
  out.emplace_back(b.w2.data());
  if (kind == ArchKind::Tde) out.emplace_back(b.tau_g_raw);
  return out;
}

}  // namespace

std::vector<std::span<double>> trainable_blocks(ParameterSet& params,
                                                ArchKind kind) {
  return blocks_for<double>(params, kind);
}

std::vector<std::span<double>> trainable_blocks(Gradients& grads,
                                                ArchKind kind) {
  return blocks_for<double>(grads, kind);
}

std::vector<std::span<const double>> trainable_blocks(const Gradients& grads,
                                                      ArchKind kind) {
  return blocks_for<const double>(grads, kind);
}

Gradients backward(const AdjointTape& tape, const Network& net, int label,
                   double loss_scale) {
  const NetworkSpec& spec = net.spec();
  const ParameterSet& p = net.params();
  const int steps = tape.steps;
  const int n0 = spec.n_l0;
  const int h = spec.n_l1;
  const int n2 = spec.n_l2;
  if (tape.n_l0 != n0 || tape.hidden.neurons != h ||
      tape.output.neurons != n2 ||
      tape.output.membrane.size() != static_cast<std::size_t>(steps) * n2 ||
      tape.hidden.membrane.size() != static_cast<std::size_t>(steps) * h ||
      (spec.kind == ArchKind::Tde &&
       tape.hidden.gain.size() != static_cast<std::size_t>(steps) * h)) {
    throw StructuralError("backward: tape does not match the network");
  }
  if (label < 0 || label >= n2) throw DomainError("backward: label out of range");
  const bool has_mask = !tape.dropout.empty();
  const double lambda = tape.lambda;
  const double th1 = p.hidden.threshold, a1 = p.hidden.alpha,
               b1 = p.hidden.beta;
  const double th2 = p.output.threshold, a2 = p.output.alpha,
               b2 = p.output.beta;

  // dL/dcount_k = softmax_k - [k == label]; every step's value adds to count.
  std::vector<double> counts(n2, 0.0);
  for (int t = 0; t < steps; ++t) {
    for (int k = 0; k < n2; ++k) counts[k] += tape.output.value[t * n2 + k];
  }
  std::vector<double> dcount;
  softmax(counts, dcount);
  dcount[label] -= 1.0;
  for (double& v : dcount) v *= loss_scale;

  Gradients g = Gradients::zeros_like(spec);
  std::vector<double> gv2_next(n2, 0.0), gi2_next(n2, 0.0), gx2(n2, 0.0);
  std::vector<double> gv1_next(h, 0.0), gi1_next(h, 0.0), gg_next(h, 0.0);
  std::vector<double> gvalue1(h, 0.0), carry(h, 0.0), carry_next(h, 0.0);
  std::vector<double> ggamma(h, 0.0), gi1(h, 0.0);

  // TDE cells whose gain never leaves zero cannot influence the loss
  // through tau_g and have no other trainable input.
  std::vector<std::uint8_t> live(h, 1);
  if (spec.kind == ArchKind::Tde) {
    for (int j = 0; j < h; ++j) {
      bool any = false;
      for (int t = 0; t < steps && !any; ++t) any = tape.hidden.gain[t * h + j] != 0.0;
      live[j] = any;
    }
  }
  const Matrix& w2 = p.w2;
  const auto& gamma = net.tde_params().gamma;

  for (int t = steps - 1; t >= 0; --t) {
    // Output layer.
    for (int k = 0; k < n2; ++k) {
      const double u = tape.output.membrane[t * n2 + k];
      const double gu = dcount[k] * surrogate_dsigma(u - th2, lambda) +
                        b2 * gv2_next[k];
      const bool reset = t > 0 && tape.output.fired[(t - 1) * n2 + k];
      const double gv = reset ? 0.0 : gu;
      const double gi = gv + a2 * gi2_next[k];
      gv2_next[k] = gv;
      gi2_next[k] = gi;
      gx2[k] = gi;
    }
    const double* value1 = &tape.hidden.value[static_cast<std::size_t>(t) * h];
    const std::uint8_t* mask =
        has_mask ? &tape.dropout[static_cast<std::size_t>(t) * h] : nullptr;
    for (int j = 0; j < h; ++j) {
      const double in = (mask && !mask[j]) ? 0.0 : value1[j];
      if (in == 0.0) continue;
      for (int k = 0; k < n2; ++k) g.w2(k, j) += gx2[k] * in;
    }
    std::copy(carry.begin(), carry.end(), gvalue1.begin());
    for (int k = 0; k < n2; ++k) {
      const double gk = gx2[k];
      const double* row = &w2.data()[static_cast<std::size_t>(k) * h];
      if (mask) {
        for (int j = 0; j < h; ++j) gvalue1[j] += mask[j] ? row[j] * gk : 0.0;
      } else {
        for (int j = 0; j < h; ++j) gvalue1[j] += row[j] * gk;
      }
    }

    // Hidden layer.
    const double* u1 = &tape.hidden.membrane[static_cast<std::size_t>(t) * h];
    const std::uint8_t* fired_prev =
        t > 0 ? &tape.hidden.fired[static_cast<std::size_t>(t - 1) * h]
              : nullptr;
    for (int j = 0; j < h; ++j) {
      if (!live[j]) continue;
      const double gu = gvalue1[j] * surrogate_dsigma(u1[j] - th1, lambda) +
                        b1 * gv1_next[j];
      const double gv = (fired_prev && fired_prev[j]) ? 0.0 : gu;
      const double gi = gv + a1 * gi1_next[j];
      gv1_next[j] = gv;
      gi1_next[j] = gi;
      gi1[j] = gi;
    }

    const std::uint8_t* l0 = &tape.l0[static_cast<std::size_t>(t) * n0];
    switch (spec.kind) {
      case ArchKind::Tde: {
        const double* gain = &tape.hidden.gain[static_cast<std::size_t>(t) * h];
        const double* gain_prev =
            t > 0 ? &tape.hidden.gain[static_cast<std::size_t>(t - 1) * h]
                  : nullptr;
        (void)gain;
        for (int j = 0; j < h; ++j) {
          if (!live[j]) continue;
          const double gg = (l0[spec.tde_pairs[j].trig] ? gi1[j] : 0.0) +
                            gamma[j] * gg_next[j];
          gg_next[j] = gg;
          if (gain_prev) ggamma[j] += gg * gain_prev[j];
        }
        break;
      }
      case ArchKind::Lif:
      case ArchKind::LifRec: {
        for (int a = 0; a < n0; ++a) {
          if (!l0[a]) continue;
          for (int j = 0; j < h; ++j) g.w1(j, a) += gi1[j];
        }
        if (spec.kind == ArchKind::LifRec) {
          std::fill(carry_next.begin(), carry_next.end(), 0.0);
          if (t > 0) {
            const double* prev =
                &tape.hidden.value[static_cast<std::size_t>(t - 1) * h];
            for (int j = 0; j < h; ++j) {
              const double gj = gi1[j];
              double* grow = &g.w_rec.data()[static_cast<std::size_t>(j) * h];
              const double* wrow = &p.w_rec.data()[static_cast<std::size_t>(j) * h];
              for (int k = 0; k < h; ++k) {
                grow[k] += gj * prev[k];
                carry_next[k] += wrow[k] * gj;
              }
            }
          }
          carry.swap(carry_next);
        }
        break;
      }
    }
  }

  if (spec.kind == ArchKind::Tde) {
    const double dt = p.hidden.dt;
    for (int j = 0; j < h; ++j) {
      const double raw = p.tau_g_raw[j];
      const double tau = softplus(raw);
      // d gamma / d raw = gamma * dt / tau^2 * logistic(raw)
      g.tau_g_raw[j] =
          ggamma[j] * gamma[j] * dt / (tau * tau) * logistic(raw);
    }
  }
  return g;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word.
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DropoutSampler::DropoutSampler(std::uint64_t seed, double p_drop)
    : seed_(seed),
      drop_below_(static_cast<std::uint32_t>(std::lround(p_drop * 65536.0))) {
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    throw DomainError("p_drop must lie in [0, 1)");
  }
}

void DropoutSampler::fill(std::uint64_t stream,
                          std::span<std::uint8_t> mask) const {
  const std::uint64_t base = mix_seed(seed_, stream);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (i % 4 == 0) word = mix_seed(base, i / 4);
    const auto chunk = static_cast<std::uint32_t>(word & 0xffffu);
    word >>= 16;
    mask[i] = chunk >= drop_below_ ? 1 : 0;
  }
}

Adam::Adam(const NetworkSpec& spec, AdamConfig cfg)
    : kind_(spec.kind),
      cfg_(cfg),
      m_(Gradients::zeros_like(spec)),
      v_(Gradients::zeros_like(spec)) {}

void Adam::step(ParameterSet& params, const Gradients& grads) {
  ++t_;
  auto pb = trainable_blocks(params, kind_);
  auto gb = trainable_blocks(grads, kind_);
  auto mb = trainable_blocks(m_, kind_);
  auto vb = trainable_blocks(v_, kind_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t b = 0; b < pb.size(); ++b) {
    if (pb[b].size() != gb[b].size()) {
      throw StructuralError("Adam: gradient block size mismatch");
    }
    // tau_g_raw is the last block of a TDE net and is not decayed.
    const bool decay = !(kind_ == ArchKind::Tde && b + 1 == pb.size());
    const double shrink = decay ? 1.0 - cfg_.learning_rate * cfg_.weight_decay
                                : 1.0;
    for (std::size_t i = 0; i < pb[b].size(); ++i) {
      const double gi = gb[b][i];
      mb[b][i] = cfg_.beta1 * mb[b][i] + (1.0 - cfg_.beta1) * gi;
      vb[b][i] = cfg_.beta2 * vb[b][i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = mb[b][i] / c1;
      const double vhat = vb[b][i] / c2;
      pb[b][i] = pb[b][i] * shrink -
                 cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

Split split_dataset(const Dataset& data, double test_fraction,
                    double train_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DomainError("test_fraction must lie in (0, 1)");
  }
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw DomainError("train_fraction must lie in (0, 1]");
  }
  if (data.empty()) throw DomainError("cannot split an empty dataset");
  data.validate();
  std::vector<std::vector<int>> by_class(data.n_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_class[data.samples[i].class_id].push_back(static_cast<int>(i));
  }
  std::size_t min_count = data.size();
  for (int c = 0; c < data.n_classes; ++c) {
    min_count = std::min(min_count, by_class[c].size());
  }
  const auto n_test = static_cast<std::size_t>(
      std::floor(test_fraction * static_cast<double>(min_count) + 1e-9));
  if (n_test < 1 || n_test >= min_count) {
    throw DomainError("a class has too few samples (" +
                      std::to_string(min_count) + ") for the requested split");
  }
  Split split;
  split.train.n_classes = split.test.n_classes = data.n_classes;
  split.train.provenance = data.provenance + " [train]";
  split.test.provenance = data.provenance + " [test]";
  std::mt19937_64 rng(mix_seed(seed, 0x5b117));
  for (int c = 0; c < data.n_classes; ++c) {
    auto idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t rest = idx.size() - n_test;
    const auto keep = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(rest) + 1e-9));
    if (keep < 1) {
      throw DomainError("train_fraction leaves class " + std::to_string(c) +
                        " without training samples");
    }
    for (std::size_t i = 0; i < n_test; ++i) {
      split.test.samples.push_back(data.samples[idx[i]]);
    }
    for (std::size_t i = 0; i < keep; ++i) {
      split.train.samples.push_back(data.samples[idx[n_test + i]]);
    }
  }
  return split;
}

double top_k_mean(std::span<const double> values, int k) {
  if (values.empty()) return 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t n = std::min<std::size_t>(sorted.size(), k);
  return std::accumulate(sorted.begin(), sorted.begin() + n, 0.0) / n;
}

TrainResult train(const Dataset& train_set, const Dataset& test_set,
                  const NetworkSpec& spec, ParameterSet init,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw Error("train: empty training set");
  if (test_set.empty()) throw Error("train: empty test set");
  init.validate_for(spec);
  const auto start = std::chrono::steady_clock::now();

  TrainResult result;
  result.params = std::move(init);
  TrainReport& report = result.report;
  report.arch = spec.kind;
  report.n_l1 = spec.n_l1;
  report.seed = cfg.seed;
  report.top_k = cfg.top_k;

  Adam adam(spec, {cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay});
  const DropoutSampler sampler(mix_seed(cfg.seed, 0xd0), cfg.p_drop);
  const DropoutSampler* dropout = cfg.p_drop > 0.0 ? &sampler : nullptr;
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x5f));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int step = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size, ++step) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      std::span<const int> idx(order.data() + b, e - b);
      const Network net(spec, result.params);
      auto bg = batch_gradient(net, train_set, idx, dropout,
                               mix_seed(cfg.seed, 1000 + epoch), cfg.lambda);
      if (!std::isfinite(bg.loss)) {
        throw NumericError("non-finite loss at epoch " +
                           std::to_string(epoch) + ", step " +
                           std::to_string(step));
      }
      loss_sum += bg.loss * static_cast<double>(idx.size());
      adam.step(result.params, bg.grads);
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
    const Network net(spec, result.params);
    report.epoch_test_accuracy.push_back(evaluate(net, test_set).accuracy);
  }
  report.top_accuracy = top_k_mean(report.epoch_test_accuracy, cfg.top_k);
  report.wall_clock_sec = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
  return result;
}

}  // namespace tdekws
