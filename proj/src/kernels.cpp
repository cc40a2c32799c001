#include "tdekws/kernels.hpp"

#include <exception>
#include <optional>

#include <omp.h>

#include "tdekws/error.hpp"

namespace tdekws {

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

namespace {

struct SampleGradient {
  Gradients grads;
  double loss = 0.0;
  bool correct = false;
};

SampleGradient sample_gradient(const Network& net, const Sample& sample,
                               const DropoutSampler* sampler,
                               std::uint64_t stream, double lambda,
                               double loss_scale) {
  const auto& spec = net.spec();
  std::vector<std::uint8_t> mask;
  RunOptions opt;
  opt.record_tape = true;
  opt.record_rasters = false;
  opt.lambda = lambda;
  if (sampler) {
    mask.resize(static_cast<std::size_t>(sample.raster.steps()) * spec.n_l1);
    sampler->fill(stream, mask);
    opt.dropout = &mask;
  }
  RunResult run = net.run(sample.raster, opt);
  SampleGradient out;
  out.loss = spike_count_cross_entropy(run.logits, sample.class_id);
  out.correct = predict_class(run.logits) == sample.class_id;
  out.grads = backward(*run.tape, net, sample.class_id, loss_scale);
  return out;
}

void check_indices(const Dataset& data, std::span<const int> indices) {
  if (indices.empty()) throw DomainError("batch_gradient: empty batch");
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= data.size()) {
      throw DomainError("batch_gradient: sample index out of range");
    }
  }
}

// Runs body(i) for i in [0, n) across threads, rethrowing the first failure.
template <typename Body>
void parallel_for(int n, Body&& body) {
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(tdekws_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

BatchGradient batch_gradient_serial(const Network& net, const Dataset& data,
                                    std::span<const int> indices,
                                    const DropoutSampler* sampler,
                                    std::uint64_t stream_base, double lambda) {
  check_indices(data, indices);
  const double scale = 1.0 / static_cast<double>(indices.size());
  BatchGradient out;
  out.grads = Gradients::zeros_like(net.spec());
  for (int i : indices) {
    auto sg = sample_gradient(net, data.samples[i], sampler,
                              mix_seed(stream_base, i), lambda, scale);
    out.grads += sg.grads;
    out.loss += sg.loss;
    out.correct += sg.correct;
  }
  out.loss *= scale;
  return out;
}

BatchGradient batch_gradient(const Network& net, const Dataset& data,
                             std::span<const int> indices,
                             const DropoutSampler* sampler,
                             std::uint64_t stream_base, double lambda) {
  check_indices(data, indices);
  const int n = static_cast<int>(indices.size());
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<std::optional<SampleGradient>> parts(n);
  parallel_for(n, [&](int b) {
    const int i = indices[b];
    parts[b] = sample_gradient(net, data.samples[i], sampler,
                               mix_seed(stream_base, i), lambda, scale);
  });
  BatchGradient out;
  out.grads = Gradients::zeros_like(net.spec());
  for (auto& part : parts) {
    out.grads += part->grads;
    out.loss += part->loss;
    out.correct += part->correct;
  }
  out.loss *= scale;
  return out;
}

namespace {

struct SampleEval {
  int prediction = 0;
  double loss = 0.0;
  EventLog events;
};

SampleEval evaluate_one(const Network& net, const Sample& sample) {
  RunOptions opt;
  opt.record_rasters = false;
  RunResult run = net.run(sample.raster, opt);
  return {predict_class(run.logits),
          spike_count_cross_entropy(run.logits, sample.class_id), run.events};
}

Evaluation reduce(const Dataset& data, std::vector<SampleEval>& parts) {
  Evaluation ev;
  int correct = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    ev.predictions.push_back(parts[i].prediction);
    correct += parts[i].prediction == data.samples[i].class_id;
    ev.mean_loss += parts[i].loss;
    ev.events += parts[i].events;
  }
  if (!parts.empty()) {
    ev.accuracy = static_cast<double>(correct) / parts.size();
    ev.mean_loss /= parts.size();
  }
  return ev;
}

}  // namespace

Evaluation evaluate_serial(const Network& net, const Dataset& data) {
  std::vector<SampleEval> parts;
  parts.reserve(data.size());
  for (const auto& s : data.samples) parts.push_back(evaluate_one(net, s));
  return reduce(data, parts);
}

Evaluation evaluate(const Network& net, const Dataset& data) {
  std::vector<SampleEval> parts(data.size());
  parallel_for(static_cast<int>(data.size()),
               [&](int i) { parts[i] = evaluate_one(net, data.samples[i]); });
  return reduce(data, parts);
}

}  // namespace tdekws
