#include "reluinit/netsim.hpp"

#include <limits>
#include <string>

#include "reluinit/error.hpp"
#include "reluinit/rng.hpp"

namespace reluinit {

namespace {

constexpr std::size_t kMaxCounterIndex = std::numeric_limits<std::uint32_t>::max();

// Entries (i, 2m) and (i, 2m+1) of W_l share the Philox block (m, i, l, 0).
Philox4x32::Counter entry_counter(std::size_t l, std::size_t i, std::size_t j) {
  return {static_cast<std::uint32_t>(j >> 1), static_cast<std::uint32_t>(i),
          static_cast<std::uint32_t>(l), 0u};
}

void check_counter_range(std::size_t rows, std::size_t cols) {
  if (rows > kMaxCounterIndex || cols > kMaxCounterIndex) {
    throw domain_error("layer dimension exceeds the 32-bit sampling counter");
  }
}

Matrix sample_layer(const InitSchedule& sched, std::uint64_t seed, std::size_t l,
                    std::size_t rows, std::size_t cols) {
  check_counter_range(rows, cols);
  const Philox4x32 gen(seed);
  const double beta = sched.beta(l);
  Matrix w(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; j += 2) {
      const auto [z0, z1] = normal_pair(gen, entry_counter(l, i, j));
      w(i, j) = beta * z0;
      if (j + 1 < cols) {
        w(i, j + 1) = beta * z1;
      }
    }
  }
  return w;
}

void apply_relu(std::vector<double>& v) {
  for (double& e : v) {
    e = relu(e);
  }
}

}  // namespace

double weight_entry(const InitSchedule& sched, std::uint64_t seed, std::size_t l, std::size_t i,
                    std::size_t j) {
  const Philox4x32 gen(seed);
  const auto [z0, z1] = normal_pair(gen, entry_counter(l, i, j));
  return sched.beta(l) * ((j & 1u) == 0 ? z0 : z1);
}

WeightSample sample_weights(const NetworkShape& shape, const InitSchedule& sched,
                            std::uint64_t seed) {
  require_compatible(shape, sched);
  WeightSample out;
  out.seed = seed;
  out.layers.reserve(shape.depth());
  for (std::size_t l = 1; l <= shape.depth(); ++l) {
    out.layers.push_back(sample_layer(sched, seed, l, shape.width(l - 1), shape.width(l)));
  }
  return out;
}

Matrix sample_columns(const NetworkShape& shape, const InitSchedule& sched, std::uint64_t seed,
                      std::size_t l, std::span<const std::size_t> cols) {
  require_compatible(shape, sched);
  if (l < 1 || l > shape.depth()) {
    throw domain_error("sample_columns: layer out of range");
  }
  const std::size_t rows = shape.width(l - 1);
  check_counter_range(rows, shape.width(l));
  const Philox4x32 gen(seed);
  const double beta = sched.beta(l);
  Matrix w(rows, cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const std::size_t j = cols[c];
    if (j >= shape.width(l)) {
      throw domain_error("sample_columns: column out of range");
    }
    for (std::size_t i = 0; i < rows; ++i) {
      const auto [z0, z1] = normal_pair(gen, entry_counter(l, i, j));
      w(i, c) = beta * ((j & 1u) == 0 ? z0 : z1);
    }
  }
  return w;
}

std::vector<double> affine(const Matrix& w, std::span<const double> f) {
  if (f.size() != w.rows) {
    throw domain_error("affine: input has length " + std::to_string(f.size()) + ", expected " +
                       std::to_string(w.rows));
  }
  std::vector<double> g(w.cols, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double fi = f[i];
    const auto row = w.row(i);
    for (std::size_t j = 0; j < w.cols; ++j) {
      g[j] += row[j] * fi;
    }
  }
  return g;
}

ForwardTrace forward(const WeightSample& weights, std::span<const double> x) {
  const std::size_t depth = weights.depth();
  if (depth == 0 || x.size() != weights.w(1).rows) {
    throw domain_error("forward: input dimension does not match W_1");
  }
  ForwardTrace trace;
  trace.post.emplace_back(x.begin(), x.end());
  for (std::size_t l = 1; l <= depth; ++l) {
    auto g = affine(weights.w(l), trace.post.back());
    auto f = g;
    if (l < depth) {
      apply_relu(f);
    }
    trace.pre.push_back(std::move(g));
    trace.post.push_back(std::move(f));
  }
  return trace;
}

double output_from_preactivation(const WeightSample& weights, std::size_t start,
                                 std::span<const double> g_start) {
  const std::size_t depth = weights.depth();
  if (start < 1 || start >= depth) {
    throw domain_error("output_from_preactivation: start must be a hidden layer");
  }
  std::vector<double> f(g_start.begin(), g_start.end());
  apply_relu(f);
  for (std::size_t l = start + 1; l <= depth; ++l) {
    f = affine(weights.w(l), f);
    if (l < depth) {
      apply_relu(f);
    }
  }
  return f.front();
}

std::vector<std::vector<double>> activation_masks(const ForwardTrace& trace) {
  std::vector<std::vector<double>> masks;
  for (std::size_t l = 1; l < trace.depth(); ++l) {
    std::vector<double> m;
    m.reserve(trace.g(l).size());
    for (double g : trace.g(l)) {
      m.push_back(relu_derivative(g));
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

double backward_delta(const WeightSample& weights, const ForwardTrace& trace, std::size_t k,
                      std::size_t p) {
  const std::size_t depth = weights.depth();
  if (k < 1 || k >= depth) {
    throw domain_error("backward_delta: layer k=" + std::to_string(k) + " is not hidden");
  }
  if (p < 1 || p > trace.g(k).size()) {
    throw domain_error("backward_delta: neuron p=" + std::to_string(p) + " out of range");
  }
  const double gate = relu_derivative(trace.g(k)[p - 1]);
  const auto row = weights.w(k + 1).row(p - 1);
  std::vector<double> v(row.begin(), row.end());
  for (double& e : v) {
    e *= gate;
  }
  for (std::size_t l = k + 1; l < depth; ++l) {
    const auto& g = trace.g(l);
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] *= relu_derivative(g[j]);
    }
    v = affine(weights.w(l + 1), v);
  }
  return v.front();
}

std::vector<std::vector<double>> output_gradient_full(const WeightSample& weights,
                                                      const ForwardTrace& trace) {
  const std::size_t depth = weights.depth();
  std::vector<std::vector<double>> deltas(depth - 1);
  // Upstream gradient d f_L / d f_k, starting from the linear output layer.
  std::vector<double> upstream(weights.w(depth).rows);
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    upstream[i] = weights.w(depth)(i, 0);
  }
  for (std::size_t k = depth - 1; k >= 1; --k) {
    const auto& g = trace.g(k);
    auto& d = deltas[k - 1];
    d.resize(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) {
      d[p] = relu_derivative(g[p]) * upstream[p];
    }
    if (k == 1) {
      break;
    }
    const Matrix& w = weights.w(k);
    std::vector<double> next(w.rows, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
      const auto r = w.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < w.cols; ++j) {
        acc += r[j] * d[j];
      }
      next[i] = acc;
    }
    upstream = std::move(next);
  }
  return deltas;
}

std::vector<std::vector<double>> forward_probed(const NetworkShape& shape,
                                                const InitSchedule& sched, std::uint64_t seed,
                                                std::span<const double> x, std::size_t last,
                                                std::span<const std::size_t> neurons) {
  require_compatible(shape, sched);
  if (last < 1 || last >= shape.depth()) {
    throw domain_error("forward_probed: last layer must be hidden");
  }
  if (x.size() != shape.input_dim()) {
    throw domain_error("forward_probed: input dimension mismatch");
  }
  std::vector<std::size_t> cols;
  cols.reserve(neurons.size());
  for (std::size_t p : neurons) {
    if (p < 1 || p > shape.width(last)) {
      throw domain_error("forward_probed: neuron out of range");
    }
    cols.push_back(p - 1);
  }
  std::vector<std::vector<double>> out(last);
  std::vector<double> f(x.begin(), x.end());
  for (std::size_t l = 1; l < last; ++l) {
    f = affine(sample_layer(sched, seed, l, shape.width(l - 1), shape.width(l)), f);
    apply_relu(f);
    out[l - 1] = f;
  }
  auto top = affine(sample_columns(shape, sched, seed, last, cols), f);
  apply_relu(top);
  out[last - 1] = std::move(top);
  return out;
}

}  // namespace reluinit
