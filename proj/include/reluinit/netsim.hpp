#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "reluinit/moments.hpp"

namespace reluinit {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// One draw of all weights W_1..W_L; W_l is n_{l-1} x n_l.
struct WeightSample {
  std::uint64_t seed = 0;
  std::vector<Matrix> layers;  // layers[l-1] holds W_l

  [[nodiscard]] std::size_t depth() const noexcept { return layers.size(); }
  [[nodiscard]] const Matrix& w(std::size_t l) const { return layers.at(l - 1); }
  Matrix& w(std::size_t l) { return layers.at(l - 1); }

  friend bool operator==(const WeightSample&, const WeightSample&) = default;
};

/// Entry (i, j) (0-based) of W_l for the given seed. Every sampler in this
/// module returns exactly this value for that entry.
double weight_entry(const InitSchedule& sched, std::uint64_t seed, std::size_t l, std::size_t i,
                    std::size_t j);

WeightSample sample_weights(const NetworkShape& shape, const InitSchedule& sched,
                            std::uint64_t seed);

/// The listed columns (0-based) of W_l, as an n_{l-1} x cols.size() matrix.
Matrix sample_columns(const NetworkShape& shape, const InitSchedule& sched, std::uint64_t seed,
                      std::size_t l, std::span<const std::size_t> cols);

inline constexpr double relu(double v) noexcept { return v > 0.0 ? v : 0.0; }
/// sigma'(v), with sigma'(0) = 0.
inline constexpr double relu_derivative(double v) noexcept { return v > 0.0 ? 1.0 : 0.0; }

/// Pre-activations g_l and activations f_l of one forward pass.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;   // pre[l-1] = g_l, l in [1, L]
  std::vector<std::vector<double>> post;  // post[l] = f_l, l in [0, L]; post[0] = x

  [[nodiscard]] std::size_t depth() const noexcept { return pre.size(); }
  [[nodiscard]] const std::vector<double>& g(std::size_t l) const { return pre.at(l - 1); }
  [[nodiscard]] const std::vector<double>& f(std::size_t l) const { return post.at(l); }
  [[nodiscard]] double output() const { return post.back().front(); }
};

/// g = W^T f.
std::vector<double> affine(const Matrix& w, std::span<const double> f);

/// f_l = relu(W_l^T f_{l-1}) for l < L, f_L = W_L^T f_{L-1}.
ForwardTrace forward(const WeightSample& weights, std::span<const double> x);

/// Re-runs layers start..L of a trace from the stored pre-activation g_start.
/// Used to perturb a single pre-activation and observe the output.
double output_from_preactivation(const WeightSample& weights, std::size_t start,
                                 std::span<const double> g_start);

/// Activation masks Sigma_l = diag(sigma'(g_l)) for l in [1, L-1] (index l-1).
std::vector<std::vector<double>> activation_masks(const ForwardTrace& trace);

/// delta_{k,p} = d f_L / d g_{k,p}, for 1-based k in [1, L-1] and p in [1, n_k].
///
/// Propagates the row vector v_r = v_{r-1}^T W_r Sigma_r starting from row p
/// of W_{k+1}; no Jacobian is formed.
double backward_delta(const WeightSample& weights, const ForwardTrace& trace, std::size_t k,
                      std::size_t p);

/// All delta_{k,p} from one reverse sweep; result[k-1][p-1].
std::vector<std::vector<double>> output_gradient_full(const WeightSample& weights,
                                                      const ForwardTrace& trace);

/// Activations up to hidden layer `last`, drawing only the columns of W_last
/// that feed the listed 1-based neurons.
///
/// result[k-1] is the full f_k for k < last; result[last-1][idx] is
/// f_{last, neurons[idx]}. Values are bitwise identical to forward() on
/// sample_weights().
std::vector<std::vector<double>> forward_probed(const NetworkShape& shape,
                                                const InitSchedule& sched, std::uint64_t seed,
                                                std::span<const double> x, std::size_t last,
                                                std::span<const std::size_t> neurons);

}  // namespace reluinit
