#include "reluinit/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "reluinit/combinatorics.hpp"
#include "reluinit/error.hpp"

namespace reluinit {

namespace {

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_hidden_layer(const NetworkShape& shape, std::size_t k, const char* what) {
  if (k < 1 || k + 1 > shape.depth()) {
    throw domain_error(std::string(what) + ": layer k=" + std::to_string(k) +
                       " outside [1, " + std::to_string(shape.depth() - 1) + "]");
  }
}

void require_norm(double x_norm, const char* what) {
  if (!std::isfinite(x_norm) || x_norm <= 0.0) {
    throw domain_error(std::string(what) + ": input norm must be finite and positive");
  }
}

void require_eps(double eps, const char* what) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw domain_error(std::string(what) + ": eps must lie in (0, 1)");
  }
}

double log_half_width(const NetworkShape& shape, std::size_t l) {
  return std::log(static_cast<double>(shape.width(l)) / 2.0);
}

// ln of (|x|^2/2) prod_{l<k}(n_l/2) prod_{l<=k} beta_l^2, without argument checks.
double log_second_moment(const NetworkShape& shape, const InitSchedule& sched, double x_norm,
                         std::size_t k) {
  double acc = 2.0 * std::log(x_norm) - std::numbers::ln2;
  for (std::size_t l = 1; l < k; ++l) {
    acc += log_half_width(shape, l);
  }
  for (std::size_t l = 1; l <= k; ++l) {
    acc += 2.0 * std::log(sched.beta(l));
  }
  return acc;
}

double log_backward_variance(const NetworkShape& shape, const InitSchedule& sched,
                             std::size_t k) {
  const std::size_t depth = shape.depth();
  double acc = -std::numbers::ln2;
  for (std::size_t l = k + 1; l < depth; ++l) {
    acc += log_half_width(shape, l);
  }
  for (std::size_t l = k + 1; l <= depth; ++l) {
    acc += 2.0 * std::log(sched.beta(l));
  }
  return acc;
}

double log_s_k_unchecked(const NetworkShape& shape, const InitSchedule& sched, double x_norm,
                         std::size_t k) {
  double acc = std::log(x_norm) - kLogSqrt2Pi;
  for (std::size_t l = 1; l < k; ++l) {
    acc += 0.5 * log_half_width(shape, l);
  }
  for (std::size_t l = 1; l <= k; ++l) {
    acc += std::log(sched.beta(l));
  }
  return acc;
}

bool log_equal(double a, double b, double rel_tol) {
  return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

NetworkShape::NetworkShape(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 3) {
    throw domain_error("NetworkShape: need at least one hidden layer (L >= 2)");
  }
  if (std::find(widths_.begin(), widths_.end(), std::size_t{0}) != widths_.end()) {
    throw domain_error("NetworkShape: every width must be >= 1");
  }
  if (widths_.back() != 1) {
    throw domain_error("NetworkShape: the output width n_L must be 1");
  }
}

InitSchedule::InitSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) {
    throw domain_error("InitSchedule: empty schedule");
  }
  for (double b : betas_) {
    if (!std::isfinite(b) || b <= 0.0) {
      throw domain_error("InitSchedule: every beta must be finite and positive");
    }
  }
}

InitSchedule InitSchedule::fan_in(const NetworkShape& shape) {
  std::vector<double> betas;
  for (std::size_t k = 1; k <= shape.depth(); ++k) {
    betas.push_back(std::sqrt(2.0 / static_cast<double>(shape.width(k - 1))));
  }
  return InitSchedule(std::move(betas));
}

InitSchedule InitSchedule::fan_out(const NetworkShape& shape) {
  std::vector<double> betas;
  for (std::size_t k = 1; k <= shape.depth(); ++k) {
    betas.push_back(std::sqrt(2.0 / static_cast<double>(shape.width(k))));
  }
  return InitSchedule(std::move(betas));
}

double InitSchedule::beta(std::size_t l) const {
  if (l < 1 || l > betas_.size()) {
    throw domain_error("InitSchedule: layer index " + std::to_string(l) + " out of range");
  }
  return betas_[l - 1];
}

InitSchedule InitSchedule::scaled(std::size_t l, double factor) const {
  auto betas = betas_;
  betas.at(l - 1) *= factor;
  return InitSchedule(std::move(betas));
}

void require_compatible(const NetworkShape& shape, const InitSchedule& sched) {
  if (sched.size() != shape.depth()) {
    throw domain_error("schedule has " + std::to_string(sched.size()) +
                       " entries but the network has " + std::to_string(shape.depth()) +
                       " layers");
  }
}

double log_s_k(const NetworkShape& shape, const InitSchedule& sched, double x_norm,
               std::size_t k) {
  require_compatible(shape, sched);
  require_hidden_layer(shape, k, "s_k");
  require_norm(x_norm, "s_k");
  return log_s_k_unchecked(shape, sched, x_norm, k);
}

double s_k(const NetworkShape& shape, const InitSchedule& sched, double x_norm, std::size_t k) {
  return std::exp(log_s_k(shape, sched, x_norm, k));
}

double first_moment_exact(const NetworkShape& shape, const InitSchedule& sched, double x_norm,
                          std::size_t k) {
  require_compatible(shape, sched);
  require_hidden_layer(shape, k, "first_moment_exact");
  require_norm(x_norm, "first_moment_exact");
  // Widths repeat often; M_n costs O(n) per evaluation.
  std::map<std::size_t, double> log_growth;
  double acc = std::log(x_norm) - kLogSqrt2Pi + std::log(sched.beta(k));
  for (std::size_t l = 1; l < k; ++l) {
    const std::size_t n = shape.width(l);
    auto it = log_growth.find(n);
    if (it == log_growth.end()) {
      it = log_growth.emplace(n, std::log(norm_growth_factor(n))).first;
    }
    acc += std::log(sched.beta(l)) + it->second;
  }
  return std::exp(acc);
}

Interval first_moment_bounds(const NetworkShape& shape, const InitSchedule& sched,
                             double x_norm, std::size_t k, double eps) {
  require_eps(eps, "first_moment_bounds");
  const double s = s_k(shape, sched, x_norm, k);
  return {(1.0 - eps) * s, (1.0 + eps) * s};
}

double second_moment(const NetworkShape& shape, const InitSchedule& sched, double x_norm,
                     std::size_t k) {
  require_compatible(shape, sched);
  require_hidden_layer(shape, k, "second_moment");
  require_norm(x_norm, "second_moment");
  return std::exp(log_second_moment(shape, sched, x_norm, k));
}

VarianceBounds variance_bounds(const NetworkShape& shape, const InitSchedule& sched,
                               double x_norm, std::size_t k, double eps) {
  require_eps(eps, "variance_bounds");
  const double s = s_k(shape, sched, x_norm, k);
  const double s2 = s * s;
  const double lo_factor = std::numbers::pi - (1.0 + eps) * (1.0 + eps);
  const double hi_factor = std::numbers::pi - (1.0 - eps) * (1.0 - eps);
  return {lo_factor * s2, hi_factor * s2, lo_factor < 0.0};
}

double backward_variance(const NetworkShape& shape, const InitSchedule& sched, std::size_t k) {
  require_compatible(shape, sched);
  require_hidden_layer(shape, k, "backward_variance");
  return std::exp(log_backward_variance(shape, sched, k));
}

bool width_condition(const NetworkShape& shape, std::size_t k, double eps, double c) {
  if (k <= 1) {
    return true;
  }
  std::size_t min_width = std::numeric_limits<std::size_t>::max();
  for (std::size_t l = 1; l < k && l <= shape.depth(); ++l) {
    min_width = std::min(min_width, shape.width(l));
  }
  return static_cast<double>(min_width) >=
         c * static_cast<double>(k) / std::log1p(eps);
}

std::vector<LayerCharacterization> schedule_characterization(const NetworkShape& shape,
                                                             const InitSchedule& sched,
                                                             double rel_tol) {
  require_compatible(shape, sched);
  std::vector<LayerCharacterization> out;
  for (std::size_t k = 2; k + 1 <= shape.depth(); ++k) {
    const double beta2 = sched.beta(k) * sched.beta(k);
    const auto n_prev = static_cast<double>(shape.width(k - 1));
    const auto n_here = static_cast<double>(shape.width(k));
    LayerCharacterization c;
    c.k = k;
    c.beta_is_fan_in = std::abs(beta2 * n_prev / 2.0 - 1.0) <= rel_tol;
    c.beta_is_fan_out = std::abs(beta2 * n_here / 2.0 - 1.0) <= rel_tol;
    c.forward_preserved = log_equal(log_s_k_unchecked(shape, sched, 1.0, k),
                                    log_s_k_unchecked(shape, sched, 1.0, k - 1), rel_tol);
    c.backward_preserved = log_equal(log_backward_variance(shape, sched, k),
                                     log_backward_variance(shape, sched, k - 1), rel_tol);
    out.push_back(c);
  }
  return out;
}

MomentPrediction predict_layer(const NetworkShape& shape, const InitSchedule& sched,
                               double x_norm, std::size_t k, double eps,
                               double width_constant) {
  MomentPrediction p;
  p.k = k;
  p.s_k = s_k(shape, sched, x_norm, k);
  p.first_moment_exact = first_moment_exact(shape, sched, x_norm, k);
  const auto fb = first_moment_bounds(shape, sched, x_norm, k, eps);
  p.first_moment_lo = fb.lo;
  p.first_moment_hi = fb.hi;
  p.second_moment = second_moment(shape, sched, x_norm, k);
  const auto vb = variance_bounds(shape, sched, x_norm, k, eps);
  p.variance_lo = vb.lo;
  p.variance_hi = vb.hi;
  p.variance_lower_vacuous = vb.lower_vacuous;
  p.backward_variance = backward_variance(shape, sched, k);
  p.width_condition = width_condition(shape, k, eps, width_constant);
  return p;
}

std::vector<MomentPrediction> predict_all(const NetworkShape& shape, const InitSchedule& sched,
                                          double x_norm, double eps, double width_constant) {
  std::vector<MomentPrediction> out;
  for (std::size_t k = 1; k + 1 <= shape.depth(); ++k) {
    out.push_back(predict_layer(shape, sched, x_norm, k, eps, width_constant));
  }
  return out;
}

}  // namespace reluinit
