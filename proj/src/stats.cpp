#include "reluinit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reluinit/error.hpp"

namespace reluinit {

void StreamingStats::update(double value) {
  if (!std::isfinite(value)) {
    throw domain_error("StreamingStats::update: non-finite observation");
  }
  const auto n1 = static_cast<double>(count_);
  ++count_;
  const auto n = static_cast<double>(count_);
  const double delta = value - mean_;
  const double delta_n = delta / n;
  const double delta_n2 = delta_n * delta_n;
  const double term1 = delta * delta_n * n1;
  mean_ += delta_n;
  m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ - 4.0 * delta_n * m3_;
  m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
  m2_ += term1;
}

void StreamingStats::merge(const StreamingStats& other) noexcept {
  if (other.count_ == 0) {
    return;
  }
  if (count_ == 0) {
    *this = other;
    return;
  }
  const auto na = static_cast<double>(count_);
  const auto nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  const double d2 = delta * delta;
  const double d3 = d2 * delta;
  const double d4 = d2 * d2;

  const double m2 = m2_ + other.m2_ + d2 * na * nb / n;
  const double m3 = m3_ + other.m3_ + d3 * na * nb * (na - nb) / (n * n) +
                    3.0 * delta * (na * other.m2_ - nb * m2_) / n;
  const double m4 = m4_ + other.m4_ + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                    6.0 * d2 * (na * na * other.m2_ + nb * nb * m2_) / (n * n) +
                    4.0 * delta * (na * other.m3_ - nb * m3_) / n;

  mean_ += delta * nb / n;
  m2_ = m2;
  m3_ = m3;
  m4_ = m4;
  count_ += other.count_;
}

double StreamingStats::variance() const noexcept {
  if (count_ < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return m2_ / static_cast<double>(count_ - 1);
}

namespace {

void require_count(const StreamingStats& s, const char* what) {
  if (s.count() < kMinTestCount) {
    throw insufficient_data_error(std::string(what) + ": need at least " +
                                  std::to_string(kMinTestCount) + " samples, have " +
                                  std::to_string(s.count()));
  }
}

// z of estimate against target given SE; a zero SE is an exact comparison.
double z_of(double estimated, double target, double se) {
  const double diff = estimated - target;
  if (se > 0.0) {
    return diff / se;
  }
  if (diff == 0.0) {
    return 0.0;
  }
  return std::copysign(std::numeric_limits<double>::infinity(), diff);
}

Verdict make_verdict(const StreamingStats& s, double predicted, double estimated, double se,
                     double z_max) {
  Verdict v;
  v.predicted = predicted;
  v.estimated = estimated;
  v.std_error = se;
  v.z_score = z_of(estimated, predicted, se);
  v.pass = std::abs(v.z_score) <= z_max;
  v.n_trials = s.count();
  return v;
}

}  // namespace

double mean_std_error(const StreamingStats& s) {
  return std::sqrt(s.variance() / static_cast<double>(s.count()));
}

double variance_std_error(const StreamingStats& s) {
  const auto n = static_cast<double>(s.count());
  const double var = s.variance();
  const double inner = s.m4() / n - ((n - 3.0) / (n - 1.0)) * var * var;
  return std::sqrt(std::max(inner, 0.0) / n);
}

Verdict mean_test(const StreamingStats& s, double predicted, double z_max) {
  require_count(s, "mean_test");
  return make_verdict(s, predicted, s.mean(), mean_std_error(s), z_max);
}

Verdict variance_test(const StreamingStats& s, double predicted, double z_max) {
  require_count(s, "variance_test");
  return make_verdict(s, predicted, s.variance(), variance_std_error(s), z_max);
}

Verdict interval_test(const StreamingStats& s, double lo, double hi, double z_max,
                      Quantity quantity) {
  require_count(s, "interval_test");
  if (lo > hi) {
    throw domain_error("interval_test: lo > hi");
  }
  const bool is_mean = quantity == Quantity::mean;
  const double estimated = is_mean ? s.mean() : s.variance();
  const double se = is_mean ? mean_std_error(s) : variance_std_error(s);
  Verdict v = make_verdict(s, std::clamp(estimated, lo, hi), estimated, se, z_max);
  v.is_interval = true;
  v.lo = lo;
  v.hi = hi;
  return v;
}

Verdict cross_neuron_symmetry_test(std::span<const StreamingStats> per_neuron, double z_max) {
  if (per_neuron.size() < 2) {
    throw domain_error("cross_neuron_symmetry_test: need at least two neurons");
  }
  for (const auto& s : per_neuron) {
    require_count(s, "cross_neuron_symmetry_test");
  }
  Verdict worst;
  worst.pass = true;
  worst.n_trials = per_neuron.front().count();
  double worst_abs_z = -1.0;
  for (std::size_t a = 0; a < per_neuron.size(); ++a) {
    for (std::size_t b = a + 1; b < per_neuron.size(); ++b) {
      const double sa = variance_std_error(per_neuron[a]);
      const double sb = variance_std_error(per_neuron[b]);
      const double se = std::sqrt(sa * sa + sb * sb);
      const double diff = per_neuron[a].variance() - per_neuron[b].variance();
      const double z = z_of(diff, 0.0, se);
      if (std::abs(z) > worst_abs_z) {
        worst_abs_z = std::abs(z);
        worst.estimated = diff;
        worst.std_error = se;
        worst.z_score = z;
      }
    }
  }
  worst.predicted = 0.0;
  worst.pass = std::abs(worst.z_score) <= z_max;
  return worst;
}

}  // namespace reluinit
