#include "reluinit/combinatorics.hpp"

#include <array>
#include <limits>
#include <numbers>
#include <string>

#include "reluinit/error.hpp"

namespace reluinit {

namespace {

// Bernoulli-number coefficients B_{2k} / (2k (2k-1)) of the Stirling series.
constexpr std::array<double, 8> kStirling = {
    1.0 / 12.0,          -1.0 / 360.0,     1.0 / 1260.0,  -1.0 / 1680.0,
    1.0 / 1188.0,        -691.0 / 360360.0, 1.0 / 156.0,  -3617.0 / 122400.0,
};

constexpr double kStirlingCutoff = 10.0;

double stirling_log_gamma(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  for (auto it = kStirling.rbegin(); it != kStirling.rend(); ++it) {
    series = series * inv2 + *it;
  }
  series *= inv;
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// exp() underflows to zero below this; such terms contribute nothing.
constexpr double kLogUnderflow = -745.0;

void require_positive(std::uint64_t n, const char* what) {
  if (n == 0) {
    throw domain_error(std::string(what) + ": argument must be >= 1");
  }
}

// log C(n,k) - n log 2 with the k-independent part evaluated once.
class LogHalfPmf {
 public:
  explicit LogHalfPmf(std::uint64_t n)
      : n_(static_cast<double>(n)),
        head_(log_gamma(n_ + 1.0) - n_ * std::numbers::ln2) {}
  double operator()(std::uint64_t k) const {
    const auto kd = static_cast<double>(k);
    return head_ - log_gamma(kd + 1.0) - log_gamma(n_ - kd + 1.0);
  }

 private:
  double n_;
  double head_;
};

ScaledValue finish(double expectation, std::uint64_t n, std::uint64_t threshold) {
  if (n > threshold) {
    return {expectation, static_cast<std::int64_t>(n)};
  }
  return {std::ldexp(expectation, static_cast<int>(n)), 0};
}

}  // namespace

double log_gamma(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw domain_error("log_gamma: argument must be finite and positive");
  }
  if (x == 1.0 || x == 2.0) {
    return 0.0;
  }
  if (x >= kStirlingCutoff) {
    return stirling_log_gamma(x);
  }
  // Gamma(x) = Gamma(x + m) / (x (x+1) ... (x+m-1))
  double shifted = x;
  double product = 1.0;
  while (shifted < kStirlingCutoff) {
    product *= shifted;
    shifted += 1.0;
  }
  return stirling_log_gamma(shifted) - std::log(product);
}

double gautschi_ratio(std::uint64_t i) {
  if (i == 0) {
    throw domain_error("gautschi_ratio: Gamma(0) is a pole, i must be >= 1");
  }
  const auto half = static_cast<double>(i) / 2.0;
  return std::numbers::sqrt2 * std::exp(log_gamma(half + 0.5) - log_gamma(half));
}

double log_binomial_half_pmf(std::uint64_t n, std::uint64_t k) {
  if (k > n) {
    return -std::numeric_limits<double>::infinity();
  }
  return LogHalfPmf(n)(k);
}

BinomialSumPair binomial_sums(std::uint64_t n, std::uint64_t overflow_threshold) {
  require_positive(n, "binomial_sums");
  const LogHalfPmf pmf(n);
  CompensatedSum a;
  CompensatedSum b;
  for (std::uint64_t k = 1; k <= n; ++k) {
    const double log_w = pmf(k);
    if (log_w < kLogUnderflow) {
      continue;
    }
    const double w = std::exp(log_w);
    const auto kd = static_cast<double>(k);
    a.add(w * std::sqrt(kd - 1.0));
    b.add(w * std::sqrt(kd + 1.0));
  }
  return {n, finish(a.value(), n, overflow_threshold), finish(b.value(), n, overflow_threshold)};
}

ScaledValue binomial_sum_a(std::uint64_t n, std::uint64_t overflow_threshold) {
  require_positive(n, "binomial_sum_a");
  return binomial_sums(n, overflow_threshold).a_n;
}

ScaledValue binomial_sum_b(std::uint64_t n, std::uint64_t overflow_threshold) {
  require_positive(n, "binomial_sum_b");
  return binomial_sums(n, overflow_threshold).b_n;
}

double norm_growth_factor(std::uint64_t n) {
  require_positive(n, "norm_growth_factor");
  const LogHalfPmf pmf(n);
  CompensatedSum m;
  for (std::uint64_t i = 1; i <= n; ++i) {
    const double log_w = pmf(i);
    if (log_w < kLogUnderflow) {
      continue;
    }
    m.add(std::exp(log_w) * gautschi_ratio(i));
  }
  return m.value();
}

BinomialBoundCheck check_binomial_bounds(std::uint64_t n, std::uint64_t overflow_threshold) {
  require_positive(n, "check_binomial_bounds");
  const auto sums = binomial_sums(n, overflow_threshold);
  const auto nd = static_cast<double>(n);
  const double inf = std::numeric_limits<double>::infinity();

  BinomialBoundCheck out;
  out.n = n;
  const double factor = 1.0 - 3.0 / (2.0 * nd) - 2.0 / (nd * nd);
  const double log2_a = sums.a_n.log2();
  const double log2_b = sums.b_n.log2();
  if (factor <= 0.0) {
    out.lower_vacuous = true;
    out.lower_slack_log2 = inf;
  } else {
    out.lower_slack_log2 = log2_a - (nd + 0.5 * std::log2(nd / 2.0) + std::log2(factor));
  }
  out.order_slack_log2 = (sums.a_n.mantissa == 0.0) ? inf : log2_b - log2_a;
  out.upper_slack_log2 = nd + 0.5 * std::log2(nd / 2.0 + 1.0) - log2_b;
  return out;
}

bool binomial_bounds_within(std::uint64_t n, double eps) {
  require_positive(n, "binomial_bounds_within");
  if (!(eps > 0.0 && eps < 1.0)) {
    throw domain_error("binomial_bounds_within: eps must lie in (0, 1)");
  }
  // Threshold 0 keeps both sums divided by 2^n.
  const auto sums = binomial_sums(n, 0);
  const double scale = std::sqrt(static_cast<double>(n) / 2.0);
  return (1.0 - eps) * scale <= sums.a_n.mantissa && sums.a_n.mantissa <= sums.b_n.mantissa &&
         sums.b_n.mantissa <= (1.0 + eps) * scale;
}

}  // namespace reluinit
