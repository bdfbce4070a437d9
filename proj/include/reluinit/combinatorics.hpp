#pragma once

#include <cmath>
#include <cstdint>

namespace reluinit {

/// Default n above which binomial sums are returned scaled by 2^-n.
inline constexpr std::uint64_t kOverflowThreshold = 900;

/// A non-negative real stored as mantissa * 2^exponent.
///
/// Sums such as A_n overflow a double long before the bound checks stop
/// being interesting, so large values keep their power-of-two scale apart.
struct ScaledValue {
  double mantissa = 0.0;
  std::int64_t exponent = 0;

  [[nodiscard]] bool is_scaled() const noexcept { return exponent != 0; }
  /// ldexp(mantissa, exponent); may overflow to +inf.
  [[nodiscard]] double value() const noexcept {
    return std::ldexp(mantissa, static_cast<int>(exponent));
  }
  /// log2 of the represented value; -inf for zero.
  [[nodiscard]] double log2() const noexcept {
    return std::log2(mantissa) + static_cast<double>(exponent);
  }
};

/// The pair (A_n, B_n) of binomial-weighted square-root sums.
struct BinomialSumPair {
  std::uint64_t n = 0;
  ScaledValue a_n;
  ScaledValue b_n;
};

/// ln Gamma(x) for real x > 0.
///
/// Stirling series for x >= 10, upward recurrence below. Relative error is
/// below 1e-12 on [0.5, 1e6] away from the roots at x = 1 and x = 2, where
/// the result is exact.
double log_gamma(double x);

/// r_i = sqrt(2) Gamma((i+1)/2) / Gamma(i/2), satisfying
/// sqrt(i-1) <= r_i <= sqrt(i+1).
double gautschi_ratio(std::uint64_t i);

/// log C(n, k) - n log 2, i.e. the log of the Binomial(n, 1/2) mass at k.
double log_binomial_half_pmf(std::uint64_t n, std::uint64_t k);

/// A_n = sum_{k=1}^{n} C(n,k) sqrt(k-1).
ScaledValue binomial_sum_a(std::uint64_t n,
                           std::uint64_t overflow_threshold = kOverflowThreshold);

/// B_n = sum_{k=1}^{n} C(n,k) sqrt(k+1).
ScaledValue binomial_sum_b(std::uint64_t n,
                           std::uint64_t overflow_threshold = kOverflowThreshold);

/// Both sums in one pass over k.
BinomialSumPair binomial_sums(std::uint64_t n,
                              std::uint64_t overflow_threshold = kOverflowThreshold);

/// M_n = sum_{i=1}^{n} C(n,i) 2^-n r_i: the expected-norm growth factor of a
/// ReLU layer of width n.
double norm_growth_factor(std::uint64_t n);

/// Outcome of checking the two-sided binomial-sum bounds at a given n.
struct BinomialBoundCheck {
  std::uint64_t n = 0;
  /// log2(A_n) - log2(2^n sqrt(n/2) (1 - 3/(2n) - 2/n^2)); +inf if the lower
  /// bound is non-positive (vacuous).
  double lower_slack_log2 = 0.0;
  /// log2(B_n) - log2(A_n); -inf-safe, >= 0 when A_n <= B_n.
  double order_slack_log2 = 0.0;
  /// log2(2^n sqrt(n/2+1)) - log2(B_n).
  double upper_slack_log2 = 0.0;
  bool lower_vacuous = false;

  [[nodiscard]] bool holds() const noexcept {
    return lower_slack_log2 >= 0.0 && order_slack_log2 >= 0.0 &&
           upper_slack_log2 >= 0.0;
  }
};

/// Checks 2^n sqrt(n/2)(1 - 3/(2n) - 2/n^2) <= A_n <= B_n <= 2^n sqrt(n/2+1)
/// in log2 scale, valid for any n.
BinomialBoundCheck check_binomial_bounds(std::uint64_t n,
                                         std::uint64_t overflow_threshold = kOverflowThreshold);

/// The eps-form (1-eps) 2^n sqrt(n/2) <= A_n <= B_n <= (1+eps) 2^n sqrt(n/2).
/// Holds only for n beyond an unspecified multiple of 1/eps, so the caller
/// picks n.
bool binomial_bounds_within(std::uint64_t n, double eps);

}  // namespace reluinit
