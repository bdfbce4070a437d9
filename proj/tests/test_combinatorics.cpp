#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "reluinit/combinatorics.hpp"
#include "reluinit/error.hpp"

using namespace reluinit;

namespace {

// Exact binomial coefficients by Pascal's rule; exact in uint64 for n <= 60.
std::vector<std::vector<std::uint64_t>> pascal(std::size_t n_max) {
  std::vector<std::vector<std::uint64_t>> c(n_max + 1);
  for (std::size_t n = 0; n <= n_max; ++n) {
    c[n].assign(n + 1, 1);
    for (std::size_t k = 1; k < n; ++k) {
      c[n][k] = c[n - 1][k - 1] + c[n - 1][k];
    }
  }
  return c;
}

long double enumerate_sum(const std::vector<std::uint64_t>& row, int offset) {
  long double acc = 0.0L;
  for (std::size_t k = 1; k < row.size(); ++k) {
    acc += static_cast<long double>(row[k]) *
           std::sqrt(static_cast<long double>(k) + static_cast<long double>(offset));
  }
  return acc;
}

// ln((n-1)!) by summing logs of integers in extended precision.
long double log_factorial_minus_one(int n) {
  long double acc = 0.0L;
  for (int k = 2; k < n; ++k) {
    acc += std::log(static_cast<long double>(k));
  }
  return acc;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace

TEST_CASE("log_gamma matches the stated values") {
  CHECK(log_gamma(1.0) == 0.0);
  CHECK(log_gamma(2.0) == 0.0);
  CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(std::numbers::pi)).epsilon(1e-14));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5723649429247001).epsilon(1e-13));
  // ln(9!) = ln 362880
  CHECK(log_gamma(10.0) == doctest::Approx(std::log(362880.0)).epsilon(1e-14));
  CHECK(log_gamma(10.0) == doctest::Approx(12.801827480081469).epsilon(1e-13));
}

TEST_CASE("log_gamma agrees with integer factorials and half-integer closed forms") {
  for (int n = 3; n <= 170; ++n) {
    const auto want = static_cast<double>(log_factorial_minus_one(n));
    CHECK(rel_err(log_gamma(n), want) < 1e-13);
  }
  // Gamma(n + 1/2) = (2n)! sqrt(pi) / (4^n n!)
  for (int n = 1; n <= 80; ++n) {
    long double acc = 0.5L * std::log(std::numbers::pi_v<long double>);
    for (int k = n + 1; k <= 2 * n; ++k) {
      acc += std::log(static_cast<long double>(k));
    }
    acc -= static_cast<long double>(n) * std::log(4.0L);
    CHECK(rel_err(log_gamma(n + 0.5), static_cast<double>(acc)) < 1e-12);
  }
}

TEST_CASE("log_gamma relative accuracy on [0.5, 1e6] against the C library") {
  std::mt19937_64 gen(1234);
  std::uniform_real_distribution<double> log_u(std::log(0.5), std::log(1e6));
  double worst = 0.0;
  for (int s = 0; s < 20000; ++s) {
    const double x = std::exp(log_u(gen));
    const double want = std::lgamma(x);
    // Relative error is ill-conditioned at the roots x = 1 and x = 2.
    if (std::abs(want) < 1e-2) {
      CHECK(std::abs(log_gamma(x) - want) < 1e-14);
      continue;
    }
    worst = std::max(worst, rel_err(log_gamma(x), want));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("log_gamma domain errors") {
  CHECK_THROWS_AS(log_gamma(0.0), domain_error);
  CHECK_THROWS_AS(log_gamma(-1.5), domain_error);
  CHECK_THROWS_AS(log_gamma(std::numeric_limits<double>::infinity()), domain_error);
  CHECK_THROWS_AS(log_gamma(std::numeric_limits<double>::quiet_NaN()), domain_error);
}

TEST_CASE("gautschi_ratio closed forms and sandwich") {
  CHECK(gautschi_ratio(1) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
  CHECK(gautschi_ratio(1) == doctest::Approx(0.7978845608).epsilon(1e-10));
  CHECK(gautschi_ratio(2) == doctest::Approx(std::sqrt(std::numbers::pi / 2.0)).epsilon(1e-14));
  CHECK(gautschi_ratio(2) == doctest::Approx(1.2533141373).epsilon(1e-10));
  CHECK(gautschi_ratio(5) >= 2.0);
  CHECK(gautschi_ratio(5) <= std::sqrt(6.0));
  // Against tgamma directly while it does not overflow.
  for (std::uint64_t i = 1; i <= 300; ++i) {
    const double want = std::numbers::sqrt2 * std::tgamma((i + 1) / 2.0) / std::tgamma(i / 2.0);
    CHECK(rel_err(gautschi_ratio(i), want) < 1e-12);
  }
  for (std::uint64_t i = 1; i <= 10000; ++i) {
    const double r = gautschi_ratio(i);
    const auto id = static_cast<double>(i);
    REQUIRE(r > 0.0);
    REQUIRE(std::sqrt(id - 1.0) <= r);
    REQUIRE(r <= std::sqrt(id + 1.0));
  }
  CHECK_THROWS_AS(gautschi_ratio(0), domain_error);
}

TEST_CASE("binomial sums match direct enumeration") {
  CHECK(binomial_sum_a(1).value() == 0.0);
  CHECK(binomial_sum_a(2).value() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(binomial_sum_a(3).value() == doctest::Approx(3.0 + std::sqrt(2.0)).epsilon(1e-14));
  CHECK(binomial_sum_b(1).value() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(binomial_sum_b(2).value() ==
        doctest::Approx(2.0 * std::sqrt(2.0) + std::sqrt(3.0)).epsilon(1e-14));
  const double b4 = 4.0 * std::sqrt(2.0) + 6.0 * std::sqrt(3.0) + 4.0 * 2.0 + std::sqrt(5.0);
  CHECK(binomial_sum_b(4).value() == doctest::Approx(b4).epsilon(1e-14));
  CHECK(binomial_sum_b(4).value() == doctest::Approx(26.2852).epsilon(1e-5));

  const auto c = pascal(25);
  for (std::uint64_t n = 1; n <= 25; ++n) {
    const auto a = binomial_sum_a(n);
    const auto b = binomial_sum_b(n);
    CHECK_FALSE(a.is_scaled());
    const auto want_a = static_cast<double>(enumerate_sum(c[n], -1));
    const auto want_b = static_cast<double>(enumerate_sum(c[n], +1));
    if (n == 1) {
      CHECK(a.value() == 0.0);
    } else {
      CHECK(rel_err(a.value(), want_a) < 1e-12);
    }
    CHECK(rel_err(b.value(), want_b) < 1e-12);
  }
  CHECK_THROWS_AS(binomial_sum_a(0), domain_error);
  CHECK_THROWS_AS(binomial_sum_b(0), domain_error);
}

TEST_CASE("binomial sums switch to log scale past the overflow threshold") {
  CHECK_FALSE(binomial_sum_a(900).is_scaled());
  const auto a = binomial_sum_a(901);
  CHECK(a.is_scaled());
  CHECK(a.exponent == 901);
  const auto raw = binomial_sum_a(901, 1000);
  CHECK(rel_err(a.value(), raw.value()) < 1e-14);

  const auto huge = binomial_sum_b(1100);
  CHECK(std::isinf(huge.value()));
  CHECK(std::isfinite(huge.log2()));
  CHECK(huge.log2() > 1100.0);
  // Custom threshold
  CHECK(binomial_sum_b(50, 10).is_scaled());
}

TEST_CASE("binomial sum bounds hold for n in [1, 200] in raw form") {
  for (std::uint64_t n = 1; n <= 200; ++n) {
    const auto nd = static_cast<double>(n);
    const double a = binomial_sum_a(n).value();
    const double b = binomial_sum_b(n).value();
    const double scale = std::ldexp(1.0, static_cast<int>(n));
    REQUIRE(0.0 <= a);
    REQUIRE(a <= b);
    REQUIRE(b <= scale * std::sqrt(nd / 2.0 + 1.0));
    if (n >= 2) {
      REQUIRE(a >= scale * std::sqrt(nd / 2.0) * (1.0 - 3.0 / (2.0 * nd) - 2.0 / (nd * nd)));
    }
    CHECK(check_binomial_bounds(n).holds());
  }
}

TEST_CASE("binomial sum bounds hold in log scale beyond double range") {
  for (std::uint64_t n = 201; n <= 10000; n += 97) {
    const auto check = check_binomial_bounds(n);
    CHECK(check.holds());
    CHECK_FALSE(check.lower_vacuous);
  }
  const auto one = check_binomial_bounds(1);
  CHECK(one.lower_vacuous);
  CHECK(one.holds());
}

TEST_CASE("eps-form of the binomial bounds is parametric in n") {
  CHECK(binomial_bounds_within(1000, 0.01));
  CHECK_FALSE(binomial_bounds_within(10, 0.01));
  CHECK(binomial_bounds_within(10, 0.5));
  CHECK_THROWS_AS(binomial_bounds_within(10, 0.0), domain_error);
}

TEST_CASE("norm_growth_factor against direct enumeration") {
  const double r1 = std::sqrt(2.0 / std::numbers::pi);
  const double r2 = std::sqrt(std::numbers::pi / 2.0);
  CHECK(norm_growth_factor(1) == doctest::Approx(r1 / 2.0).epsilon(1e-14));
  CHECK(norm_growth_factor(1) == doctest::Approx(0.3989422804).epsilon(1e-10));
  CHECK(norm_growth_factor(2) == doctest::Approx((2.0 * r1 + r2) / 4.0).epsilon(1e-14));
  CHECK(norm_growth_factor(2) == doctest::Approx(0.7122708147).epsilon(1e-10));

  const auto c = pascal(25);
  for (std::uint64_t n = 1; n <= 25; ++n) {
    long double acc = 0.0L;
    for (std::uint64_t i = 1; i <= n; ++i) {
      const long double r = std::numbers::sqrt2_v<long double> *
                            std::tgamma((i + 1) / 2.0L) / std::tgamma(i / 2.0L);
      acc += static_cast<long double>(c[n][i]) * r;
    }
    acc = std::ldexp(acc, -static_cast<int>(n));
    CHECK(rel_err(norm_growth_factor(n), static_cast<double>(acc)) < 1e-12);
    const double scale = std::ldexp(1.0, -static_cast<int>(n));
    CHECK(norm_growth_factor(n) >= scale * binomial_sum_a(n).value());
    CHECK(norm_growth_factor(n) <= scale * binomial_sum_b(n).value());
  }
  CHECK_THROWS_AS(norm_growth_factor(0), domain_error);
}

TEST_CASE("norm_growth_factor converges to sqrt(n/2)") {
  for (std::uint64_t n : {1u, 2u, 5u, 17u, 100u, 333u, 1000u, 5000u, 20000u}) {
    const auto nd = static_cast<double>(n);
    const double ratio = norm_growth_factor(n) / std::sqrt(nd / 2.0);
    const double bound = 3.0 / (2.0 * nd) + 2.0 / (nd * nd) + (std::sqrt(1.0 + 2.0 / nd) - 1.0);
    CHECK(std::abs(ratio - 1.0) <= bound);
    if (n >= 100) {
      CHECK(ratio >= 1.0 - 3.0 / (2.0 * nd) - 2.0 / (nd * nd));
      CHECK(ratio <= std::sqrt(1.0 + 2.0 / nd));
    }
  }
}

TEST_CASE("sqrt(t) >= (3t - t^2)/2 on sampled t in [0, 10]") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int s = 0; s < 100000; ++s) {
    const double t = u(gen);
    const double rhs = (3.0 * t - t * t) / 2.0;
    REQUIRE(std::sqrt(t) >= rhs - 4.0 * std::numeric_limits<double>::epsilon());
  }
}
