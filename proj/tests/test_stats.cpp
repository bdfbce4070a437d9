#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "reluinit/error.hpp"
#include "reluinit/stats.hpp"

using namespace reluinit;

namespace {

StreamingStats from(const std::vector<double>& xs) {
  StreamingStats s;
  for (double x : xs) {
    s.update(x);
  }
  return s;
}

struct TwoPass {
  double mean = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

TwoPass two_pass(const std::vector<double>& xs) {
  long double sum = 0.0L;
  for (double x : xs) {
    sum += x;
  }
  TwoPass r;
  const long double mean = sum / static_cast<long double>(xs.size());
  long double m2 = 0, m3 = 0, m4 = 0;
  for (double x : xs) {
    const long double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  r.mean = static_cast<double>(mean);
  r.m2 = static_cast<double>(m2);
  r.m3 = static_cast<double>(m3);
  r.m4 = static_cast<double>(m4);
  return r;
}

std::vector<double> normals(std::uint64_t seed, std::size_t n, double mu = 0.0, double sd = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(mu, sd);
  std::vector<double> xs(n);
  for (double& x : xs) {
    x = d(gen);
  }
  return xs;
}

}  // namespace

TEST_CASE("small streams") {
  const auto constant = from({1, 1, 1, 1});
  CHECK(constant.mean() == 1.0);
  CHECK(constant.variance() == 0.0);
  const auto pair = from({0, 2});
  CHECK(pair.mean() == 1.0);
  CHECK(pair.variance() == 2.0);
  CHECK(std::isnan(from({3}).variance()));
  CHECK(StreamingStats{}.count() == 0);
}

TEST_CASE("streaming moments agree with a two-pass computation") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto xs = normals(seed, 50000, 1e3, 2.5);
    for (std::size_t i = 0; i < xs.size(); i += 7) {
      xs[i] = std::exp(xs[i] / 1e3);  // break the symmetry so m3 is not ~0
    }
    const auto s = from(xs);
    const auto ref = two_pass(xs);
    CHECK(s.count() == xs.size());
    CHECK(s.mean() == doctest::Approx(ref.mean).epsilon(1e-12));
    CHECK(s.m2() == doctest::Approx(ref.m2).epsilon(1e-12));
    CHECK(s.m3() == doctest::Approx(ref.m3).epsilon(1e-9));
    CHECK(s.m4() == doctest::Approx(ref.m4).epsilon(1e-12));
  }
}

TEST_CASE("merge matches the sequential stream and is associative") {
  const auto xs = normals(9, 3001, 0.5, 3.0);
  const auto whole = from(xs);
  StreamingStats a, b, c;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    (i < 1000 ? a : i < 2200 ? b : c).update(xs[i]);
  }
  StreamingStats left = a;
  left.merge(b);
  left.merge(c);
  StreamingStats bc = b;
  bc.merge(c);
  StreamingStats right = a;
  right.merge(bc);
  for (const auto* s : {&left, &right}) {
    CHECK(s->count() == whole.count());
    CHECK(s->mean() == doctest::Approx(whole.mean()).epsilon(1e-13));
    CHECK(s->m2() == doctest::Approx(whole.m2()).epsilon(1e-12));
    CHECK(s->m3() == doctest::Approx(whole.m3()).epsilon(1e-8));
    CHECK(s->m4() == doctest::Approx(whole.m4()).epsilon(1e-12));
  }
  StreamingStats empty;
  empty.merge(a);
  CHECK(empty == a);
  StreamingStats copy = a;
  copy.merge(StreamingStats{});
  CHECK(copy == a);
}

TEST_CASE("non-finite observations are rejected") {
  StreamingStats s;
  CHECK_THROWS_AS(s.update(std::numeric_limits<double>::quiet_NaN()), domain_error);
  CHECK_THROWS_AS(s.update(std::numeric_limits<double>::infinity()), domain_error);
  CHECK(s.count() == 0);
}

TEST_CASE("tests need enough samples") {
  const auto s = from(normals(4, 99));
  CHECK_THROWS_AS(mean_test(s, 0.0), insufficient_data_error);
  CHECK_THROWS_AS(variance_test(s, 1.0), insufficient_data_error);
  CHECK_THROWS_AS(interval_test(s, 0.0, 1.0), insufficient_data_error);
  const std::vector<StreamingStats> two{s, s};
  CHECK_THROWS_AS(cross_neuron_symmetry_test(two), insufficient_data_error);
  CHECK_NOTHROW(mean_test(from(normals(4, 100)), 0.0));
}

TEST_CASE("zero standard error") {
  const auto s = from(std::vector<double>(200, 2.0));
  const auto hit = mean_test(s, 2.0);
  CHECK(hit.pass);
  CHECK(hit.z_score == 0.0);
  const auto miss = mean_test(s, 1.0);
  CHECK_FALSE(miss.pass);
  CHECK(std::isinf(miss.z_score));
  CHECK(variance_test(s, 0.0).pass);
  CHECK_FALSE(variance_test(s, 0.1).pass);
}

TEST_CASE("mean and variance test fields") {
  const auto xs = normals(5, 10000, 0.0, 2.0);
  const auto s = from(xs);
  const auto v = mean_test(s, 0.0, 4.0);
  CHECK(v.n_trials == 10000);
  CHECK(v.estimated == s.mean());
  CHECK(v.std_error == doctest::Approx(std::sqrt(s.variance() / 10000.0)));
  CHECK(v.z_score == doctest::Approx(s.mean() / v.std_error));
  CHECK(v.pass == (std::abs(v.z_score) <= 4.0));
  CHECK_FALSE(v.is_interval);
  CHECK_FALSE(mean_test(s, 1.0).pass);
  CHECK(variance_test(s, 4.0).pass);
  CHECK_FALSE(variance_test(s, 5.0).pass);
}

TEST_CASE("variance standard error is close to the Gaussian value") {
  for (std::size_t n : {10000u, 100000u}) {
    const auto s = from(normals(n, n, 0.0, 1.7));
    const double gaussian = s.variance() * std::sqrt(2.0 / (static_cast<double>(n) - 1.0));
    CHECK(variance_std_error(s) == doctest::Approx(gaussian).epsilon(0.1));
  }
}

TEST_CASE("interval_test") {
  const auto s = from(normals(6, 10000, 1.0, 1.0));
  const double se = mean_std_error(s);
  const auto inside = interval_test(s, 0.5, 1.5);
  CHECK(inside.pass);
  CHECK(inside.is_interval);
  CHECK(inside.z_score == 0.0);
  CHECK(inside.predicted == s.mean());
  CHECK(inside.lo == 0.5);
  CHECK(inside.hi == 1.5);

  const auto above = interval_test(s, 0.0, s.mean() - 10.0 * se);
  CHECK_FALSE(above.pass);
  CHECK(above.predicted == s.mean() - 10.0 * se);
  CHECK(above.z_score == doctest::Approx(10.0));
  CHECK(interval_test(s, 0.0, s.mean() - 3.0 * se).pass);

  const auto below = interval_test(s, s.mean() + 5.0 * se, 3.0);
  CHECK_FALSE(below.pass);
  CHECK(below.z_score == doctest::Approx(-5.0));

  // A vacuous (negative) lower end only constrains from above.
  CHECK(interval_test(s, -1.0, 2.0, 4.0, Quantity::variance).pass);
  CHECK_FALSE(interval_test(s, -1.0, 0.5, 4.0, Quantity::variance).pass);
}

TEST_CASE("cross-neuron symmetry") {
  const auto a = from(normals(7, 5000));
  const std::vector<StreamingStats> same{a, a, a};
  const auto v = cross_neuron_symmetry_test(same);
  CHECK(v.pass);
  CHECK(v.z_score == 0.0);

  const std::vector<StreamingStats> iid{from(normals(8, 20000)), from(normals(9, 20000)),
                                        from(normals(10, 20000))};
  CHECK(cross_neuron_symmetry_test(iid).pass);

  const std::vector<StreamingStats> skew{from(normals(11, 20000)),
                                         from(normals(12, 20000, 0.0, 1.2))};
  CHECK_FALSE(cross_neuron_symmetry_test(skew).pass);

  const std::vector<StreamingStats> one{a};
  CHECK_THROWS_AS(cross_neuron_symmetry_test(one), domain_error);
}

TEST_CASE("null calibration of the mean test") {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> d;
  int passed = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    StreamingStats s;
    for (int i = 0; i < 1000; ++i) {
      s.update(d(gen));
    }
    passed += mean_test(s, 0.0, 4.0).pass ? 1 : 0;
  }
  CHECK(passed >= 999);
}
