#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace reluinit {

/// Single-pass accumulator of count, mean and central moment sums up to
/// order four (Pebay's update and pairwise-merge recurrences).
class StreamingStats {
 public:
  /// Adds one observation; throws domain_error on a non-finite value.
  void update(double value);
  /// Folds another accumulator into this one as if its stream had followed.
  void merge(const StreamingStats& other) noexcept;

  [[nodiscard]] std::uint64_t count() const noexcept { return count_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  /// Sum of squared deviations from the mean.
  [[nodiscard]] double m2() const noexcept { return m2_; }
  [[nodiscard]] double m3() const noexcept { return m3_; }
  [[nodiscard]] double m4() const noexcept { return m4_; }
  /// Sample variance, m2 / (count - 1); NaN for count < 2.
  [[nodiscard]] double variance() const noexcept;

  friend bool operator==(const StreamingStats&, const StreamingStats&) = default;

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

inline constexpr std::uint64_t kMinTestCount = 100;
inline constexpr double kDefaultZMax = 4.0;

/// A predicted value confronted with a Monte Carlo estimate.
struct Verdict {
  std::string label;
  std::size_t k = 0;
  std::size_t p = 0;
  double predicted = 0.0;
  double estimated = 0.0;
  double std_error = 0.0;
  double z_score = 0.0;
  bool pass = false;
  std::uint64_t n_trials = 0;
  /// Set by interval_test; predicted is then the interval point nearest the estimate.
  bool is_interval = false;
  double lo = 0.0;
  double hi = 0.0;
};

enum class Quantity { mean, variance };

double mean_std_error(const StreamingStats& s);
/// Distribution-free standard error of the sample variance, from m4.
double variance_std_error(const StreamingStats& s);

/// z = (mean - predicted) / sqrt(variance / count).
Verdict mean_test(const StreamingStats& s, double predicted, double z_max = kDefaultZMax);

/// z = (variance - predicted) / SE_var with SE_var from the fourth central moment.
Verdict variance_test(const StreamingStats& s, double predicted, double z_max = kDefaultZMax);

/// Passes iff lo - z_max SE <= estimate <= hi + z_max SE.
Verdict interval_test(const StreamingStats& s, double lo, double hi,
                      double z_max = kDefaultZMax, Quantity quantity = Quantity::mean);

/// Pairwise z-tests of the sample variances of each neuron's stream; the
/// verdict reports the worst pair.
Verdict cross_neuron_symmetry_test(std::span<const StreamingStats> per_neuron,
                                   double z_max = kDefaultZMax);

}  // namespace reluinit
