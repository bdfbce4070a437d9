#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace reluinit {

/// Layer widths (n_0, ..., n_L) of a bias-free ReLU network with scalar output.
class NetworkShape {
 public:
  /// Requires L >= 2 (at least one hidden layer), every width >= 1 and n_L = 1.
  explicit NetworkShape(std::vector<std::size_t> widths);
  NetworkShape(std::initializer_list<std::size_t> widths)
      : NetworkShape(std::vector<std::size_t>(widths)) {}

  /// Number of weight layers L.
  [[nodiscard]] std::size_t depth() const noexcept { return widths_.size() - 1; }
  /// n_l for l in [0, L].
  [[nodiscard]] std::size_t width(std::size_t l) const { return widths_.at(l); }
  [[nodiscard]] std::size_t input_dim() const noexcept { return widths_.front(); }
  [[nodiscard]] std::span<const std::size_t> widths() const noexcept { return widths_; }

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;

 private:
  std::vector<std::size_t> widths_;
};

/// Per-layer weight standard deviations beta_1..beta_L; W_l has i.i.d.
/// N(0, beta_l^2) entries.
class InitSchedule {
 public:
  explicit InitSchedule(std::vector<double> betas);

  /// beta_k^2 = 2 / n_{k-1}: preserves the forward second moment.
  static InitSchedule fan_in(const NetworkShape& shape);
  /// beta_k^2 = 2 / n_k: preserves the backward-derivative variance.
  static InitSchedule fan_out(const NetworkShape& shape);

  [[nodiscard]] std::size_t size() const noexcept { return betas_.size(); }
  /// beta_l for l in [1, L].
  [[nodiscard]] double beta(std::size_t l) const;
  [[nodiscard]] std::span<const double> betas() const noexcept { return betas_; }

  /// Copy with beta_l multiplied by factor.
  [[nodiscard]] InitSchedule scaled(std::size_t l, double factor) const;

  friend bool operator==(const InitSchedule&, const InitSchedule&) = default;

 private:
  std::vector<double> betas_;
};

/// Throws config-style domain_error if the schedule length differs from L.
void require_compatible(const NetworkShape& shape, const InitSchedule& sched);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct VarianceBounds {
  double lo = 0.0;
  double hi = 0.0;
  /// The lower bound is negative (eps > sqrt(pi) - 1) and says nothing.
  bool lower_vacuous = false;
};

/// The width constant the test-suite calibrates for the first-moment bracket.
/// sup_n n (1 - M_n / sqrt(n/2)) ~= 0.6513, so any c >= 0.66 suffices.
inline constexpr double kDefaultWidthConstant = 1.0;

/// Closed-form predictions for one hidden layer k in [1, L-1].
struct MomentPrediction {
  std::size_t k = 0;
  double s_k = 0.0;
  double first_moment_exact = 0.0;
  double first_moment_lo = 0.0;
  double first_moment_hi = 0.0;
  double second_moment = 0.0;
  double variance_lo = 0.0;
  double variance_hi = 0.0;
  bool variance_lower_vacuous = false;
  double backward_variance = 0.0;
  bool width_condition = false;
};

/// S_k = (|x|/sqrt(2 pi)) prod_{l<k} sqrt(n_l/2) prod_{l<=k} beta_l.
double s_k(const NetworkShape& shape, const InitSchedule& sched, double x_norm, std::size_t k);
/// ln S_k, accumulated without leaving log space.
double log_s_k(const NetworkShape& shape, const InitSchedule& sched, double x_norm,
               std::size_t k);

/// E[f_{k,p}] = (|x|/sqrt(2 pi)) beta_k prod_{l<k} beta_l M_{n_l}.
double first_moment_exact(const NetworkShape& shape, const InitSchedule& sched, double x_norm,
                          std::size_t k);

/// ((1-eps) S_k, (1+eps) S_k).
Interval first_moment_bounds(const NetworkShape& shape, const InitSchedule& sched,
                             double x_norm, std::size_t k, double eps);

/// E[f_{k,p}^2] = (|x|^2/2) prod_{l<k} (n_l/2) prod_{l<=k} beta_l^2.
double second_moment(const NetworkShape& shape, const InitSchedule& sched, double x_norm,
                     std::size_t k);

/// ((pi - (1+eps)^2) S_k^2, (pi - (1-eps)^2) S_k^2).
VarianceBounds variance_bounds(const NetworkShape& shape, const InitSchedule& sched,
                               double x_norm, std::size_t k, double eps);

/// var(delta_{k,p}) = E[delta_{k,p}^2] = (1/2) prod_{k<l<L} (n_l/2) prod_{k<l<=L} beta_l^2.
double backward_variance(const NetworkShape& shape, const InitSchedule& sched, std::size_t k);

/// min_{l in [1,k-1]} n_l >= c k / log(1 + eps); vacuously true for k = 1.
bool width_condition(const NetworkShape& shape, std::size_t k, double eps, double c);

/// Per-layer flags for the fan-in / fan-out characterizations.
struct LayerCharacterization {
  std::size_t k = 0;
  bool beta_is_fan_in = false;        // beta_k^2 == 2 / n_{k-1}
  bool forward_preserved = false;     // S_k == S_{k-1}
  bool beta_is_fan_out = false;       // beta_k^2 == 2 / n_k
  bool backward_preserved = false;    // var(delta_k) == var(delta_{k-1})

  [[nodiscard]] bool consistent() const noexcept {
    return beta_is_fan_in == forward_preserved && beta_is_fan_out == backward_preserved;
  }
};

inline constexpr double kCharacterizationTolerance = 1e-12;

/// One entry per k in [2, L-1]. Empty for L = 2.
std::vector<LayerCharacterization> schedule_characterization(
    const NetworkShape& shape, const InitSchedule& sched,
    double rel_tol = kCharacterizationTolerance);

MomentPrediction predict_layer(const NetworkShape& shape, const InitSchedule& sched,
                               double x_norm, std::size_t k, double eps,
                               double width_constant = kDefaultWidthConstant);

/// predict_layer for every k in [1, L-1].
std::vector<MomentPrediction> predict_all(const NetworkShape& shape, const InitSchedule& sched,
                                          double x_norm, double eps,
                                          double width_constant = kDefaultWidthConstant);

}  // namespace reluinit
