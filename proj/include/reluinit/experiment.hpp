#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reluinit/moments.hpp"
#include "reluinit/stats.hpp"

namespace reluinit {

enum class ScheduleKind { fan_in, fan_out, custom };

/// How the per-layer betas are chosen: a preset or an explicit list.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::fan_in;
  std::vector<double> betas;  // custom only

  /// Accepts "fan-in", "fan-out" or "custom:b1,b2,...".
  static ScheduleSpec parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;
  [[nodiscard]] InitSchedule resolve(const NetworkShape& shape) const;
};

enum class TestSelection { all, forward, backward };
enum class OutputFormat { json, csv };

/// Scales beta_layer by factor in the predictions only, leaving the
/// simulated network untouched. Used to confirm the suite rejects a wrong model.
struct Perturbation {
  std::size_t layer = 0;
  double factor = 1.0;
};

/// Every knob of a predict/verify run. Each field has one key in the config
/// file and one mirroring command-line flag.
struct ExperimentConfig {
  std::vector<std::size_t> shape;            // shape
  ScheduleSpec schedule;                     // schedule
  std::vector<double> input;                 // input (explicit x; empty = canonical)
  double x_norm = 1.0;                       // x_norm
  std::uint64_t trials = 10000;              // trials
  std::uint64_t seed = 0;                    // seed
  double eps = 0.5;                          // eps
  double width_constant = kDefaultWidthConstant;  // width_c
  double z_max = kDefaultZMax;               // zmax
  std::vector<std::size_t> layers;           // layers (empty = every hidden layer)
  std::vector<std::size_t> neurons = {1, 2};  // neurons
  unsigned workers = 1;                      // workers
  TestSelection tests = TestSelection::all;  // tests
  std::optional<Perturbation> perturb;       // perturb ("k:factor")
  std::size_t max_width = std::size_t{1} << 20;  // max_width
  OutputFormat format = OutputFormat::json;  // format
  std::string out;                           // out (empty = stdout)
};

/// Sets one field from its textual key/value. Throws config_error.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Parses the flat "key = value" format; '#' starts a comment.
ExperimentConfig parse_config_text(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

/// One neuron picked for testing, 1-based.
struct Probe {
  std::size_t k = 0;
  std::size_t p = 0;
};

/// A validated configuration with all defaults filled in.
struct ResolvedExperiment {
  ExperimentConfig config;
  NetworkShape shape;
  InitSchedule simulated;  // schedule the weights are drawn from
  InitSchedule predicted;  // schedule the predictions use (differs only under perturb)
  std::vector<double> x;
  double x_norm = 0.0;
  std::vector<std::size_t> layers;
  std::vector<Probe> probes;  // grouped by ascending k
};

/// Checks every field; the config_error message lists all offending fields.
/// require_trials is off for predict, which never simulates.
ResolvedExperiment resolve(const ExperimentConfig& config, bool require_trials = true);

struct SkippedTest {
  std::string label;
  std::size_t k = 0;
  std::string reason;
};

struct Report {
  std::string command;
  ResolvedExperiment experiment;
  std::vector<MomentPrediction> predictions;
  std::vector<LayerCharacterization> characterization;
  std::vector<Verdict> verdicts;
  std::vector<SkippedTest> skipped;
  double wall_time_seconds = 0.0;

  [[nodiscard]] std::size_t passed() const noexcept;
  [[nodiscard]] bool all_pass() const noexcept;
};

/// Closed-form predictions and schedule characterization only.
Report run_predict(const ExperimentConfig& config);

/// Monte Carlo accumulators for one probed neuron.
struct NeuronStats {
  StreamingStats f;   // f_{k,p}
  StreamingStats f2;  // f_{k,p}^2
  StreamingStats d;   // delta_{k,p}
  StreamingStats d2;  // delta_{k,p}^2

  void merge(const NeuronStats& other) noexcept;
};

struct SimulationResult {
  std::vector<NeuronStats> neurons;  // parallel to ResolvedExperiment::probes
  StreamingStats output;             // f_L
  StreamingStats output2;            // f_L^2

  void merge(const SimulationResult& other) noexcept;
};

/// Trials are grouped in fixed blocks whose accumulators are merged in block
/// order, so the result does not depend on the worker count.
inline constexpr std::uint64_t kTrialBlock = 1024;

SimulationResult simulate(const ResolvedExperiment& experiment);

/// Builds verdicts for a finished simulation.
Report evaluate(const ResolvedExperiment& experiment, const SimulationResult& sim);

/// resolve + simulate + evaluate.
Report run_verify(const ExperimentConfig& config);

struct BoundsConfig {
  std::uint64_t n_max = 200;
  std::uint64_t i_max = 10000;
  std::uint64_t t_samples = 100000;
  std::uint64_t seed = 0;
  std::uint64_t overflow_threshold = 900;
  OutputFormat format = OutputFormat::json;
  std::string out;
};

/// Violation count plus the tightest and loosest margin seen for one inequality.
struct BoundFamily {
  std::string name;
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  double min_slack = 0.0;
  std::uint64_t min_slack_at = 0;
  double max_slack = 0.0;
  std::uint64_t max_slack_at = 0;
  std::uint64_t vacuous = 0;

  void record(std::uint64_t at, double slack, bool ok);
};

struct BoundsReport {
  BoundsConfig config;
  /// a_lower, a_le_b, b_upper (log2 slack), gautschi_lower, gautschi_upper
  /// (relative slack), sqrt_inequality (absolute slack).
  std::vector<BoundFamily> families;
  /// max over n of B_n / (2^n sqrt(n/2 + 1)).
  double max_b_ratio = 0.0;
  std::uint64_t log_scaled_from = 0;
  double wall_time_seconds = 0.0;

  [[nodiscard]] std::uint64_t violations() const noexcept;
};

BoundsReport run_bounds(const BoundsConfig& config);

}  // namespace reluinit
