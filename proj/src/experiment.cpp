#include "reluinit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "reluinit/combinatorics.hpp"
#include "reluinit/error.hpp"
#include "reluinit/netsim.hpp"
#include "reluinit/rng.hpp"

namespace reluinit {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) {
    s.remove_prefix(1);
  }
  while (!s.empty() && is_space(s.back())) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return parts;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw config_error(std::string(key) + ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  if (trim(text).empty()) {
    return out;
  }
  for (auto part : split(text, ',')) {
    out.push_back(parse_number<T>(key, part));
  }
  return out;
}

std::string join_errors(const std::vector<std::string>& errors) {
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) {
    msg += "\n  " + e;
  }
  return msg;
}

}  // namespace

ScheduleSpec ScheduleSpec::parse(std::string_view text) {
  text = trim(text);
  if (text == "fan-in" || text == "fan_in") {
    return {ScheduleKind::fan_in, {}};
  }
  if (text == "fan-out" || text == "fan_out") {
    return {ScheduleKind::fan_out, {}};
  }
  constexpr std::string_view prefix = "custom:";
  if (text.starts_with(prefix)) {
    auto betas = parse_list<double>("schedule", text.substr(prefix.size()));
    if (betas.empty()) {
      throw config_error("schedule: custom needs at least one beta");
    }
    return {ScheduleKind::custom, std::move(betas)};
  }
  throw config_error("schedule: expected fan-in, fan-out or custom:<betas>, got '" +
                     std::string(text) + "'");
}

std::string ScheduleSpec::to_string() const {
  switch (kind) {
    case ScheduleKind::fan_in:
      return "fan-in";
    case ScheduleKind::fan_out:
      return "fan-out";
    case ScheduleKind::custom:
      break;
  }
  std::ostringstream os;
  os.precision(17);
  os << "custom:";
  for (std::size_t i = 0; i < betas.size(); ++i) {
    os << (i ? "," : "") << betas[i];
  }
  return os.str();
}

InitSchedule ScheduleSpec::resolve(const NetworkShape& shape) const {
  switch (kind) {
    case ScheduleKind::fan_in:
      return InitSchedule::fan_in(shape);
    case ScheduleKind::fan_out:
      return InitSchedule::fan_out(shape);
    case ScheduleKind::custom:
      break;
  }
  InitSchedule sched(betas);
  require_compatible(shape, sched);
  return sched;
}

void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "shape") {
    config.shape = parse_list<std::size_t>(key, value);
  } else if (key == "schedule") {
    config.schedule = ScheduleSpec::parse(value);
  } else if (key == "input") {
    config.input = parse_list<double>(key, value);
  } else if (key == "x_norm") {
    config.x_norm = parse_number<double>(key, value);
  } else if (key == "trials") {
    config.trials = parse_number<std::uint64_t>(key, value);
  } else if (key == "seed") {
    config.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "eps") {
    config.eps = parse_number<double>(key, value);
  } else if (key == "width_c") {
    config.width_constant = parse_number<double>(key, value);
  } else if (key == "zmax") {
    config.z_max = parse_number<double>(key, value);
  } else if (key == "layers") {
    config.layers = parse_list<std::size_t>(key, value);
  } else if (key == "neurons") {
    config.neurons = parse_list<std::size_t>(key, value);
  } else if (key == "workers") {
    config.workers = parse_number<unsigned>(key, value);
  } else if (key == "tests") {
    if (value == "all") {
      config.tests = TestSelection::all;
    } else if (value == "forward") {
      config.tests = TestSelection::forward;
    } else if (value == "backward") {
      config.tests = TestSelection::backward;
    } else {
      throw config_error("tests: expected all, forward or backward");
    }
  } else if (key == "perturb") {
    if (value.empty() || value == "none") {
      config.perturb.reset();
    } else {
      const auto parts = split(value, ':');
      if (parts.size() != 2) {
        throw config_error("perturb: expected <layer>:<factor>");
      }
      config.perturb = Perturbation{parse_number<std::size_t>(key, parts[0]),
                                    parse_number<double>(key, parts[1])};
    }
  } else if (key == "max_width") {
    config.max_width = parse_number<std::size_t>(key, value);
  } else if (key == "format") {
    if (value == "json") {
      config.format = OutputFormat::json;
    } else if (value == "csv") {
      config.format = OutputFormat::csv;
    } else {
      throw config_error("format: expected json or csv");
    }
  } else if (key == "out") {
    config.out = std::string(value);
  } else {
    throw config_error("unknown configuration key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config_text(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = trim(line.substr(0, hash));
    }
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw config_error("line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw config_error("cannot open config file '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), std::move(base));
}

ResolvedExperiment resolve(const ExperimentConfig& config, bool require_trials) {
  std::vector<std::string> errors;
  std::optional<NetworkShape> shape;
  try {
    shape.emplace(config.shape);
    for (auto w : config.shape) {
      if (w > config.max_width) {
        errors.push_back("shape: width " + std::to_string(w) + " exceeds max_width " +
                         std::to_string(config.max_width));
        break;
      }
    }
  } catch (const std::exception& e) {
    errors.push_back(std::string("shape: ") + e.what());
  }

  std::optional<InitSchedule> sched;
  if (shape) {
    try {
      sched.emplace(config.schedule.resolve(*shape));
    } catch (const std::exception& e) {
      errors.push_back(std::string("schedule: ") + e.what());
    }
  }

  double x_norm = config.x_norm;
  std::vector<double> x;
  if (!config.input.empty()) {
    double sq = 0.0;
    for (double v : config.input) {
      if (!std::isfinite(v)) {
        errors.emplace_back("input: non-finite entry");
      }
      sq += v * v;
    }
    x_norm = std::sqrt(sq);
    if (shape && config.input.size() != shape->input_dim()) {
      errors.push_back("input: length " + std::to_string(config.input.size()) +
                       " does not match n_0 = " + std::to_string(shape->input_dim()));
    }
    x = config.input;
  } else if (shape) {
    x.assign(shape->input_dim(), 0.0);
    x.front() = config.x_norm;
  }
  if (!std::isfinite(x_norm) || x_norm <= 0.0) {
    errors.emplace_back("x_norm: input norm must be finite and positive");
  }

  if (require_trials && config.trials < kMinTestCount) {
    errors.push_back("trials: need at least " + std::to_string(kMinTestCount));
  }
  if (!(config.eps > 0.0 && config.eps < 1.0)) {
    errors.emplace_back("eps: must lie in (0, 1)");
  }
  if (!(config.width_constant > 0.0) || !std::isfinite(config.width_constant)) {
    errors.emplace_back("width_c: must be positive");
  }
  if (!(config.z_max > 0.0)) {
    errors.emplace_back("zmax: must be positive");
  }
  if (config.workers < 1 || config.workers > 1024) {
    errors.emplace_back("workers: must lie in [1, 1024]");
  }
  if (config.neurons.empty()) {
    errors.emplace_back("neurons: at least one neuron must be probed");
  }
  for (auto p : config.neurons) {
    if (p < 1) {
      errors.emplace_back("neurons: indices are 1-based");
      break;
    }
  }

  std::vector<std::size_t> layers;
  if (shape) {
    const std::size_t hidden = shape->depth() - 1;
    if (config.layers.empty()) {
      for (std::size_t k = 1; k <= hidden; ++k) {
        layers.push_back(k);
      }
    } else {
      std::set<std::size_t> uniq(config.layers.begin(), config.layers.end());
      for (auto k : uniq) {
        if (k < 1 || k > hidden) {
          errors.push_back("layers: " + std::to_string(k) + " is not a hidden layer [1, " +
                           std::to_string(hidden) + "]");
        }
      }
      layers.assign(uniq.begin(), uniq.end());
    }
    if (config.perturb && (config.perturb->layer < 1 || config.perturb->layer > shape->depth() ||
                           !(config.perturb->factor > 0.0))) {
      errors.emplace_back("perturb: layer must lie in [1, L] and factor be positive");
    }
  }

  if (!errors.empty()) {
    throw config_error(join_errors(errors));
  }

  const std::set<std::size_t> neurons(config.neurons.begin(), config.neurons.end());
  std::vector<Probe> probes;
  for (auto k : layers) {
    for (auto p : neurons) {
      if (p <= shape->width(k)) {
        probes.push_back({k, p});
      }
    }
  }
  InitSchedule predicted = *sched;
  if (config.perturb) {
    predicted = sched->scaled(config.perturb->layer, config.perturb->factor);
  }
  return ResolvedExperiment{config, *shape, *sched, predicted, x, x_norm, layers, probes};
}

std::size_t Report::passed() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; }));
}

bool Report::all_pass() const noexcept { return passed() == verdicts.size(); }

Report run_predict(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  auto exp = resolve(config, false);
  Report report{"predict", exp, {}, {}, {}, {}, 0.0};
  report.predictions =
      predict_all(exp.shape, exp.predicted, exp.x_norm, config.eps, config.width_constant);
  report.characterization = schedule_characterization(exp.shape, exp.predicted);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void NeuronStats::merge(const NeuronStats& other) noexcept {
  f.merge(other.f);
  f2.merge(other.f2);
  d.merge(other.d);
  d2.merge(other.d2);
}

void SimulationResult::merge(const SimulationResult& other) noexcept {
  for (std::size_t i = 0; i < neurons.size(); ++i) {
    neurons[i].merge(other.neurons[i]);
  }
  output.merge(other.output);
  output2.merge(other.output2);
}

namespace {

void record(StreamingStats& s, double value, std::uint64_t trial, std::uint64_t seed) {
  if (!std::isfinite(value)) {
    throw std::runtime_error("trial " + std::to_string(trial) + " (seed " +
                             std::to_string(seed) + "): non-finite value");
  }
  s.update(value);
}

void run_block(const ResolvedExperiment& exp, std::uint64_t first, std::uint64_t last,
               SimulationResult& acc) {
  const bool forward_only = exp.config.tests == TestSelection::forward;
  const std::size_t top = exp.layers.empty() ? 0 : exp.layers.back();
  std::vector<std::size_t> top_neurons;
  for (const auto& pr : exp.probes) {
    if (pr.k == top) {
      top_neurons.push_back(pr.p);
    }
  }
  for (std::uint64_t t = first; t < last; ++t) {
    const std::uint64_t seed = trial_seed(exp.config.seed, t);
    if (forward_only) {
      const auto values = forward_probed(exp.shape, exp.simulated, seed, exp.x, top, top_neurons);
      std::size_t top_idx = 0;
      for (std::size_t i = 0; i < exp.probes.size(); ++i) {
        const auto& pr = exp.probes[i];
        const double f = (pr.k == top) ? values[top - 1][top_idx++] : values[pr.k - 1][pr.p - 1];
        record(acc.neurons[i].f, f, t, seed);
        record(acc.neurons[i].f2, f * f, t, seed);
      }
      continue;
    }
    const auto weights = sample_weights(exp.shape, exp.simulated, seed);
    const auto trace = forward(weights, exp.x);
    const auto deltas = output_gradient_full(weights, trace);
    for (std::size_t i = 0; i < exp.probes.size(); ++i) {
      const auto& pr = exp.probes[i];
      const double f = trace.f(pr.k)[pr.p - 1];
      const double d = deltas[pr.k - 1][pr.p - 1];
      record(acc.neurons[i].f, f, t, seed);
      record(acc.neurons[i].f2, f * f, t, seed);
      record(acc.neurons[i].d, d, t, seed);
      record(acc.neurons[i].d2, d * d, t, seed);
    }
    const double out = trace.output();
    record(acc.output, out, t, seed);
    record(acc.output2, out * out, t, seed);
  }
}

}  // namespace

// forward_probed() fills layers below the top one in full, so values[k-1][p-1]
// indexes them directly.
SimulationResult simulate(const ResolvedExperiment& exp) {
  const std::uint64_t trials = exp.config.trials;
  const std::uint64_t blocks = (trials + kTrialBlock - 1) / kTrialBlock;
  std::vector<SimulationResult> partial(
      static_cast<std::size_t>(blocks),
      SimulationResult{std::vector<NeuronStats>(exp.probes.size()), {}, {}});

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    while (true) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= blocks) {
        return;
      }
      try {
        run_block(exp, b * kTrialBlock, std::min(trials, (b + 1) * kTrialBlock), partial[b]);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(blocks);
        return;
      }
    }
  };

  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(exp.config.workers, std::max<std::uint64_t>(blocks, 1)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  SimulationResult total{std::vector<NeuronStats>(exp.probes.size()), {}, {}};
  for (const auto& part : partial) {
    total.merge(part);
  }
  return total;
}

Report evaluate(const ResolvedExperiment& exp, const SimulationResult& sim) {
  const auto& cfg = exp.config;
  Report report{"verify", exp, {}, {}, {}, {}, 0.0};
  report.predictions = predict_all(exp.shape, exp.predicted, exp.x_norm, cfg.eps,
                                   cfg.width_constant);
  report.characterization = schedule_characterization(exp.shape, exp.predicted);

  const bool forward = cfg.tests != TestSelection::backward;
  const bool backward = cfg.tests != TestSelection::forward;
  const auto add = [&](Verdict v, std::string label, std::size_t k, std::size_t p) {
    v.label = std::move(label);
    v.k = k;
    v.p = p;
    report.verdicts.push_back(std::move(v));
  };

  std::size_t i = 0;
  for (auto k : exp.layers) {
    const auto& pred = report.predictions[k - 1];
    std::vector<StreamingStats> f_by_neuron;
    std::vector<StreamingStats> d_by_neuron;
    for (; i < exp.probes.size() && exp.probes[i].k == k; ++i) {
      const auto p = exp.probes[i].p;
      const auto& ns = sim.neurons[i];
      if (forward) {
        add(mean_test(ns.f, pred.first_moment_exact, cfg.z_max), "first_moment", k, p);
        if (pred.width_condition) {
          add(interval_test(ns.f, pred.first_moment_lo, pred.first_moment_hi, cfg.z_max,
                            Quantity::mean),
              "first_moment_bounds", k, p);
        }
        add(mean_test(ns.f2, pred.second_moment, cfg.z_max), "second_moment", k, p);
        if (pred.width_condition) {
          add(interval_test(ns.f, pred.variance_lo, pred.variance_hi, cfg.z_max,
                            Quantity::variance),
              "variance_bounds", k, p);
        }
        f_by_neuron.push_back(ns.f);
      }
      if (backward) {
        add(mean_test(ns.d, 0.0, cfg.z_max), "delta_mean", k, p);
        add(mean_test(ns.d2, pred.backward_variance, cfg.z_max), "delta_second_moment", k, p);
        d_by_neuron.push_back(ns.d);
      }
    }
    if (forward && !pred.width_condition) {
      report.skipped.push_back({"first_moment_bounds", k, "width_condition"});
      report.skipped.push_back({"variance_bounds", k, "width_condition"});
    }
    if (f_by_neuron.size() >= 2) {
      add(cross_neuron_symmetry_test(f_by_neuron, cfg.z_max), "forward_symmetry", k, 0);
    }
    if (d_by_neuron.size() >= 2) {
      add(cross_neuron_symmetry_test(d_by_neuron, cfg.z_max), "backward_symmetry", k, 0);
    }
    if ((forward && f_by_neuron.size() < 2) || (backward && d_by_neuron.size() < 2)) {
      report.skipped.push_back({"symmetry", k, "fewer than two probed neurons"});
    }
  }

  if (backward) {
    // f_L = W_L^T f_{L-1} is linear: E f_L = 0, E f_L^2 = beta_L^2 n_{L-1} E f_{L-1,p}^2.
    const std::size_t depth = exp.shape.depth();
    const double beta_out = exp.predicted.beta(depth);
    const double out2 = beta_out * beta_out * static_cast<double>(exp.shape.width(depth - 1)) *
                        second_moment(exp.shape, exp.predicted, exp.x_norm, depth - 1);
    add(mean_test(sim.output, 0.0, cfg.z_max), "output_mean", depth, 1);
    add(mean_test(sim.output2, out2, cfg.z_max), "output_second_moment", depth, 1);
  }
  return report;
}

Report run_verify(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const auto exp = resolve(config, true);
  const auto sim = simulate(exp);
  auto report = evaluate(exp, sim);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void BoundFamily::record(std::uint64_t at, double slack, bool ok) {
  ++checked;
  if (!ok) {
    ++violations;
  }
  if (!std::isfinite(slack)) {
    return;
  }
  if (slack < min_slack) {
    min_slack = slack;
    min_slack_at = at;
  }
  if (slack > max_slack) {
    max_slack = slack;
    max_slack_at = at;
  }
}

std::uint64_t BoundsReport::violations() const noexcept {
  std::uint64_t total = 0;
  for (const auto& f : families) {
    total += f.violations;
  }
  return total;
}

BoundsReport run_bounds(const BoundsConfig& config) {
  if (config.n_max < 1 || config.i_max < 1) {
    throw config_error("bounds: n_max and i_max must be >= 1");
  }
  const auto start = std::chrono::steady_clock::now();
  const double inf = std::numeric_limits<double>::infinity();
  const auto family = [inf](std::string name) {
    BoundFamily f;
    f.name = std::move(name);
    f.min_slack = inf;
    f.max_slack = -inf;
    return f;
  };

  BoundsReport report;
  report.config = config;
  report.log_scaled_from = config.n_max > config.overflow_threshold ? config.overflow_threshold + 1 : 0;

  auto a_lower = family("a_lower");
  auto a_le_b = family("a_le_b");
  auto b_upper = family("b_upper");
  double max_b_ratio = 0.0;
  for (std::uint64_t n = 1; n <= config.n_max; ++n) {
    const auto check = check_binomial_bounds(n, config.overflow_threshold);
    if (check.lower_vacuous) {
      ++a_lower.vacuous;
    }
    a_lower.record(n, check.lower_slack_log2, check.lower_slack_log2 >= 0.0);
    a_le_b.record(n, check.order_slack_log2, check.order_slack_log2 >= 0.0);
    b_upper.record(n, check.upper_slack_log2, check.upper_slack_log2 >= 0.0);
    max_b_ratio = std::max(max_b_ratio, std::exp2(-check.upper_slack_log2));
  }

  auto g_lower = family("gautschi_lower");
  auto g_upper = family("gautschi_upper");
  for (std::uint64_t i = 1; i <= config.i_max; ++i) {
    const double r = gautschi_ratio(i);
    const auto id = static_cast<double>(i);
    const double lo = (r - std::sqrt(id - 1.0)) / r;
    const double hi = (std::sqrt(id + 1.0) - r) / r;
    g_lower.record(i, lo, lo >= 0.0);
    g_upper.record(i, hi, hi >= 0.0);
  }

  auto sqrt_ineq = family("sqrt_inequality");
  std::mt19937_64 gen(config.seed);
  std::uniform_real_distribution<double> uniform(0.0, 10.0);
  for (std::uint64_t s = 0; s < config.t_samples; ++s) {
    const double t = uniform(gen);
    const double rhs = (3.0 * t - t * t) / 2.0;
    const double slack = std::sqrt(t) - rhs;
    // Equality at t = 0 and t = 1; allow a few ulps of rounding there.
    const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(rhs));
    sqrt_ineq.record(s, slack, slack >= -tol);
  }

  report.families = {a_lower, a_le_b, b_upper, g_lower, g_upper, sqrt_ineq};
  report.max_b_ratio = max_b_ratio;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace reluinit
