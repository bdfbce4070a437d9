#include "reluinit/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace reluinit {

namespace {

std::string format_double(double v) {
  if (!std::isfinite(v)) {
    return "null";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write(std::ostringstream& os, const ordered_json& v, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent >= 0) {
      os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
    }
  };
  switch (v.type()) {
    case ordered_json::value_t::object: {
      if (v.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) {
          os << ',';
        }
        first = false;
        newline(depth + 1);
        os << ordered_json(key).dump() << (indent >= 0 ? ": " : ":");
        write(os, item, indent, depth + 1);
      }
      newline(depth);
      os << '}';
      return;
    }
    case ordered_json::value_t::array: {
      if (v.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) {
          os << ',';
        }
        first = false;
        newline(depth + 1);
        write(os, item, indent, depth + 1);
      }
      newline(depth);
      os << ']';
      return;
    }
    case ordered_json::value_t::number_float:
      os << format_double(v.get<double>());
      return;
    default:
      os << v.dump();
      return;
  }
}

const char* tests_name(TestSelection t) {
  switch (t) {
    case TestSelection::forward:
      return "forward";
    case TestSelection::backward:
      return "backward";
    case TestSelection::all:
      break;
  }
  return "all";
}

ordered_json family_json(const BoundFamily& f) {
  return {{"name", f.name},
          {"checked", f.checked},
          {"violations", f.violations},
          {"vacuous", f.vacuous},
          {"min_slack", f.min_slack},
          {"min_slack_at", f.min_slack_at},
          {"max_slack", f.max_slack},
          {"max_slack_at", f.max_slack_at}};
}

}  // namespace

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["shape"] = c.shape;
  j["schedule"] = c.schedule.to_string();
  j["input"] = c.input;
  j["x_norm"] = c.x_norm;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["eps"] = c.eps;
  j["width_c"] = c.width_constant;
  j["zmax"] = c.z_max;
  j["layers"] = c.layers;
  j["neurons"] = c.neurons;
  j["tests"] = tests_name(c.tests);
  if (c.perturb) {
    j["perturb"] = {{"layer", c.perturb->layer}, {"factor", c.perturb->factor}};
  } else {
    j["perturb"] = nullptr;
  }
  j["max_width"] = c.max_width;
  return j;
}

ordered_json to_json(const MomentPrediction& p) {
  return {{"k", p.k},
          {"s_k", p.s_k},
          {"first_moment_exact", p.first_moment_exact},
          {"first_moment_lo", p.first_moment_lo},
          {"first_moment_hi", p.first_moment_hi},
          {"second_moment", p.second_moment},
          {"variance_lo", p.variance_lo},
          {"variance_hi", p.variance_hi},
          {"variance_lower_vacuous", p.variance_lower_vacuous},
          {"backward_variance", p.backward_variance},
          {"width_condition", p.width_condition}};
}

ordered_json to_json(const Verdict& v) {
  ordered_json j = {{"label", v.label},
                    {"k", v.k},
                    {"p", v.p},
                    {"predicted", v.predicted},
                    {"estimated", v.estimated},
                    {"std_error", v.std_error},
                    {"z", v.z_score},
                    {"pass", v.pass},
                    {"n_trials", v.n_trials}};
  if (v.is_interval) {
    j["lo"] = v.lo;
    j["hi"] = v.hi;
  }
  return j;
}

ordered_json to_json(const Report& r) {
  ordered_json j;
  j["config"] = to_json(r.experiment.config);
  j["config"]["x_norm"] = r.experiment.x_norm;
  j["predictions"] = ordered_json::array();
  for (const auto& p : r.predictions) {
    j["predictions"].push_back(to_json(p));
  }
  j["characterization"] = ordered_json::array();
  bool consistent = true;
  for (const auto& c : r.characterization) {
    consistent = consistent && c.consistent();
    j["characterization"].push_back({{"k", c.k},
                                     {"beta_is_fan_in", c.beta_is_fan_in},
                                     {"forward_preserved", c.forward_preserved},
                                     {"beta_is_fan_out", c.beta_is_fan_out},
                                     {"backward_preserved", c.backward_preserved}});
  }
  j["verdicts"] = ordered_json::array();
  for (const auto& v : r.verdicts) {
    j["verdicts"].push_back(to_json(v));
  }
  ordered_json skipped = ordered_json::array();
  for (const auto& s : r.skipped) {
    skipped.push_back({{"label", s.label}, {"k", s.k}, {"reason", s.reason}});
  }
  j["summary"] = {{"command", r.command},
                  {"total", r.verdicts.size()},
                  {"passed", r.passed()},
                  {"failed", r.verdicts.size() - r.passed()},
                  {"all_pass", r.all_pass()},
                  {"characterization_consistent", consistent},
                  {"skipped", skipped},
                  {"workers", r.experiment.config.workers},
                  {"wall_time_seconds", r.wall_time_seconds}};
  return j;
}

ordered_json to_json(const BoundsReport& r) {
  ordered_json j;
  j["config"] = {{"n_max", r.config.n_max},
                 {"i_max", r.config.i_max},
                 {"t_samples", r.config.t_samples},
                 {"seed", r.config.seed},
                 {"overflow_threshold", r.config.overflow_threshold}};
  j["bounds"] = ordered_json::array();
  for (const auto& f : r.families) {
    j["bounds"].push_back(family_json(f));
  }
  j["summary"] = {{"violations", r.violations()},
                  {"all_pass", r.violations() == 0},
                  {"max_b_ratio", r.max_b_ratio},
                  {"log_scaled_from", r.log_scaled_from},
                  {"wall_time_seconds", r.wall_time_seconds}};
  return j;
}

std::string dump_json(const ordered_json& value, int indent) {
  std::ostringstream os;
  write(os, value, indent, 0);
  os << '\n';
  return os.str();
}

std::string to_csv(const Report& r) {
  std::ostringstream os;
  os << "label,k,p,predicted,estimated,std_error,z,pass,n_trials\n";
  for (const auto& v : r.verdicts) {
    os << v.label << ',' << v.k << ',' << v.p << ',' << format_double(v.predicted) << ','
       << format_double(v.estimated) << ',' << format_double(v.std_error) << ','
       << format_double(v.z_score) << ',' << (v.pass ? "true" : "false") << ',' << v.n_trials
       << '\n';
  }
  return os.str();
}

std::string to_csv(const BoundsReport& r) {
  std::ostringstream os;
  os << "name,checked,violations,vacuous,min_slack,min_slack_at,max_slack,max_slack_at\n";
  for (const auto& f : r.families) {
    os << f.name << ',' << f.checked << ',' << f.violations << ',' << f.vacuous << ','
       << format_double(f.min_slack) << ',' << f.min_slack_at << ','
       << format_double(f.max_slack) << ',' << f.max_slack_at << '\n';
  }
  return os.str();
}

std::string render(const Report& report, OutputFormat format) {
  return format == OutputFormat::csv ? to_csv(report) : dump_json(to_json(report));
}

std::string render(const BoundsReport& report, OutputFormat format) {
  return format == OutputFormat::csv ? to_csv(report) : dump_json(to_json(report));
}

}  // namespace reluinit
