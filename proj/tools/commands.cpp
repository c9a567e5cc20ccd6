#include "commands.hpp"

#include "knnim/estimators.hpp"
#include "knnim/experiment.hpp"
#include "knnim/io.hpp"
#include "knnim/oracle.hpp"
#include "knnim/sim.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace knnim::cli {

namespace {

// Writes the finished report in one go so partial output never lands on disk.
void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << text;
  if (!f) throw InputError("failed writing '" + path + "'");
}

void check_format(const std::string& format, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (format == a) return;
  }
  throw InputError("unsupported format '" + format + "'");
}

Design make_design(const DesignOptions& o, int n, int observed_treated) {
  if (o.design == "crd") {
    return Design::completely_randomized(n, o.treated.value_or(observed_treated));
  }
  if (o.design == "bernoulli") return Design::bernoulli(n, o.p);
  throw InputError("unknown design '" + o.design + "' (expected crd or bernoulli)");
}

bool wanted(Assumption a, EffectKind kind, const std::string& which) {
  if (kind == EffectKind::total || which == "both") return true;
  return parse_assumption(which) == a;
}

std::string full(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string quoted(const std::string& s) { return '"' + s + '"'; }

// Exposures with own treatment first, then neighbor patterns in display order.
std::vector<Exposure> display_exposures(int k) {
  std::vector<Exposure> out;
  for (bool own : {true, false}) {
    for (auto p : display_pattern_order(k)) out.emplace_back(own, p, k);
  }
  return out;
}

}  // namespace

int run_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  check_format(o.format, {"csv", "json"});
  if (o.assumptions != "both") parse_assumption(o.assumptions);
  const Weights weights(o.c1, o.c2);

  io::UnitsTable units = io::read_units_file(o.units);
  const int n = static_cast<int>(units.ids.size());
  if (o.k < 1 || n < o.k + 2) {
    throw InputError("K = " + std::to_string(o.k) + " is too large for " + std::to_string(n) +
                     " units (need N >= K + 2)");
  }
  const DistanceMatrix distances = io::read_distances_file(o.distances, units.ids);
  KNeighborhoods nbr = build_k_neighborhoods(distances, o.k);
  const ExposureCounts counts = exposure_counts(nbr, units.assignment);
  Design design = make_design(o.design, n, units.assignment.treated_count());
  const std::string design_name = design.to_string();
  const ExperimentData data(std::move(nbr), std::move(design), units.assignment, units.responses);

  std::vector<EffectEstimate> rows;
  for (const auto& e : estimate_all(data, weights)) {
    if (wanted(e.assumption, e.effect.kind, o.assumptions)) rows.push_back(e);
  }
  io::AnalysisReport report = io::make_report(rows, counts, design_name, o.z);
  for (const auto& w : low_count_exposures(data, o.low_count)) {
    report.warnings.push_back("exposure " + w.exposure.to_string() + " observed on " +
                              std::to_string(w.count) + " units (< " + std::to_string(o.low_count) + ")");
  }
  for (const auto& r : rows) {
    if (r.variance_floored) {
      report.warnings.push_back("variance estimate for " + r.effect.name() + "/" + to_string(r.assumption) +
                                " was negative and set to 0");
    }
  }
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';

  std::ostringstream text;
  if (o.format == "json") {
    io::write_report_json(text, report);
  } else {
    io::write_estimates_csv(text, report.rows);
    std::ostringstream grid;
    io::write_counts_csv(grid, counts);
    if (o.counts.empty()) {
      err << "exposure counts:\n" << grid.str();
    } else {
      emit(grid.str(), o.counts, out);
    }
  }
  emit(text.str(), o.out, out);
  return kOk;
}

int run_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  check_format(o.format, {"csv", "json"});
  sim::SimConfig cfg;
  cfg.model_id = o.model;
  cfg.design = sim::parse_design_kind(o.design);
  cfg.n = o.n;
  cfg.reps = o.reps;
  cfg.seed = o.seed;
  cfg.redraw_population = o.redraw_population;
  cfg.threads = o.threads;
  const sim::SimSummary s = sim::run_simulation(cfg);
  std::ostringstream text;
  if (o.format == "json") {
    io::write_simulation_json(text, s);
  } else {
    io::write_simulation_csv(text, s);
  }
  emit(text.str(), o.out, out);
  if (s.floored_variances > 0) {
    err << "warning: " << s.floored_variances << " variance estimates were negative and set to 0\n";
  }
  err << "max decomposition residual: " << s.max_decomposition_residual << '\n';
  return kOk;
}

int run_probabilities(const ProbabilitiesOptions& o, std::ostream& out, std::ostream&) {
  check_format(o.format, {"csv", "json"});
  const std::vector<std::string> ids =
      o.units.empty() ? io::ids_from_distances_file(o.distances) : io::read_units_file(o.units).ids;
  const int n = static_cast<int>(ids.size());
  if (n < 2) throw InputError("need at least two units");
  auto find = [&](const std::string& id) {
    for (int i = 0; i < n; ++i) {
      if (ids[static_cast<std::size_t>(i)] == id) return i;
    }
    throw InputError("unknown unit '" + id + "'");
  };
  KNeighborhoods nbr = build_k_neighborhoods(io::read_distances_file(o.distances, ids), o.k);
  const Design design = make_design(o.design, n, n / 2);
  const InterferenceDesign structure(std::move(nbr), design);
  const auto exposures = display_exposures(o.k);

  std::vector<int> selected;
  if (o.unit.empty()) {
    for (int i = 0; i < n; ++i) selected.push_back(i);
  } else {
    selected.push_back(find(o.unit));
  }

  std::ostringstream text;
  nlohmann::json j;
  if (o.format == "json") {
    j["design"] = design.to_string();
    j["k"] = o.k;
  } else {
    text << "unit,exposure,probability\n";
  }
  for (int i : selected) {
    for (const auto& e : exposures) {
      const double p = structure.marginal(i, e);
      if (o.format == "json") {
        j["marginals"].push_back({{"unit", ids[static_cast<std::size_t>(i)]}, {"exposure", e.to_string()},
                                  {"probability", p}});
      } else {
        text << ids[static_cast<std::size_t>(i)] << ',' << quoted(e.to_string()) << ',' << full(p) << '\n';
      }
    }
  }
  if (!o.pair.empty()) {
    const auto comma = o.pair.find(',');
    if (comma == std::string::npos) throw InputError("--pair expects 'a,b'");
    const int a = find(o.pair.substr(0, comma));
    const int b = find(o.pair.substr(comma + 1));
    if (a == b) throw InputError("--pair needs two different units");
    if (o.format != "json") text << "\nunit_a,exposure_a,unit_b,exposure_b,probability\n";
    for (const auto& ea : exposures) {
      for (const auto& eb : exposures) {
        const double p = structure.joint(a, ea, b, eb);
        const auto& ia = ids[static_cast<std::size_t>(a)];
        const auto& ib = ids[static_cast<std::size_t>(b)];
        if (o.format == "json") {
          j["joints"].push_back({{"unit_a", ia}, {"exposure_a", ea.to_string()}, {"unit_b", ib},
                                 {"exposure_b", eb.to_string()}, {"probability", p}});
        } else {
          text << ia << ',' << quoted(ea.to_string()) << ',' << ib << ',' << quoted(eb.to_string()) << ','
               << full(p) << '\n';
        }
      }
    }
  }
  if (o.format == "json") text << j.dump(2) << '\n';
  emit(text.str(), o.out, out);
  return kOk;
}

int run_oracle(const OracleOptions& o, std::ostream& out, std::ostream&) {
  check_format(o.format, {"text", "json"});
  oracle::BatteryOptions b;
  b.seed = o.seed;
  b.probability_instances = o.instances;
  b.outcome_tables = o.tables;
  b.max_n = o.max_n;
  b.max_k = o.max_k;
  b.estimator_n = o.estimator_n;
  b.guard = o.guard;
  const oracle::BatteryReport report = oracle::run_battery(b);

  std::ostringstream text;
  if (o.format == "json") {
    nlohmann::json j;
    j["seed"] = o.seed;
    j["passed"] = report.passed();
    for (const auto& c : report.checks) {
      j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"worst", c.worst},
                             {"tolerance", c.tolerance}, {"cases", c.cases}, {"detail", c.detail}});
    }
    text << j.dump(2) << '\n';
  } else {
    for (const auto& c : report.checks) {
      char line[256];
      std::snprintf(line, sizeof line, "%s %-24s worst=%.3e tol=%.1e cases=%d", c.passed ? "PASS" : "FAIL",
                    c.name.c_str(), c.worst, c.tolerance, c.cases);
      text << line;
      if (!c.detail.empty()) text << "  " << c.detail;
      text << '\n';
    }
    text << (report.passed() ? "oracle: all checks passed\n" : "oracle: FAILED\n");
  }
  emit(text.str(), o.out, out);
  return report.passed() ? kOk : kOracleFailure;
}

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const oracle::GuardError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const DesignError& e) {
    err << "design error: " << e.what() << '\n';
    return kDesignError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}

}  // namespace knnim::cli
