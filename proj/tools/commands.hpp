#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace knnim::cli {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kInputError = 2,
  kDesignError = 3,
  kOracleFailure = 4,
};

struct DesignOptions {
  std::string design = "crd";
  std::optional<int> treated;  // CRD; defaults to the observed count or n / 2
  double p = 0.5;              // Bernoulli
};

struct AnalyzeOptions {
  std::string units;
  std::string distances;
  int k = 2;
  DesignOptions design;
  std::string assumptions = "both";
  double c1 = 0.5;
  double c2 = 0.5;
  double z = 1.96;
  std::string format = "csv";
  std::string out;     // empty: stdout
  std::string counts;  // exposure-count grid; empty: stderr
  long low_count = 30;
};

struct SimulateOptions {
  int model = 1;
  std::string design = "crd";
  int n = 256;
  int reps = 1000;
  std::uint64_t seed = 1;
  bool redraw_population = false;
  int threads = 1;
  std::string format = "csv";
  std::string out;
};

struct ProbabilitiesOptions {
  std::string distances;
  std::string units;  // optional; only the id order is used
  int k = 1;
  DesignOptions design;
  std::string unit;  // empty: every unit
  std::string pair;  // "a,b": joint table for units a and b
  std::string format = "csv";
  std::string out;
};

struct OracleOptions {
  std::uint64_t seed = 20240611;
  int instances = 50;
  int tables = 20;
  int max_n = 12;
  int max_k = 3;
  int estimator_n = 8;
  std::uint64_t guard = 1'000'000;
  std::string format = "text";
  std::string out;
};

// Each command writes its report to options.out (or `out`) and diagnostics
// to `err`; the return value is the process exit code. Library exceptions
// propagate to the caller.
int run_analyze(const AnalyzeOptions& options, std::ostream& out, std::ostream& err);
int run_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);
int run_probabilities(const ProbabilitiesOptions& options, std::ostream& out, std::ostream& err);
int run_oracle(const OracleOptions& options, std::ostream& out, std::ostream& err);

/// Maps the current exception to an exit code and prints it to `err`.
int report_exception(std::ostream& err);

}  // namespace knnim::cli
