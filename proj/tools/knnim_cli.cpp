#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

using namespace knnim::cli;

void add_design_options(CLI::App* cmd, DesignOptions& d) {
  cmd->add_option("--design", d.design, "crd or bernoulli")
      ->check(CLI::IsMember({"crd", "bernoulli"}))
      ->capture_default_str();
  cmd->add_option("--treated", d.treated, "number treated under crd");
  cmd->add_option("--p", d.p, "treatment probability under bernoulli")->capture_default_str();
}

int default_threads() {
  if (const char* v = std::getenv("KNNIM_THREADS")) {
    try {
      const int t = std::stoi(v);
      if (t >= 1) return t;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring KNNIM_THREADS='" << v << "'\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-based effect estimation under K-nearest-neighbors interference"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags win");
  app.require_subcommand(1);

  AnalyzeOptions analyze;
  auto* a = app.add_subcommand("analyze", "estimate effects from observed data");
  a->add_option("--units", analyze.units, "CSV with header id,treatment,response")->required();
  a->add_option("--distances", analyze.distances, "CSV src,dst,distance or src,dst,rank")->required();
  a->add_option("--k", analyze.k, "neighborhood size")->capture_default_str();
  add_design_options(a, analyze.design);
  a->add_option("--assumptions", analyze.assumptions, "a1, a2 or both")
      ->check(CLI::IsMember({"a1", "a2", "both"}))
      ->capture_default_str();
  a->add_option("--c1", analyze.c1, "pooling weight on the treated-neighbor contrast")->capture_default_str();
  a->add_option("--c2", analyze.c2, "pooling weight on the control-neighbor contrast")->capture_default_str();
  a->add_option("--z", analyze.z, "critical value for confidence intervals")->capture_default_str();
  a->add_option("--low-count", analyze.low_count, "warn when an exposure has fewer units")
      ->capture_default_str();
  a->add_option("--format", analyze.format, "csv or json")->capture_default_str();
  a->add_option("--out", analyze.out, "report path (default stdout)");
  a->add_option("--counts", analyze.counts, "exposure-count grid path (default stderr)");

  SimulateOptions simulate;
  simulate.threads = default_threads();
  auto* s = app.add_subcommand("simulate", "run the synthetic simulation study");
  s->add_option("--model", simulate.model, "interference model 1..9")
      ->check(CLI::Range(1, 9))
      ->capture_default_str();
  s->add_option("--design", simulate.design, "crd or bernoulli")
      ->check(CLI::IsMember({"crd", "bernoulli"}))
      ->capture_default_str();
  s->add_option("--n", simulate.n, "population size")->capture_default_str();
  s->add_option("--reps", simulate.reps, "replications")->capture_default_str();
  s->add_option("--seed", simulate.seed, "random seed")->capture_default_str();
  s->add_flag("--redraw-population", simulate.redraw_population, "draw a new population every replication");
  s->add_option("--threads", simulate.threads, "worker threads (env KNNIM_THREADS)")->capture_default_str();
  s->add_option("--format", simulate.format, "csv or json")->capture_default_str();
  s->add_option("--out", simulate.out, "output path (default stdout)");

  ProbabilitiesOptions probs;
  auto* p = app.add_subcommand("probabilities", "dump exposure probabilities");
  p->add_option("--distances", probs.distances, "CSV src,dst,distance or src,dst,rank")->required();
  p->add_option("--units", probs.units, "units CSV fixing the id order");
  p->add_option("--k", probs.k, "neighborhood size")->capture_default_str();
  add_design_options(p, probs.design);
  p->add_option("--unit", probs.unit, "only this unit");
  p->add_option("--pair", probs.pair, "also print joint probabilities for units a,b");
  p->add_option("--format", probs.format, "csv or json")->capture_default_str();
  p->add_option("--out", probs.out, "output path (default stdout)");

  OracleOptions oracle;
  auto* o = app.add_subcommand("oracle", "verify closed forms against exhaustive enumeration");
  o->add_option("--seed", oracle.seed, "battery seed")->capture_default_str();
  o->add_option("--instances", oracle.instances, "random probability instances")->capture_default_str();
  o->add_option("--tables", oracle.tables, "potential-outcome tables per configuration")
      ->capture_default_str();
  o->add_option("--max-n", oracle.max_n, "largest population enumerated")->capture_default_str();
  o->add_option("--max-k", oracle.max_k, "largest neighborhood size")->capture_default_str();
  o->add_option("--estimator-n", oracle.estimator_n, "population size for estimator checks")
      ->capture_default_str();
  o->add_option("--guard", oracle.guard, "maximum assignments per enumeration")->capture_default_str();
  o->add_option("--format", oracle.format, "text or json")->capture_default_str();
  o->add_option("--out", oracle.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*a) return run_analyze(analyze, std::cout, std::cerr);
    if (*s) return run_simulate(simulate, std::cout, std::cerr);
    if (*p) return run_probabilities(probs, std::cout, std::cerr);
    return run_oracle(oracle, std::cout, std::cerr);
  } catch (...) {
    return report_exception(std::cerr);
  }
}
