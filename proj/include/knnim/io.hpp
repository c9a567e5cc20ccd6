#pragma once

#include "knnim/estimators.hpp"
#include "knnim/model.hpp"
#include "knnim/sim.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace knnim::io {

/// Contents of a units file: header `id,treatment,response`, one row per unit.
/// Ids are arbitrary strings; unit indices follow file order.
struct UnitsTable {
  std::vector<std::string> ids;
  Assignment assignment;
  VectorXd responses;
};

UnitsTable read_units(std::istream& in);
UnitsTable read_units_file(const std::string& path);

/// Reads `src,dst,distance` or `src,dst,rank` rows into a matrix over `ids`.
/// Pairs that never appear stay at +infinity. Row src holds src's view of dst.
DistanceMatrix read_distances(std::istream& in, const std::vector<std::string>& ids);
DistanceMatrix read_distances_file(const std::string& path, const std::vector<std::string>& ids);

/// Unit ids in order of first appearance in a distances file.
std::vector<std::string> ids_from_distances_file(const std::string& path);

/// Fixed-point with four fractional digits; never prints "-0.0000".
std::string fixed4(double x);

struct ReportRow {
  std::string estimator;
  std::string assumption;
  double estimate = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;

  bool operator==(const ReportRow&) const = default;
};

struct AnalysisReport {
  int k = 0;
  std::string design;
  double z = 1.96;
  std::vector<ReportRow> rows;
  ExposureCounts counts;
  std::vector<std::string> warnings;
};

AnalysisReport make_report(const std::vector<EffectEstimate>& estimates, const ExposureCounts& counts,
                           const std::string& design, double z);

inline const char* kEstimatesHeader = "estimator,assumption,estimate,se,ci_lower,ci_upper";

void write_estimates_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_estimates_csv(std::istream& in);

/// Exposure-count grid: a header of neighbor patterns, then a treated row and
/// a control row.
void write_counts_csv(std::ostream& out, const ExposureCounts& counts);

void write_report_json(std::ostream& out, const AnalysisReport& report);
AnalysisReport read_report_json(std::istream& in);

inline const char* kSimulationHeader =
    "estimator,assumption,truth,emp_ev,emp_var,emp_sd,mean_var_est";

void write_simulation_csv(std::ostream& out, const sim::SimSummary& summary);
void write_simulation_json(std::ostream& out, const sim::SimSummary& summary);

}  // namespace knnim::io
