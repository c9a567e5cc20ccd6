#include "knnim/io.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/tokenizer.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

namespace knnim::io {

namespace {

using Json = nlohmann::json;

std::vector<std::string> split_csv(const std::string& line, int line_no) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::vector<std::string> fields;
  try {
    Tokenizer tok(line);
    for (auto f : tok) {
      boost::algorithm::trim(f);
      fields.push_back(std::move(f));
    }
  } catch (const boost::escaped_list_error& e) {
    throw InputError("line " + std::to_string(line_no) + ": " + e.what());
  }
  return fields;
}

// Yields non-blank lines with their 1-based line numbers.
template <typename F>
void for_each_line(std::istream& in, F&& f) {
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (boost::algorithm::trim_copy(line).empty()) continue;
    f(line, no);
  }
}

double parse_number(const std::string& s, int line_no, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw InputError("line " + std::to_string(line_no) + ": " + what + " '" + s + "' is not a number");
  }
  return v;
}

std::ifstream open(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  return f;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

}  // namespace

UnitsTable read_units(std::istream& in) {
  UnitsTable t;
  std::vector<std::uint8_t> bits;
  std::vector<double> y;
  std::unordered_map<std::string, int> seen;
  bool header = false;
  for_each_line(in, [&](const std::string& line, int no) {
    const auto f = split_csv(line, no);
    if (!header) {
      if (f != std::vector<std::string>{"id", "treatment", "response"}) {
        throw InputError("units file header must be 'id,treatment,response', got '" + join(f) + "'");
      }
      header = true;
      return;
    }
    if (f.size() != 3) throw InputError("line " + std::to_string(no) + ": expected 3 fields");
    if (f[0].empty()) throw InputError("line " + std::to_string(no) + ": empty id");
    if (!seen.emplace(f[0], static_cast<int>(t.ids.size())).second) {
      throw InputError("line " + std::to_string(no) + ": duplicate id '" + f[0] + "'");
    }
    if (f[1] != "0" && f[1] != "1") {
      throw InputError("line " + std::to_string(no) + ": treatment must be 0 or 1");
    }
    const double r = parse_number(f[2], no, "response");
    if (!std::isfinite(r)) throw InputError("line " + std::to_string(no) + ": response is not finite");
    t.ids.push_back(f[0]);
    bits.push_back(f[1] == "1" ? 1 : 0);
    y.push_back(r);
  });
  if (!header) throw InputError("units file is empty");
  if (t.ids.empty()) throw InputError("units file has no rows");
  t.assignment = Assignment(std::move(bits));
  t.responses = Eigen::Map<const VectorXd>(y.data(), static_cast<Index>(y.size()));
  return t;
}

UnitsTable read_units_file(const std::string& path) {
  auto f = open(path);
  return read_units(f);
}

DistanceMatrix read_distances(std::istream& in, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, Index> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], static_cast<Index>(i));
  const auto n = static_cast<Index>(ids.size());
  MatrixXd d = MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
  d.diagonal().setZero();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> filled =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  bool header = false;
  for_each_line(in, [&](const std::string& line, int no) {
    const auto f = split_csv(line, no);
    if (!header) {
      if (f.size() != 3 || f[0] != "src" || f[1] != "dst" || (f[2] != "distance" && f[2] != "rank")) {
        throw InputError("distances header must be 'src,dst,distance' or 'src,dst,rank', got '" +
                         join(f) + "'");
      }
      header = true;
      return;
    }
    if (f.size() != 3) throw InputError("line " + std::to_string(no) + ": expected 3 fields");
    auto lookup = [&](const std::string& id) {
      auto it = index.find(id);
      if (it == index.end()) throw InputError("line " + std::to_string(no) + ": unknown unit '" + id + "'");
      return it->second;
    };
    const Index a = lookup(f[0]);
    const Index b = lookup(f[1]);
    const double v = parse_number(f[2], no, "distance");
    if (std::isnan(v) || v < 0) throw InputError("line " + std::to_string(no) + ": distance must be >= 0");
    if (a == b) return;
    if (filled(a, b)) {
      throw InputError("line " + std::to_string(no) + ": duplicate pair " + f[0] + " -> " + f[1]);
    }
    filled(a, b) = true;
    d(a, b) = v;
  });
  if (!header) throw InputError("distances file is empty");
  return DistanceMatrix(std::move(d));
}

DistanceMatrix read_distances_file(const std::string& path, const std::vector<std::string>& ids) {
  auto f = open(path);
  return read_distances(f, ids);
}

std::vector<std::string> ids_from_distances_file(const std::string& path) {
  auto in = open(path);
  std::vector<std::string> ids;
  std::unordered_map<std::string, bool> seen;
  bool header = false;
  for_each_line(in, [&](const std::string& line, int no) {
    const auto f = split_csv(line, no);
    if (!header) {
      header = true;
      return;
    }
    if (f.size() != 3) throw InputError("line " + std::to_string(no) + ": expected 3 fields");
    for (int c = 0; c < 2; ++c) {
      if (seen.emplace(f[static_cast<std::size_t>(c)], true).second) ids.push_back(f[static_cast<std::size_t>(c)]);
    }
  });
  return ids;
}

std::string fixed4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

AnalysisReport make_report(const std::vector<EffectEstimate>& estimates, const ExposureCounts& counts,
                           const std::string& design, double z) {
  AnalysisReport r;
  r.k = counts.k;
  r.design = design;
  r.z = z;
  r.counts = counts;
  for (const auto& e : estimates) {
    r.rows.push_back({e.effect.name(), to_string(e.assumption), e.estimate, e.se, e.estimate - z * e.se,
                      e.estimate + z * e.se});
  }
  return r;
}

void write_estimates_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << kEstimatesHeader << '\n';
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.assumption << ',' << fixed4(r.estimate) << ',' << fixed4(r.se) << ','
        << fixed4(r.ci_lower) << ',' << fixed4(r.ci_upper) << '\n';
  }
}

std::vector<ReportRow> read_estimates_csv(std::istream& in) {
  std::vector<ReportRow> rows;
  bool header = false;
  for_each_line(in, [&](const std::string& line, int no) {
    const auto f = split_csv(line, no);
    if (!header) {
      if (join(f) != kEstimatesHeader) throw InputError("unexpected estimates header '" + join(f) + "'");
      header = true;
      return;
    }
    if (f.size() != 6) throw InputError("line " + std::to_string(no) + ": expected 6 fields");
    rows.push_back({f[0], f[1], parse_number(f[2], no, "estimate"), parse_number(f[3], no, "se"),
                    parse_number(f[4], no, "ci_lower"), parse_number(f[5], no, "ci_upper")});
  });
  return rows;
}

void write_counts_csv(std::ostream& out, const ExposureCounts& counts) {
  const auto order = display_pattern_order(counts.k);
  out << "treatment";
  for (auto p : order) out << ",\"" << Exposure(false, p, counts.k).pattern_string() << '"';
  out << '\n';
  for (int own : {1, 0}) {
    out << (own ? "treated" : "control");
    for (auto p : order) out << ',' << counts.cells(own, static_cast<Index>(p));
    out << '\n';
  }
}

namespace {

Json counts_json(const ExposureCounts& c) {
  Json j;
  j["k"] = c.k;
  Json treated = Json::array(), control = Json::array();
  for (Index p = 0; p < c.cells.cols(); ++p) {
    treated.push_back(c.cells(1, p));
    control.push_back(c.cells(0, p));
  }
  j["treated"] = treated;
  j["control"] = control;
  return j;
}

ExposureCounts counts_from_json(const Json& j) {
  ExposureCounts c;
  c.k = j.at("k").get<int>();
  const auto& t = j.at("treated");
  const auto& u = j.at("control");
  if (t.size() != u.size() || t.size() != (std::size_t{1} << c.k)) {
    throw InputError("exposure count arrays have the wrong length");
  }
  c.cells.resize(2, static_cast<Index>(t.size()));
  for (std::size_t p = 0; p < t.size(); ++p) {
    c.cells(1, static_cast<Index>(p)) = t[p].get<long>();
    c.cells(0, static_cast<Index>(p)) = u[p].get<long>();
  }
  return c;
}

}  // namespace

void write_report_json(std::ostream& out, const AnalysisReport& report) {
  Json j;
  j["k"] = report.k;
  j["design"] = report.design;
  j["z"] = report.z;
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"estimator", r.estimator},
                    {"assumption", r.assumption},
                    {"estimate", r.estimate},
                    {"se", r.se},
                    {"ci_lower", r.ci_lower},
                    {"ci_upper", r.ci_upper}});
  }
  j["estimates"] = rows;
  j["exposure_counts"] = counts_json(report.counts);
  j["warnings"] = report.warnings;
  out << j.dump(2) << '\n';
}

AnalysisReport read_report_json(std::istream& in) {
  Json j;
  try {
    in >> j;
    AnalysisReport r;
    r.k = j.at("k").get<int>();
    r.design = j.at("design").get<std::string>();
    r.z = j.at("z").get<double>();
    for (const auto& row : j.at("estimates")) {
      r.rows.push_back({row.at("estimator").get<std::string>(), row.at("assumption").get<std::string>(),
                        row.at("estimate").get<double>(), row.at("se").get<double>(),
                        row.at("ci_lower").get<double>(), row.at("ci_upper").get<double>()});
    }
    r.counts = counts_from_json(j.at("exposure_counts"));
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }
}

void write_simulation_csv(std::ostream& out, const sim::SimSummary& s) {
  out << kSimulationHeader << '\n';
  for (const auto& r : s.rows) {
    out << r.effect.name() << ',' << to_string(r.assumption) << ',' << fixed4(r.truth) << ','
        << fixed4(r.emp_ev) << ',' << fixed4(r.emp_var) << ',' << fixed4(r.emp_sd) << ','
        << fixed4(r.mean_var_est) << '\n';
  }
}

void write_simulation_json(std::ostream& out, const sim::SimSummary& s) {
  Json j;
  j["model"] = s.config.model_id;
  j["design"] = sim::to_string(s.config.design);
  j["n"] = s.config.n;
  j["reps"] = s.config.reps;
  j["seed"] = s.config.seed;
  j["redraw_population"] = s.config.redraw_population;
  j["max_decomposition_residual"] = s.max_decomposition_residual;
  j["floored_variances"] = s.floored_variances;
  Json rows = Json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"estimator", r.effect.name()},
                    {"assumption", to_string(r.assumption)},
                    {"truth", r.truth},
                    {"emp_ev", r.emp_ev},
                    {"emp_var", r.emp_var},
                    {"emp_sd", r.emp_sd},
                    {"mean_var_est", r.mean_var_est}});
  }
  j["rows"] = rows;
  out << j.dump(2) << '\n';
}

}  // namespace knnim::io
