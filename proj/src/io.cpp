#include "shrinkage/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "shrinkage/errors.hpp"

namespace shrinkage {

namespace {

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

// Splits one CSV line, honoring double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (in_quotes) {
    throw ValidationError("line " + std::to_string(line_no) + ": unterminated quoted field");
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t lo = 0;
  std::size_t hi = s.size();
  while (lo < hi && (s[lo] == ' ' || s[lo] == '\t' || s[lo] == '\r')) ++lo;
  while (hi > lo && (s[hi - 1] == ' ' || s[hi - 1] == '\t' || s[hi - 1] == '\r')) --hi;
  return s.substr(lo, hi - lo);
}

double parse_double(const std::string& raw, const std::string& what, int line_no) {
  const std::string s = trim(raw);
  if (s.empty()) {
    throw ValidationError("line " + std::to_string(line_no) + ": empty " + what);
  }
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw ValidationError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" +
                          s + "'");
  }
  return value;
}

std::uint64_t parse_uint64(const std::string& raw, const std::string& what, int line_no) {
  const std::string s = trim(raw);
  if (s.empty()) {
    throw ValidationError("line " + std::to_string(line_no) + ": empty " + what);
  }
  errno = 0;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw ValidationError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" +
                          s + "'");
  }
  return static_cast<std::uint64_t>(value);
}

bool parse_bool(const std::string& raw, const std::string& what, int line_no) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ValidationError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s +
                        "' (expected true/false/1/0)");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

// Reads every nonempty line; returns them with 1-based line numbers.
std::vector<std::pair<int, std::string>> read_lines(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<std::pair<int, std::string>> lines;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    lines.emplace_back(line_no, line);
  }
  if (in.bad()) throw IoError("read from '" + path + "' failed");
  return lines;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == name) return static_cast<int>(i);
  }
  return -1;
}

int require_column(const std::vector<std::string>& header, const std::string& name) {
  const int idx = find_column(header, name);
  if (idx < 0) throw ValidationError("missing required column '" + name + "'");
  return idx;
}

const std::string& field_at(const std::vector<std::string>& fields, int idx, int line_no) {
  if (idx < 0 || static_cast<std::size_t>(idx) >= fields.size()) {
    throw ValidationError("line " + std::to_string(line_no) + ": too few fields");
  }
  return fields[static_cast<std::size_t>(idx)];
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

CorpusReadResult read_corpus_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ValidationError("'" + path + "' is empty");
  const auto header = split_csv_line(lines[0].second, lines[0].first);
  const int col_id = require_column(header, "id");
  const int col_theta = require_column(header, "theta_hat");
  const int col_sigma = require_column(header, "sigma_hat");
  const int col_selected = find_column(header, "selected");
  const int col_rep_theta = find_column(header, "replication_theta_hat");
  const int col_rep_sigma = find_column(header, "replication_sigma_hat");

  CorpusReadResult result;
  result.selected_column_present = col_selected >= 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = lines[i].first;
    const auto fields = split_csv_line(lines[i].second, line_no);
    ExperimentSummary exp;
    exp.id = trim(field_at(fields, col_id, line_no));
    if (exp.id.empty()) {
      throw ValidationError("line " + std::to_string(line_no) + ": empty id");
    }
    exp.theta_hat = parse_double(field_at(fields, col_theta, line_no), "theta_hat", line_no);
    exp.sigma_hat = parse_double(field_at(fields, col_sigma, line_no), "sigma_hat", line_no);
    exp.selected = true;
    if (col_selected >= 0 && !trim(field_at(fields, col_selected, line_no)).empty()) {
      exp.selected = parse_bool(fields[static_cast<std::size_t>(col_selected)], "selected",
                                line_no);
    }
    if (col_rep_theta >= 0 && static_cast<std::size_t>(col_rep_theta) < fields.size() &&
        !trim(fields[static_cast<std::size_t>(col_rep_theta)]).empty()) {
      exp.replication_theta_hat = parse_double(fields[static_cast<std::size_t>(col_rep_theta)],
                                               "replication_theta_hat", line_no);
    }
    if (col_rep_sigma >= 0 && static_cast<std::size_t>(col_rep_sigma) < fields.size() &&
        !trim(fields[static_cast<std::size_t>(col_rep_sigma)]).empty()) {
      exp.replication_sigma_hat = parse_double(fields[static_cast<std::size_t>(col_rep_sigma)],
                                               "replication_sigma_hat", line_no);
    }
    try {
      exp.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    result.experiments.push_back(std::move(exp));
  }
  if (result.experiments.empty()) {
    throw ValidationError("'" + path + "' has a header but no data rows");
  }
  return result;
}

void write_corpus_csv(const std::string& path, const std::vector<ExperimentSummary>& corpus) {
  std::ofstream out = open_output(path);
  out << "id,theta_hat,sigma_hat,selected,replication_theta_hat,replication_sigma_hat\n";
  for (const ExperimentSummary& exp : corpus) {
    out << quote_if_needed(exp.id) << ',' << format_double(exp.theta_hat) << ','
        << format_double(exp.sigma_hat) << ',' << (exp.selected ? "true" : "false") << ',';
    if (exp.replication_theta_hat) out << format_double(*exp.replication_theta_hat);
    out << ',';
    if (exp.replication_sigma_hat) out << format_double(*exp.replication_sigma_hat);
    out << '\n';
  }
  finish_output(out, path);
}

std::vector<UnitLevelGroup> read_unit_level_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ValidationError("'" + path + "' is empty");
  const auto header = split_csv_line(lines[0].second, lines[0].first);
  const int col_exp = require_column(header, "experiment_id");
  const int col_unit = require_column(header, "unit_id");
  const int col_z = require_column(header, "z");
  const int col_y = require_column(header, "y");

  std::vector<UnitLevelGroup> groups;
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = lines[i].first;
    const auto fields = split_csv_line(lines[i].second, line_no);
    const std::string id = trim(field_at(fields, col_exp, line_no));
    if (id.empty()) {
      throw ValidationError("line " + std::to_string(line_no) + ": empty experiment_id");
    }
    if (trim(field_at(fields, col_unit, line_no)).empty()) {
      throw ValidationError("line " + std::to_string(line_no) + ": empty unit_id");
    }
    const double z = parse_double(field_at(fields, col_z, line_no), "z", line_no);
    if (z != 0.0 && z != 1.0) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": z must be 0 or 1, got '" + trim(fields[static_cast<std::size_t>(col_z)]) + "'");
    }
    const double y = parse_double(field_at(fields, col_y, line_no), "y", line_no);
    auto found = index_of.find(id);
    if (found == index_of.end()) {
      found = index_of.emplace(id, groups.size()).first;
      groups.push_back(UnitLevelGroup{id, {}});
    }
    UnitLevelData& data = groups[found->second].data;
    data.outcomes.push_back(y);
    data.assignments.push_back(static_cast<int>(z));
  }
  if (groups.empty()) {
    throw ValidationError("'" + path + "' has a header but no data rows");
  }
  for (const UnitLevelGroup& group : groups) {
    try {
      group.data.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("experiment '" + group.id + "': " + e.what());
    }
  }
  return groups;
}

void write_estimates_csv(const std::string& path, const std::vector<ExperimentSummary>& corpus,
                         const std::vector<PosteriorSummary>& estimates) {
  if (corpus.size() != estimates.size()) {
    throw ValidationError("corpus and estimate lists must have equal length");
  }
  std::ofstream out = open_output(path);
  out << "id,method,mean,variance,interval_low,interval_high,level,lambda_used,"
         "lambda_converged\n";
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const PosteriorSummary& est = estimates[i];
    out << quote_if_needed(corpus[i].id) << ',' << to_string(est.method) << ','
        << format_double(est.mean) << ',' << format_double(est.variance) << ','
        << format_double(est.interval_low) << ',' << format_double(est.interval_high) << ','
        << format_double(est.level) << ',';
    if (est.lambda_used) out << format_double(*est.lambda_used);
    out << ',' << (est.lambda_converged ? "true" : "false") << '\n';
  }
  finish_output(out, path);
}

std::uint64_t corpus_fingerprint(const std::vector<ExperimentSummary>& corpus) {
  std::uint64_t hash = 14695981039346656037ull;
  const auto feed = [&hash](const std::string& bytes) {
    for (unsigned char c : bytes) {
      hash ^= c;
      hash *= 1099511628211ull;
    }
  };
  for (const ExperimentSummary& exp : corpus) {
    feed(exp.id);
    feed("\x1f");
    feed(format_double(exp.theta_hat));
    feed("\x1f");
    feed(format_double(exp.sigma_hat));
    feed("\x1f");
    feed(exp.selected ? "1" : "0");
    feed("\x1f");
    feed(exp.replication_theta_hat ? format_double(*exp.replication_theta_hat) : "-");
    feed("\x1f");
    feed(exp.replication_sigma_hat ? format_double(*exp.replication_sigma_hat) : "-");
    feed("\n");
  }
  return hash;
}

void write_calibration_artifact(const std::string& path, const CalibrationArtifact& artifact) {
  std::ofstream out = open_output(path);
  out << "shrinkage_calibration_version = " << artifact.version << '\n';
  out << "method = " << to_string(artifact.report.method) << '\n';
  out << "m0 = " << format_double(artifact.report.hyperparams.m0) << '\n';
  out << "tau = " << format_double(artifact.report.hyperparams.tau) << '\n';
  out << "a = " << format_double(artifact.report.hyperparams.a) << '\n';
  out << "b = " << format_double(artifact.report.hyperparams.b) << '\n';
  out << "log_marginal_likelihood = " << format_double(artifact.report.log_marginal_likelihood)
      << '\n';
  out << "n_experiments_used = " << artifact.report.n_experiments_used << '\n';
  out << "tau_floored = " << (artifact.report.tau_floored ? "true" : "false") << '\n';
  out << "corpus_fingerprint = " << artifact.fingerprint << '\n';
  finish_output(out, path);
}

CalibrationArtifact read_calibration_artifact(const std::string& path) {
  const auto lines = read_lines(path);
  std::map<std::string, std::pair<std::string, int>> kv;
  for (const auto& [line_no, line] : lines) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    kv[trim(line.substr(0, eq))] = {trim(line.substr(eq + 1)), line_no};
  }
  const auto lookup = [&kv, &path](const std::string& key) -> const std::pair<std::string, int>& {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw ValidationError("'" + path + "': missing key '" + key + "'");
    }
    return it->second;
  };

  CalibrationArtifact artifact;
  {
    const auto& [value, line_no] = lookup("shrinkage_calibration_version");
    artifact.version = static_cast<int>(parse_uint64(value, "version", line_no));
    if (artifact.version != 1) {
      throw ValidationError("unsupported calibration artifact version " +
                            std::to_string(artifact.version));
    }
  }
  {
    const auto& [value, line_no] = lookup("method");
    if (value == "method_of_moments") {
      artifact.report.method = FitMethod::MethodOfMoments;
    } else if (value == "marginal_mle") {
      artifact.report.method = FitMethod::MarginalMLE;
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": unknown fit method '" + value +
                            "'");
    }
  }
  artifact.report.hyperparams.m0 = parse_double(lookup("m0").first, "m0", lookup("m0").second);
  artifact.report.hyperparams.tau =
      parse_double(lookup("tau").first, "tau", lookup("tau").second);
  artifact.report.hyperparams.a = parse_double(lookup("a").first, "a", lookup("a").second);
  artifact.report.hyperparams.b = parse_double(lookup("b").first, "b", lookup("b").second);
  artifact.report.log_marginal_likelihood =
      parse_double(lookup("log_marginal_likelihood").first, "log_marginal_likelihood",
                   lookup("log_marginal_likelihood").second);
  artifact.report.n_experiments_used = static_cast<int>(parse_uint64(
      lookup("n_experiments_used").first, "n_experiments_used", lookup("n_experiments_used").second));
  artifact.report.tau_floored = parse_bool(lookup("tau_floored").first, "tau_floored",
                                           lookup("tau_floored").second);
  artifact.fingerprint = parse_uint64(lookup("corpus_fingerprint").first, "corpus_fingerprint",
                                      lookup("corpus_fingerprint").second);
  artifact.report.hyperparams.validate();
  return artifact;
}

void write_metric_table(const std::string& path, const std::vector<MetricsRow>& rows,
                        const std::string& sweep_variable, std::uint64_t seed) {
  if (rows.empty()) throw ValidationError("no metric rows to write");
  std::ofstream out = open_output(path);
  out << "method,sweep_variable,sweep_value,metric,value,n_selected,seed\n";
  for (const MetricsRow& row : rows) {
    const std::pair<const char*, double> metrics[] = {
        {"mse", row.mse}, {"bias", row.bias}, {"coverage", row.coverage}};
    for (const auto& [name, value] : metrics) {
      out << to_string(row.method) << ',' << sweep_variable << ','
          << format_double(row.sweep_value) << ',' << name << ',' << format_double(value) << ','
          << row.n_selected << ',' << seed << '\n';
    }
  }
  finish_output(out, path);
}

MetricTable read_metric_table(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ValidationError("'" + path + "' is empty");
  const auto header = split_csv_line(lines[0].second, lines[0].first);
  const int col_method = require_column(header, "method");
  const int col_var = require_column(header, "sweep_variable");
  const int col_value = require_column(header, "sweep_value");
  const int col_metric = require_column(header, "metric");
  const int col_metric_value = require_column(header, "value");
  const int col_n = require_column(header, "n_selected");
  const int col_seed = require_column(header, "seed");

  MetricTable table;
  bool first = true;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = lines[i].first;
    const auto fields = split_csv_line(lines[i].second, line_no);
    const Estimator method = parse_estimator(trim(field_at(fields, col_method, line_no)));
    const double sweep_value =
        parse_double(field_at(fields, col_value, line_no), "sweep_value", line_no);
    const std::string metric = trim(field_at(fields, col_metric, line_no));
    const double value = parse_double(field_at(fields, col_metric_value, line_no), "value",
                                      line_no);
    const int n_selected = static_cast<int>(
        parse_uint64(field_at(fields, col_n, line_no), "n_selected", line_no));
    const std::string var = trim(field_at(fields, col_var, line_no));
    const std::uint64_t seed = parse_uint64(field_at(fields, col_seed, line_no), "seed", line_no);
    if (first) {
      table.sweep_variable = var;
      table.seed = seed;
      first = false;
    } else if (var != table.sweep_variable || seed != table.seed) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": inconsistent sweep_variable or seed");
    }
    MetricsRow* row = nullptr;
    if (!table.rows.empty() && table.rows.back().method == method &&
        table.rows.back().sweep_value == sweep_value) {
      row = &table.rows.back();
    } else {
      table.rows.push_back(MetricsRow{method, sweep_value, 0.0, 0.0, 0.0, n_selected});
      row = &table.rows.back();
    }
    if (row->n_selected != n_selected) {
      throw ValidationError("line " + std::to_string(line_no) + ": inconsistent n_selected");
    }
    if (metric == "mse") {
      row->mse = value;
    } else if (metric == "bias") {
      row->bias = value;
    } else if (metric == "coverage") {
      row->coverage = value;
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": unknown metric '" + metric +
                            "'");
    }
  }
  if (table.rows.empty()) {
    throw ValidationError("'" + path + "' has a header but no data rows");
  }
  return table;
}

void write_check_csv(const std::string& path, const std::vector<std::string>& ids,
                     const std::vector<PredictiveCheckResult>& results) {
  if (ids.size() != results.size()) {
    throw ValidationError("id and result lists must have equal length");
  }
  std::ofstream out = open_output(path);
  out << "id,statistic,observed,tail_area\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << quote_if_needed(ids[i]) << ',' << results[i].statistic_name << ','
        << format_double(results[i].observed) << ',' << format_double(results[i].tail_area)
        << '\n';
  }
  finish_output(out, path);
}

}  // namespace shrinkage
