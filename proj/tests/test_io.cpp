#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "shrinkage/errors.hpp"
#include "shrinkage/io.hpp"

using namespace shrinkage;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/shrinkage_io_") + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ExperimentSummary make_exp(const std::string& id, double theta_hat, double sigma_hat) {
  ExperimentSummary e;
  e.id = id;
  e.theta_hat = theta_hat;
  e.sigma_hat = sigma_hat;
  return e;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path(temp_path(name)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("format_double round-trips doubles exactly") {
  for (double x : {1.0 / 3.0, 1e-300, -2.5e17, 0.1, 1.6448536269514722}) {
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(1.5) == "1.5");
}

TEST_CASE("corpus CSV round-trip preserves every field bitwise") {
  std::vector<ExperimentSummary> corpus;
  corpus.push_back(make_exp("plain", 1.0 / 3.0, 0.7));
  auto quoted = make_exp("has,comma \"and quotes\"", -2.25, 1e-3);
  quoted.selected = false;
  quoted.replication_theta_hat = 0.123456789012345678;
  quoted.replication_sigma_hat = 0.5;
  corpus.push_back(quoted);

  TempFile file("roundtrip.csv");
  write_corpus_csv(file.path, corpus);
  const auto result = read_corpus_csv(file.path);
  CHECK(result.selected_column_present);
  REQUIRE(result.experiments.size() == 2);
  const auto& a = result.experiments[0];
  const auto& b = result.experiments[1];
  CHECK(a.id == "plain");
  CHECK(a.theta_hat == corpus[0].theta_hat);
  CHECK(a.sigma_hat == corpus[0].sigma_hat);
  CHECK(a.selected);
  CHECK(!a.replication_theta_hat.has_value());
  CHECK(b.id == "has,comma \"and quotes\"");
  CHECK(b.theta_hat == quoted.theta_hat);
  CHECK(!b.selected);
  REQUIRE(b.replication_theta_hat.has_value());
  CHECK(*b.replication_theta_hat == *quoted.replication_theta_hat);
  CHECK(*b.replication_sigma_hat == 0.5);
}

TEST_CASE("corpus reader tolerates column order, extras and missing optionals") {
  TempFile file("reordered.csv");
  write_file(file.path,
             "note,sigma_hat,id,theta_hat\n"
             "x,0.5,exp-a,1.25\n"
             "y,2.0,exp-b,-0.5\n");
  const auto result = read_corpus_csv(file.path);
  CHECK(!result.selected_column_present);
  REQUIRE(result.experiments.size() == 2);
  CHECK(result.experiments[0].id == "exp-a");
  CHECK(result.experiments[0].theta_hat == 1.25);
  CHECK(result.experiments[0].sigma_hat == 0.5);
  CHECK(result.experiments[0].selected);  // defaulted
  CHECK(result.experiments[1].selected);
}

TEST_CASE("corpus reader errors name the offending line") {
  TempFile file("bad.csv");

  write_file(file.path, "id,theta_hat,sigma_hat\nexp-a,1.0,0.5\nexp-b,oops,0.5\n");
  try {
    read_corpus_csv(file.path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("theta_hat") != std::string::npos);
  }

  write_file(file.path, "id,theta_hat,sigma_hat\nexp-a,1.0,-0.5\n");
  try {
    read_corpus_csv(file.path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  write_file(file.path, "id,theta_hat\nexp-a,1.0\n");
  try {
    read_corpus_csv(file.path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("sigma_hat") != std::string::npos);
  }

  write_file(file.path, "id,theta_hat,sigma_hat\n");
  CHECK_THROWS_AS(read_corpus_csv(file.path), ValidationError);

  write_file(file.path, "id,theta_hat,sigma_hat\nexp-a,1.0,\"0.5\n");
  CHECK_THROWS_AS(read_corpus_csv(file.path), ValidationError);

  CHECK_THROWS_AS(read_corpus_csv(temp_path("no_such_file.csv")), IoError);
}

TEST_CASE("unit-level reader groups rows by first appearance") {
  TempFile file("units.csv");
  write_file(file.path,
             "experiment_id,unit_id,z,y\n"
             "exp-b,u1,1,2\n"
             "exp-a,u1,1,3\n"
             "exp-b,u2,1,4\n"
             "exp-b,u3,0,1\n"
             "exp-b,u4,0,3\n"
             "exp-a,u2,0,1\n");
  const auto groups = read_unit_level_csv(file.path);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].id == "exp-b");  // first appearance wins
  CHECK(groups[1].id == "exp-a");
  CHECK(groups[0].data.outcomes == std::vector<double>{2.0, 4.0, 1.0, 3.0});
  CHECK(groups[0].data.assignments == std::vector<int>{1, 1, 0, 0});
  CHECK(groups[1].data.outcomes == std::vector<double>{3.0, 1.0});
}

TEST_CASE("unit-level reader validation") {
  TempFile file("units_bad.csv");
  write_file(file.path, "experiment_id,unit_id,z,y\nexp-a,u1,2,1.0\n");
  try {
    read_unit_level_csv(file.path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("z must be 0 or 1") != std::string::npos);
  }

  // A group with no control arm is rejected and names the experiment.
  write_file(file.path, "experiment_id,unit_id,z,y\nexp-a,u1,1,1.0\nexp-a,u2,1,2.0\n");
  try {
    read_unit_level_csv(file.path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("exp-a") != std::string::npos);
  }
}

TEST_CASE("estimate table layout") {
  TempFile file("estimates.csv");
  std::vector<ExperimentSummary> corpus{make_exp("e1", 2.0, 1.0), make_exp("e2", 3.0, 1.0)};
  PosteriorSummary with_lambda;
  with_lambda.mean = 1.5;
  with_lambda.variance = 0.25;
  with_lambda.interval_low = 0.5;
  with_lambda.interval_high = 2.5;
  with_lambda.level = 0.9;
  with_lambda.method = Estimator::HybridShrinkage;
  with_lambda.lambda_used = 0.75;
  PosteriorSummary without_lambda = with_lambda;
  without_lambda.method = Estimator::FaceValue;
  without_lambda.lambda_used.reset();
  write_estimates_csv(file.path, corpus, {with_lambda, without_lambda});
  const std::string content = read_file(file.path);
  CHECK(content ==
        "id,method,mean,variance,interval_low,interval_high,level,lambda_used,lambda_converged\n"
        "e1,hybrid_shrinkage,1.5,0.25,0.5,2.5,0.90000000000000002,0.75,true\n"
        "e2,face_value,1.5,0.25,0.5,2.5,0.90000000000000002,,true\n");
  CHECK_THROWS_AS(write_estimates_csv(file.path, corpus, {with_lambda}), ValidationError);
}

TEST_CASE("corpus fingerprint is order- and content-sensitive") {
  const std::vector<ExperimentSummary> corpus{make_exp("a", 1.0, 0.5), make_exp("b", 2.0, 0.5)};
  const std::uint64_t fp = corpus_fingerprint(corpus);
  CHECK(corpus_fingerprint(corpus) == fp);  // deterministic

  auto reordered = corpus;
  std::swap(reordered[0], reordered[1]);
  CHECK(corpus_fingerprint(reordered) != fp);

  auto tweaked = corpus;
  tweaked[1].theta_hat += 1e-12;
  CHECK(corpus_fingerprint(tweaked) != fp);

  auto with_rep = corpus;
  with_rep[0].replication_theta_hat = 1.5;
  CHECK(corpus_fingerprint(with_rep) != fp);

  auto deselected = corpus;
  deselected[0].selected = false;
  CHECK(corpus_fingerprint(deselected) != fp);

  CHECK(corpus_fingerprint({}) == 14695981039346656037ull);  // FNV offset basis
}

TEST_CASE("calibration artifact round-trip") {
  CalibrationArtifact artifact;
  artifact.report.hyperparams = HyperParams{0.123456789012345678, 2.0 / 3.0, 3.0, 4.5};
  artifact.report.n_experiments_used = 167;
  artifact.report.log_marginal_likelihood = -245.72103456789;
  artifact.report.method = FitMethod::MarginalMLE;
  artifact.report.tau_floored = true;
  artifact.fingerprint = 18446744073709551615ull;  // max uint64 survives

  TempFile file("artifact.txt");
  write_calibration_artifact(file.path, artifact);
  const auto loaded = read_calibration_artifact(file.path);
  CHECK(loaded.version == 1);
  CHECK(loaded.report.hyperparams.m0 == artifact.report.hyperparams.m0);
  CHECK(loaded.report.hyperparams.tau == artifact.report.hyperparams.tau);
  CHECK(loaded.report.hyperparams.a == artifact.report.hyperparams.a);
  CHECK(loaded.report.hyperparams.b == artifact.report.hyperparams.b);
  CHECK(loaded.report.log_marginal_likelihood == artifact.report.log_marginal_likelihood);
  CHECK(loaded.report.n_experiments_used == 167);
  CHECK(loaded.report.method == FitMethod::MarginalMLE);
  CHECK(loaded.report.tau_floored);
  CHECK(loaded.fingerprint == artifact.fingerprint);

  const std::string content = read_file(file.path);
  CHECK(content.find("shrinkage_calibration_version = 1\n") == 0);
  CHECK(content.find("method = marginal_mle") != std::string::npos);
}

TEST_CASE("calibration artifact rejects bad inputs") {
  TempFile file("artifact_bad.txt");

  write_file(file.path,
             "shrinkage_calibration_version = 2\nmethod = marginal_mle\nm0 = 0\ntau = 1\n"
             "a = 3\nb = 3\nlog_marginal_likelihood = 0\nn_experiments_used = 2\n"
             "tau_floored = false\ncorpus_fingerprint = 0\n");
  try {
    read_calibration_artifact(file.path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  write_file(file.path, "shrinkage_calibration_version = 1\nmethod = marginal_mle\n");
  try {
    read_calibration_artifact(file.path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("missing key") != std::string::npos);
  }

  write_file(file.path, "no equals sign here\n");
  CHECK_THROWS_AS(read_calibration_artifact(file.path), ValidationError);

  // tau = 0 fails hyperparameter validation on load.
  write_file(file.path,
             "shrinkage_calibration_version = 1\nmethod = method_of_moments\nm0 = 0\ntau = 0\n"
             "a = 3\nb = 3\nlog_marginal_likelihood = 0\nn_experiments_used = 2\n"
             "tau_floored = true\ncorpus_fingerprint = 7\n");
  CHECK_THROWS_AS(read_calibration_artifact(file.path), ValidationError);
}

TEST_CASE("metric table round-trip is exact") {
  std::vector<MetricsRow> rows;
  for (int i = 0; i < 3; ++i) {
    MetricsRow row;
    row.method = i == 0 ? Estimator::FaceValue
                        : (i == 1 ? Estimator::GlobalShrinkage : Estimator::HybridShrinkage);
    row.sweep_value = 0.5 * i;
    row.mse = 1.0 / (3.0 + i);
    row.bias = -0.01 * i;
    row.coverage = 0.9 - 0.001 * i;
    row.n_selected = 20000;
    rows.push_back(row);
  }
  TempFile file("metrics.csv");
  write_metric_table(file.path, rows, "mu", 424242);
  const std::string content = read_file(file.path);
  CHECK(content.find("method,sweep_variable,sweep_value,metric,value,n_selected,seed\n") == 0);
  CHECK(content.find("face_value,mu,0,mse,") != std::string::npos);

  const auto table = read_metric_table(file.path);
  CHECK(table.sweep_variable == "mu");
  CHECK(table.seed == 424242);
  REQUIRE(table.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(table.rows[i].method == rows[i].method);
    CHECK(table.rows[i].sweep_value == rows[i].sweep_value);
    CHECK(table.rows[i].mse == rows[i].mse);
    CHECK(table.rows[i].bias == rows[i].bias);
    CHECK(table.rows[i].coverage == rows[i].coverage);
    CHECK(table.rows[i].n_selected == rows[i].n_selected);
  }
}

TEST_CASE("metric table reader rejects inconsistencies") {
  TempFile file("metrics_bad.csv");
  write_file(file.path,
             "method,sweep_variable,sweep_value,metric,value,n_selected,seed\n"
             "face_value,mu,0,mse,1.0,100,1\n"
             "face_value,nu,0,bias,0.0,100,1\n");
  CHECK_THROWS_AS(read_metric_table(file.path), ValidationError);

  write_file(file.path,
             "method,sweep_variable,sweep_value,metric,value,n_selected,seed\n"
             "face_value,mu,0,median,1.0,100,1\n");
  try {
    read_metric_table(file.path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("unknown metric") != std::string::npos);
  }

  CHECK_THROWS_AS(write_metric_table(file.path, {}, "mu", 0), ValidationError);
}

TEST_CASE("predictive check table layout") {
  TempFile file("checks.csv");
  PredictiveCheckResult r1;
  r1.statistic_name = "identity";
  r1.observed = 2.5;
  r1.tail_area = 0.03125;
  PredictiveCheckResult r2;
  r2.statistic_name = "abs_deviation_from_prior_mean";
  r2.observed = 0.5;
  r2.tail_area = 0.5;
  write_check_csv(file.path, {"e1", "e2"}, {r1, r2});
  CHECK(read_file(file.path) ==
        "id,statistic,observed,tail_area\n"
        "e1,identity,2.5,0.03125\n"
        "e2,abs_deviation_from_prior_mean,0.5,0.5\n");
  CHECK_THROWS_AS(write_check_csv(file.path, {"e1"}, {r1, r2}), ValidationError);
}
