#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "shrinkage/calibration.hpp"
#include "shrinkage/io.hpp"
#include "shrinkage/local_shrinkage.hpp"
#include "shrinkage/model.hpp"
#include "shrinkage/predictive.hpp"
#include "shrinkage/rng.hpp"

namespace {

using namespace shrinkage;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the installed binary through the shell, capturing both streams.
// env_prefix lets a test set variables for just that invocation.
CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int run_id = 0;
  const std::string out_path = "cli_cap_out_" + std::to_string(run_id) + ".txt";
  const std::string err_path = "cli_cap_err_" + std::to_string(run_id) + ".txt";
  ++run_id;
  const std::string cmd = env_prefix + "\"" SHRINK_CLI_PATH "\" " + args + " >" + out_path +
                          " 2>" + err_path;
  const int raw = std::system(cmd.c_str());
  CliResult result;
  if (raw != -1 && WIFEXITED(raw)) result.exit_code = WEXITSTATUS(raw);
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return result;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& tag, const std::string& content = "") {
    static int counter = 0;
    path = "cli_" + tag + "_" + std::to_string(counter++) + ".tmp";
    if (!content.empty()) {
      std::ofstream out(path, std::ios::binary);
      out << content;
    }
  }
  ~TempFile() { std::remove(path.c_str()); }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
};

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::string small_corpus() {
  return "id,theta_hat,sigma_hat,selected\n"
         "exp-1,2.4,1,1\n"
         "exp-2,0.8,0.5,1\n"
         "exp-3,-1.2,2,0\n";
}

std::string spread_corpus() {
  std::ostringstream out;
  out << "id,theta_hat,sigma_hat,selected\n";
  const double thetas[] = {-1.9, -1.1, -0.4, 0.2, 0.5, 0.9, 1.3, 1.6, 2.2, 2.9, -0.7, 0.1};
  for (int i = 0; i < 12; ++i) {
    out << "s-" << i << ',' << format_double(thetas[i]) << ",0.8," << (i % 3 == 0 ? 0 : 1)
        << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("cli estimate face_value matches the library row by row") {
  TempFile input("corpus", small_corpus());
  TempFile output("estimates");
  const CliResult r =
      run_cli("estimate --input " + input.path + " --output " + output.path +
              " --method face_value");
  CHECK(r.exit_code == 0);
  CHECK(r.err.find("wrote 3 estimates") != std::string::npos);

  const std::vector<std::string> lines = lines_of(slurp(output.path));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] ==
        "id,method,mean,variance,interval_low,interval_high,level,lambda_used,lambda_converged");

  ExperimentSummary exp;
  exp.id = "exp-1";
  exp.theta_hat = 2.4;
  exp.sigma_hat = 1.0;
  const PosteriorSummary expected = face_value_summary(exp, 0.9);
  const std::vector<std::string> row = fields_of(lines[1]);
  REQUIRE(row.size() == 9);
  CHECK(row[0] == "exp-1");
  CHECK(row[1] == "face_value");
  CHECK(row[2] == format_double(expected.mean));
  CHECK(row[3] == format_double(expected.variance));
  CHECK(row[4] == format_double(expected.interval_low));
  CHECK(row[5] == format_double(expected.interval_high));
  CHECK(row[7] == "");
}

TEST_CASE("cli estimate without a prior explains what to pass") {
  TempFile input("corpus", small_corpus());
  TempFile output("estimates");
  const CliResult r = run_cli("estimate --input " + input.path + " --output " + output.path);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("pass --calibration, or --m0 and --tau") != std::string::npos);
}

TEST_CASE("cli estimate with prior flags follows the plug-in path") {
  TempFile input("corpus", small_corpus());
  TempFile output("estimates");
  const CliResult r =
      run_cli("estimate --input " + input.path + " --output " + output.path +
              " --m0 0.5 --tau 2 --level 0.95");
  CHECK(r.exit_code == 0);

  const std::vector<std::string> lines = lines_of(slurp(output.path));
  REQUIRE(lines.size() == 4);
  const HyperParams hp{0.5, 2.0, 3.0, 3.0};
  ExperimentSummary exp;
  exp.id = "exp-2";
  exp.theta_hat = 0.8;
  exp.sigma_hat = 0.5;
  const PosteriorSummary expected = hybrid_shrinkage_estimate(exp, hp, 0.95);
  const std::vector<std::string> row = fields_of(lines[2]);
  REQUIRE(row.size() == 9);
  CHECK(row[1] == "hybrid_shrinkage");
  CHECK(row[2] == format_double(expected.mean));
  REQUIRE(expected.lambda_used.has_value());
  CHECK(row[7] == format_double(*expected.lambda_used));
  CHECK(row[8] == "true");
}

TEST_CASE("cli estimate --marginal leaves the local scale column empty") {
  TempFile input("corpus", small_corpus());
  TempFile plugin_out("estimates");
  TempFile marginal_out("estimates");
  const std::string prior = " --m0 0 --tau 1";
  CHECK(run_cli("estimate --input " + input.path + " --output " + plugin_out.path + prior)
            .exit_code == 0);
  CHECK(run_cli("estimate --input " + input.path + " --output " + marginal_out.path +
                " --marginal" + prior)
            .exit_code == 0);

  const std::vector<std::string> plugin = lines_of(slurp(plugin_out.path));
  const std::vector<std::string> marginal = lines_of(slurp(marginal_out.path));
  REQUIRE(plugin.size() == 4);
  REQUIRE(marginal.size() == 4);
  for (int i = 1; i <= 3; ++i) {
    const std::vector<std::string> p = fields_of(plugin[i]);
    const std::vector<std::string> m = fields_of(marginal[i]);
    CHECK(p[7] != "");
    CHECK(m[7] == "");
    CHECK(p[2] != m[2]);
  }
}

TEST_CASE("cli estimate --unit-level forms ratio estimates first") {
  TempFile input("units",
                 "experiment_id,unit_id,z,y\n"
                 "exp-b,u1,1,2\n"
                 "exp-b,u2,1,4\n"
                 "exp-b,u3,0,1\n"
                 "exp-b,u4,0,3\n"
                 "exp-a,u1,1,5\n"
                 "exp-a,u2,0,4\n"
                 "exp-a,u3,1,7\n"
                 "exp-a,u4,0,6\n");
  TempFile output("estimates");
  const CliResult r =
      run_cli("estimate --unit-level --input " + input.path + " --output " + output.path +
              " --method face_value");
  CHECK(r.exit_code == 0);

  const std::vector<std::string> lines = lines_of(slurp(output.path));
  REQUIRE(lines.size() == 3);
  UnitLevelData data;
  data.outcomes = {2.0, 4.0, 1.0, 3.0};
  data.assignments = {1, 1, 0, 0};
  const PosteriorSummary expected =
      face_value_summary(face_value_estimate(data, "exp-b"), 0.9);
  const std::vector<std::string> first = fields_of(lines[1]);
  CHECK(first[0] == "exp-b");
  CHECK(first[2] == format_double(expected.mean));
  CHECK(first[3] == format_double(expected.variance));
  CHECK(std::stod(first[2]) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(std::stod(first[3]) == doctest::Approx(0.8125).epsilon(1e-14));
  CHECK(fields_of(lines[2])[0] == "exp-a");
}

TEST_CASE("cli estimate names the broken input line") {
  TempFile input("corpus",
                 "id,theta_hat,sigma_hat,selected\n"
                 "ok-row,1.0,1.0,1\n"
                 "bad-row,1.0,-0.5,1\n");
  TempFile output("estimates");
  const CliResult r = run_cli("estimate --input " + input.path + " --output " + output.path +
                              " --method face_value");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);
  CHECK(r.err.find("sigma_hat") != std::string::npos);
}

TEST_CASE("cli estimate on a missing file exits with the io code") {
  TempFile output("estimates");
  const CliResult r =
      run_cli("estimate --input no_such_corpus_file.csv --output " + output.path +
              " --method face_value");
  CHECK(r.exit_code == 4);
  CHECK(r.err.find("no_such_corpus_file.csv") != std::string::npos);
}

TEST_CASE("cli flag errors use the validation exit code") {
  TempFile input("corpus", small_corpus());
  CHECK(run_cli("estimate --input " + input.path).exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("no_such_subcommand").exit_code == 2);
}

TEST_CASE("cli help exits cleanly") {
  const CliResult r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("estimate") != std::string::npos);
  CHECK(r.out.find("simulate") != std::string::npos);
}

TEST_CASE("cli calibrate guards the selected-only corpus") {
  std::string all_selected = "id,theta_hat,sigma_hat,selected\n";
  for (int i = 0; i < 10; ++i) {
    all_selected += "w-" + std::to_string(i) + "," + format_double(1.0 + 0.3 * i) + ",0.7,1\n";
  }
  TempFile input("corpus", all_selected);
  TempFile artifact("calib");

  const CliResult refused =
      run_cli("calibrate --input " + input.path + " --output " + artifact.path);
  CHECK(refused.exit_code == 2);
  CHECK(refused.err.find("--selected-only-ack") != std::string::npos);

  const CliResult fitted = run_cli("calibrate --input " + input.path + " --output " +
                                   artifact.path + " --selected-only-ack");
  CHECK(fitted.exit_code == 0);
  CHECK(fitted.err.find("fit marginal_mle on 10 experiments") != std::string::npos);

  const CalibrationArtifact loaded = read_calibration_artifact(artifact.path);
  CHECK(loaded.report.method == FitMethod::MarginalMLE);
  CHECK(loaded.report.n_experiments_used == 10);
  CHECK(loaded.fingerprint == corpus_fingerprint(read_corpus_csv(input.path).experiments));
}

TEST_CASE("cli calibrate accepts a mixed corpus without the acknowledgement") {
  TempFile input("corpus", spread_corpus());
  TempFile artifact("calib");
  const CliResult r = run_cli("calibrate --input " + input.path + " --output " + artifact.path +
                              " --fit moments");
  CHECK(r.exit_code == 0);
  const CalibrationArtifact loaded = read_calibration_artifact(artifact.path);
  CHECK(loaded.report.method == FitMethod::MethodOfMoments);
  CHECK(loaded.report.n_experiments_used == 12);
  CHECK(loaded.report.hyperparams.tau > 0.0);
}

TEST_CASE("cli calibrate floors the dispersion on a constant corpus") {
  std::string constant = "id,theta_hat,sigma_hat,selected\n";
  for (int i = 0; i < 6; ++i) {
    constant += "c-" + std::to_string(i) + ",1.5,1," + std::string(i == 0 ? "0" : "1") + "\n";
  }
  TempFile input("corpus", constant);
  TempFile artifact("calib");
  const CliResult r = run_cli("calibrate --input " + input.path + " --output " + artifact.path +
                              " --fit moments");
  CHECK(r.exit_code == 0);
  CHECK(r.err.find("(tau floored)") != std::string::npos);
  const CalibrationArtifact loaded = read_calibration_artifact(artifact.path);
  CHECK(loaded.report.tau_floored);
  CHECK(loaded.report.hyperparams.tau == kTauFloor);
}

TEST_CASE("cli calibrate mle never scores below moments") {
  TempFile input("corpus", spread_corpus());
  TempFile moments_artifact("calib");
  TempFile mle_artifact("calib");
  CHECK(run_cli("calibrate --input " + input.path + " --output " + moments_artifact.path +
                " --fit moments")
            .exit_code == 0);
  CHECK(run_cli("calibrate --input " + input.path + " --output " + mle_artifact.path +
                " --fit mle")
            .exit_code == 0);
  const CalibrationArtifact moments = read_calibration_artifact(moments_artifact.path);
  const CalibrationArtifact mle = read_calibration_artifact(mle_artifact.path);
  CHECK(mle.report.log_marginal_likelihood >=
        moments.report.log_marginal_likelihood - 1e-9);
}

TEST_CASE("cli estimate accepts a calibration artifact as the prior") {
  TempFile input("corpus", spread_corpus());
  TempFile artifact("calib");
  TempFile output("estimates");
  REQUIRE(run_cli("calibrate --input " + input.path + " --output " + artifact.path +
                  " --fit moments")
              .exit_code == 0);
  const CliResult r = run_cli("estimate --input " + input.path + " --output " + output.path +
                              " --calibration " + artifact.path + " --method global_shrinkage");
  CHECK(r.exit_code == 0);

  const CalibrationArtifact loaded = read_calibration_artifact(artifact.path);
  const std::vector<std::string> lines = lines_of(slurp(output.path));
  REQUIRE(lines.size() == 13);
  ExperimentSummary exp;
  exp.id = "s-0";
  exp.theta_hat = -1.9;
  exp.sigma_hat = 0.8;
  const PosteriorSummary expected =
      global_shrinkage_estimate(exp, loaded.report.hyperparams, 0.9);
  const std::vector<std::string> row = fields_of(lines[1]);
  CHECK(row[1] == "global_shrinkage");
  CHECK(row[2] == format_double(expected.mean));
}

TEST_CASE("cli check derives one reproducible stream per experiment") {
  TempFile input("corpus", small_corpus());
  TempFile output("checks");
  const CliResult r =
      run_cli("check --input " + input.path + " --output " + output.path +
              " --method global_shrinkage --m0 0 --tau 1 --n-draws 400 --seed 9");
  CHECK(r.exit_code == 0);

  const std::vector<std::string> lines = lines_of(slurp(output.path));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "id,statistic,observed,tail_area");

  const HyperParams hp{0.0, 1.0, 3.0, 3.0};
  const double thetas[] = {2.4, 0.8, -1.2};
  const double sigmas[] = {1.0, 0.5, 2.0};
  const char* ids[] = {"exp-1", "exp-2", "exp-3"};
  for (int i = 0; i < 3; ++i) {
    ExperimentSummary exp;
    exp.id = ids[i];
    exp.theta_hat = thetas[i];
    exp.sigma_hat = sigmas[i];
    const PosteriorSummary posterior = global_shrinkage_estimate(exp, hp, 0.9);
    const PredictiveCheckResult expected =
        tail_area_check(exp, posterior, CheckStatistic::Identity, 400,
                        Rng::derive_stream_seed(9, static_cast<std::size_t>(i)), hp.m0);
    const std::vector<std::string> row = fields_of(lines[static_cast<std::size_t>(i) + 1]);
    REQUIRE(row.size() == 4);
    CHECK(row[0] == ids[i]);
    CHECK(row[1] == "identity");
    CHECK(row[2] == format_double(expected.observed));
    CHECK(row[3] == format_double(expected.tail_area));
    const double tail = std::stod(row[3]);
    CHECK(tail >= 0.0);
    CHECK(tail <= 1.0);
  }
}

TEST_CASE("cli evaluate prints one scored row per estimator") {
  TempFile input("corpus",
                 "id,theta_hat,sigma_hat,selected,replication_theta_hat,replication_sigma_hat\n"
                 "r-1,2.4,1,1,1.9,1\n"
                 "r-2,2.9,1,1,2.2,1\n"
                 "r-3,2.1,0.8,1,1.4,0.8\n"
                 "r-4,3.3,1.2,1,2.6,1.2\n");
  TempFile output("table");
  const CliResult r = run_cli("evaluate --input " + input.path + " --output " + output.path +
                              " --m0 0 --tau 1");
  CHECK(r.exit_code == 0);

  const std::vector<std::string> lines = lines_of(r.out);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "method,mae,coverage,n_pairs");
  CHECK(fields_of(lines[1])[0] == "face_value");
  CHECK(fields_of(lines[2])[0] == "global_shrinkage");
  CHECK(fields_of(lines[3])[0] == "hybrid_shrinkage");
  for (int i = 1; i <= 3; ++i) {
    const std::vector<std::string> row = fields_of(lines[static_cast<std::size_t>(i)]);
    REQUIRE(row.size() == 4);
    CHECK(row[3] == "4");
    const double mae = std::stod(row[1]);
    CHECK(mae >= 0.0);
  }
  CHECK(slurp(output.path) == r.out);
}

TEST_CASE("cli simulate sweeps the kind-matched flag and reruns byte-identically") {
  TempFile first("metrics");
  TempFile first_summary("metrics");
  TempFile second("metrics");
  TempFile second_summary("metrics");
  const std::string args =
      "simulate --kind heavy_tails --nu 3,50 --n 400 --threshold 1.5 --seed 11 --jobs 2"
      " --output ";
  const CliResult a = run_cli(args + first.path);
  CHECK(a.exit_code == 0);
  const CliResult b = run_cli(args + second.path);
  CHECK(b.exit_code == 0);

  const std::string summary_a = slurp(first.path + ".summary.txt");
  const std::string summary_b = slurp(second.path + ".summary.txt");
  std::remove((first.path + ".summary.txt").c_str());
  std::remove((second.path + ".summary.txt").c_str());

  CHECK(a.out == summary_a);
  CHECK(summary_a.find("sweep over nu: 2 points, 3 methods, seed 11") != std::string::npos);
  CHECK(summary_a.find("orderings:") != std::string::npos);
  CHECK(summary_a.find("hybrid_shrinkage mse <= face_value mse") != std::string::npos);

  const std::string table_a = slurp(first.path);
  const std::string table_b = slurp(second.path);
  CHECK(table_a == table_b);
  CHECK(summary_a == summary_b);

  const std::vector<std::string> lines = lines_of(table_a);
  REQUIRE(lines.size() == 19);
  CHECK(lines[0] == "method,sweep_variable,sweep_value,metric,value,n_selected,seed");
  int nu3_rows = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> row = fields_of(lines[i]);
    REQUIRE(row.size() == 7);
    CHECK(row[1] == "nu");
    CHECK(row[5] == "400");
    if (row[2] == "3") ++nu3_rows;
  }
  CHECK(nu3_rows == 9);
}

TEST_CASE("cli simulate reports the independence factorization at rho zero") {
  TempFile output("metrics");
  const CliResult r = run_cli(
      "simulate --kind hidden_selection --rho 0,0.6 --n 300 --seed 4 --jobs 2 --output " +
      output.path);
  std::remove((output.path + ".summary.txt").c_str());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("[PASS] independence factorization at rho = 0") != std::string::npos);
  CHECK(r.out.find("face_value bias > 0") != std::string::npos);

  const std::vector<std::string> lines = lines_of(slurp(output.path));
  CHECK(lines.size() == 19);
}

TEST_CASE("cli simulate rejects a comma list on a non-sweep flag") {
  TempFile output("metrics");
  const CliResult r = run_cli("simulate --kind heavy_tails --mu 1,2 --n 200 --output " +
                              output.path);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("must be a single value") != std::string::npos);
}

TEST_CASE("cli seed environment variable matches the flag") {
  TempFile input("corpus", small_corpus());
  TempFile flag_out("checks");
  TempFile env_out("checks");
  const std::string base = "check --input " + input.path + " --m0 0 --tau 1 --n-draws 200";
  CHECK(run_cli(base + " --seed 42 --output " + flag_out.path).exit_code == 0);
  CHECK(run_cli(base + " --output " + env_out.path, "SHRINK_SEED=42 ").exit_code == 0);
  const std::string flag_table = slurp(flag_out.path);
  CHECK(flag_table == slurp(env_out.path));
  CHECK(!flag_table.empty());

  const CliResult bad = run_cli(base + " --output " + env_out.path, "SHRINK_SEED=abc ");
  CHECK(bad.exit_code == 2);
  CHECK(bad.err.find("SHRINK_SEED must be a nonnegative integer") != std::string::npos);
}
