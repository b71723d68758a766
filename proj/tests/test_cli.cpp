#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = RTWIN_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
  std::string stderr_text;
};

RunResult run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd =
      kCli + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.stdout_text = slurp(out);
  r.stderr_text = slurp(err);
  return r;
}

std::string slurp_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rtwin_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("simulate: deterministic bytes, documented header, n=0 rejected") {
  TempDir tmp;
  const fs::path f1 = tmp.path / "a.csv";
  const fs::path f2 = tmp.path / "b.csv";
  CHECK(run("simulate --n 200 --seed 5 --output " + f1.string(), tmp.path).exit_code == 0);
  CHECK(run("simulate --n 200 --seed 5 --output " + f2.string(), tmp.path).exit_code == 0);
  const std::string c1 = slurp_file(f1);
  CHECK(c1 == slurp_file(f2));
  CHECK(c1.rfind("w1,w2,w3,a,z,m,y\n", 0) == 0);

  const RunResult bad = run("simulate --n 0 --output " + f1.string(), tmp.path);
  CHECK(bad.exit_code == 2);
}

TEST_CASE("estimate: report files, exact path sum, Table-style formatting") {
  TempDir tmp;
  const fs::path data = tmp.path / "data.csv";
  REQUIRE(run("simulate --n 3000 --seed 9 --output " + data.string(), tmp.path)
              .exit_code == 0);
  const fs::path prefix = tmp.path / "report";
  const RunResult r = run("estimate --input " + data.string() + " --q 3 --seed 4 " +
                              "--learner interact --output-prefix " + prefix.string(),
                          tmp.path);
  REQUIRE(r.exit_code == 0);

  nlohmann::json j;
  {
    std::ifstream in(prefix.string() + ".json");
    REQUIRE(in.good());
    in >> j;
  }
  double sum = 0;
  for (const char* p : {"P1", "P2", "P3", "P4", "INT"})
    sum += j["paths"][p]["estimate"].get<double>();
  CHECK(std::abs(sum - j["paths"]["ATE"]["estimate"].get<double>()) < 1e-10);
  CHECK(j["intermediate_confounding_test"].contains("p_value"));

  const std::string txt = slurp_file(prefix.string() + ".txt");
  CHECK(txt.find("ATE") != std::string::npos);
  // "0.0160 (0.0119, 0.0201)"-style cells
  CHECK(txt.find(" (") != std::string::npos);
  CHECK(txt.find(", ") != std::string::npos);
}

TEST_CASE("estimate: malformed CSV exits 2 with a row-numbered diagnostic") {
  TempDir tmp;
  const fs::path bad = tmp.path / "bad.csv";
  {
    std::ofstream out(bad);
    out << "w1,w2,w3,a,z,m,y\n";
    out << "0.1,0.2,0.3,0,1,1,1\n";
    out << "0.1,0.2,0.3,7,1,1,0\n";
  }
  const RunResult r =
      run("estimate --input " + bad.string() + " --output-prefix " +
              (tmp.path / "x").string(),
          tmp.path);
  CHECK(r.exit_code == 2);
  CHECK(r.stderr_text.find("row 2") != std::string::npos);

  const RunResult missing =
      run("estimate --input " + (tmp.path / "nope.csv").string(), tmp.path);
  CHECK(missing.exit_code == 2);
}

TEST_CASE("replicate then report: idempotent aggregation and resume") {
  TempDir tmp;
  const std::string common =
      "replicate --settings default --modes x --ns 300 --reps 2 --base-seed 3 "
      "--truth-nmc 20000 --q 2 --learner main --outdir " + tmp.path.string();
  REQUIRE(run(common, tmp.path).exit_code == 0);
  const fs::path records = tmp.path / "records.csv";
  const fs::path metrics = tmp.path / "metrics.csv";
  REQUIRE(fs::exists(records));
  REQUIRE(fs::exists(metrics));
  REQUIRE(fs::exists(tmp.path / "plotdata.csv"));
  const std::string metrics_bytes = slurp_file(metrics);

  // recompute metrics from the records alone
  const fs::path metrics2 = tmp.path / "metrics2.csv";
  REQUIRE(run("report --records " + records.string() + " --metrics " +
                  metrics2.string(),
              tmp.path)
              .exit_code == 0);
  CHECK(slurp_file(metrics2) == metrics_bytes);

  // rerun without --resume refuses to clobber
  CHECK(run(common, tmp.path).exit_code == 1);
  // resume over complete records leaves them untouched
  const std::string before = slurp_file(records);
  CHECK(run(common + " --resume", tmp.path).exit_code == 0);
  CHECK(slurp_file(records) == before);
}

TEST_CASE("report: empty and duplicated records are rejected") {
  TempDir tmp;
  const fs::path empty = tmp.path / "empty.csv";
  {
    std::ofstream out(empty);
    out << "setting,covariate_mode,n,rep,path,truth,estimate,se,ci_lo,ci_hi,"
           "covered,plugin_estimate\n";
  }
  CHECK(run("report --records " + empty.string(), tmp.path).exit_code == 1);

  const fs::path dup = tmp.path / "dup.csv";
  {
    std::ofstream out(dup);
    out << "setting,covariate_mode,n,rep,path,truth,estimate,se,ci_lo,ci_hi,"
           "covered,plugin_estimate\n";
    out << "default,x,100,0,P1,0,0.1,0.05,0,0.2,1,0.1\n";
    out << "default,x,100,0,P1,0,0.1,0.05,0,0.2,1,0.1\n";
  }
  const RunResult r = run("report --records " + dup.string(), tmp.path);
  CHECK(r.exit_code == 1);
  CHECK(r.stderr_text.find("duplicate") != std::string::npos);
  CHECK(r.stderr_text.find("P1") != std::string::npos);
}

TEST_CASE("config file values are applied and flags win") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "run.cfg";
  const fs::path out1 = tmp.path / "c1.csv";
  const fs::path out2 = tmp.path / "c2.csv";
  {
    std::ofstream out(cfg);
    out << "[simulate]\nn=150\nseed=6\noutput=" << out1.string() << "\n";
  }
  REQUIRE(run("simulate --config " + cfg.string(), tmp.path).exit_code == 0);
  REQUIRE(fs::exists(out1));
  // the flag overrides the config value for the output path
  REQUIRE(run("simulate --config " + cfg.string() + " --output " + out2.string(),
              tmp.path)
              .exit_code == 0);
  CHECK(slurp_file(out1) == slurp_file(out2));
}
