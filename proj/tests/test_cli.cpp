#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

struct RunOutcome {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

const fs::path& workspace() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "protochaos_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunOutcome run_cli(const std::string& args, const std::string& tag) {
  const fs::path log = workspace() / (tag + ".log");
  const std::string command =
      PROTOCHAOS_CLI_PATH " "s + args + " > " + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  RunOutcome outcome;
  outcome.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  outcome.output = buf.str();
  return outcome;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

fs::path small_config() {
  const fs::path path = workspace() / "small.cfg";
  write_file(path,
             "# desk-scale run\n"
             "data.classes = 4\n"
             "data.per_class = 60\n"
             "data.dim = 8\n"
             "data.seed = 5\n"
             "episode.k_shot = 2\n"
             "episode.q_count = 5\n"
             "train.episodes = 40\n"
             "train.eval_every = 20\n"
             "train.eval_episodes = 20\n"
             "model.proj_dim = 16\n"
             "train.seed = 9\n");
  return path;
}

}  // namespace

TEST_CASE("gen-data writes the documented schema deterministically") {
  const fs::path out_a = workspace() / "gen_a.csv";
  const fs::path out_b = workspace() / "gen_b.csv";
  const std::string flags = "--classes 4 --per-class 50 --dim 32 --seed 7 --out ";
  CHECK(run_cli("gen-data " + flags + out_a.string(), "gen_a").exit_code == 0);
  CHECK(run_cli("gen-data " + flags + out_b.string(), "gen_b").exit_code == 0);

  const std::string csv = read_file(out_a);
  CHECK(csv == read_file(out_b));  // identical bytes for identical flags

  std::istringstream lines(csv);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line.rfind("id,label,f0,", 0) == 0);
  int commas = 0;
  for (const char ch : line) commas += ch == ',' ? 1 : 0;
  CHECK(commas == 33);  // 34 columns: id, label, f0..f31
  int rows = 0;
  while (std::getline(lines, line)) rows += line.empty() ? 0 : 1;
  CHECK(rows == 200);
}

TEST_CASE("gen-data rejects dim < classes with exit code 1") {
  const RunOutcome outcome =
      run_cli("gen-data --classes 8 --dim 4 --out " + (workspace() / "bad.csv").string(),
              "gen_bad");
  CHECK(outcome.exit_code == 1);
  CHECK(outcome.output.find("dim") != std::string::npos);
  CHECK(!fs::exists(workspace() / "bad.csv"));
}

TEST_CASE("train writes checkpoint, history and manifest; defaults lambda to 0.15") {
  const fs::path out = workspace() / "train_run";
  const RunOutcome outcome = run_cli(
      "train --config " + small_config().string() + " --out " + out.string(), "train_ok");
  REQUIRE(outcome.exit_code == 0);
  CHECK(fs::exists(out / "checkpoint.txt"));
  CHECK(fs::exists(out / "checkpoint_best.txt"));
  CHECK(fs::exists(out / "history.csv"));
  CHECK(fs::exists(out / "manifest.txt"));

  const std::string manifest = read_file(out / "manifest.txt");
  CHECK(manifest.find("chaos.lambda = 0.15") != std::string::npos);
  CHECK(manifest.find("train.seed = 9") != std::string::npos);
  CHECK(manifest.find("data.digest = 0x") != std::string::npos);

  const std::string history = read_file(out / "history.csv");
  CHECK(history.rfind("episode,train_loss,eval_accuracy", 0) == 0);
  int rows = 0;
  for (const char ch : history) rows += ch == '\n' ? 1 : 0;
  CHECK(rows == 3);  // header + evals at episodes 20 and 40
}

TEST_CASE("train is byte-reproducible and honors flag overrides") {
  const fs::path out_a = workspace() / "repro_a";
  const fs::path out_b = workspace() / "repro_b";
  const std::string base =
      "train --config " + small_config().string() + " --lambda 0.2 --episodes 30 --out ";
  REQUIRE(run_cli(base + out_a.string(), "repro_a").exit_code == 0);
  REQUIRE(run_cli(base + out_b.string(), "repro_b").exit_code == 0);
  CHECK(read_file(out_a / "checkpoint.txt") == read_file(out_b / "checkpoint.txt"));
  CHECK(read_file(out_a / "history.csv") == read_file(out_b / "history.csv"));
  // the flag overrode the config default
  const std::string manifest = read_file(out_a / "manifest.txt");
  CHECK(manifest.find("chaos.lambda = 0.2") != std::string::npos);
  CHECK(manifest.find("train.episodes = 30") != std::string::npos);
}

TEST_CASE("train on a missing data file exits 1 and leaves no artifacts") {
  const fs::path out = workspace() / "train_missing";
  const RunOutcome outcome =
      run_cli("train --data " + (workspace() / "nope.csv").string() + " --out " +
                  out.string(),
              "train_missing");
  CHECK(outcome.exit_code == 1);
  CHECK(!fs::exists(out));
}

TEST_CASE("unknown config keys are named and exit 1") {
  const fs::path cfg = workspace() / "bogus.cfg";
  write_file(cfg, "bogus.key = 1\n");
  const RunOutcome outcome = run_cli("train --config " + cfg.string(), "train_bogus");
  CHECK(outcome.exit_code == 1);
  CHECK(outcome.output.find("bogus.key") != std::string::npos);
}

TEST_CASE("eval emits a deterministic report with the documented columns") {
  const fs::path train_out = workspace() / "eval_train";
  REQUIRE(run_cli("train --config " + small_config().string() + " --out " +
                      train_out.string(),
                  "eval_train")
              .exit_code == 0);

  // evaluate on the test partition of the same configured dataset
  const std::string eval_cmd = "eval --config " + small_config().string() +
                               " --checkpoint " + (train_out / "checkpoint.txt").string() +
                               " --split test --eval-episodes 40 --eval-seed 3 --out ";
  const fs::path eval_a = workspace() / "eval_a";
  const fs::path eval_b = workspace() / "eval_b";
  REQUIRE(run_cli(eval_cmd + eval_a.string(), "eval_a").exit_code == 0);
  REQUIRE(run_cli(eval_cmd + eval_b.string(), "eval_b").exit_code == 0);

  const std::string metrics = read_file(eval_a / "metrics.txt");
  CHECK(metrics == read_file(eval_b / "metrics.txt"));
  CHECK(read_file(eval_a / "confusion.csv") == read_file(eval_b / "confusion.csv"));
  CHECK(read_file(eval_a / "eval_manifest.txt").find("data.digest = 0x") !=
        std::string::npos);
  CHECK(metrics.rfind("accuracy = ", 0) == 0);
  CHECK(metrics.find("class,precision,recall,f1,support\n") != std::string::npos);
  CHECK(metrics.find("cluster.separation_ratio = ") != std::string::npos);
  CHECK(read_file(eval_a / "confusion.csv").rfind("class,class0,class1", 0) == 0);
}

TEST_CASE("eval rejects a checkpoint whose dimensions do not match the data") {
  const fs::path train_out = workspace() / "dim_train";
  REQUIRE(run_cli("train --config " + small_config().string() + " --out " +
                      train_out.string(),
                  "dim_train")
              .exit_code == 0);
  const fs::path other = workspace() / "dim4.csv";
  REQUIRE(run_cli("gen-data --classes 4 --per-class 30 --dim 4 --out " + other.string(),
                  "dim_gen")
              .exit_code == 0);
  const RunOutcome outcome =
      run_cli("eval --checkpoint " + (train_out / "checkpoint.txt").string() + " --data " +
                  other.string() + " --k-shot 2 --q-count 3",
              "dim_eval");
  CHECK(outcome.exit_code == 1);
  CHECK(outcome.output.find("dimension") != std::string::npos);
}

TEST_CASE("sweep with one lambda emits a single-row baseline CSV") {
  const fs::path out = workspace() / "sweep_one";
  const RunOutcome outcome =
      run_cli("sweep --config " + small_config().string() + " --lambdas 0.0 --out " +
                  out.string(),
              "sweep_one");
  REQUIRE(outcome.exit_code == 0);
  const std::string csv = read_file(out / "sweep.csv");
  CHECK(csv == "lambda,accuracy,macro_precision,macro_recall,macro_f1\n" +
                   csv.substr(csv.find('\n') + 1));
  int rows = 0;
  for (const char ch : csv) rows += ch == '\n' ? 1 : 0;
  CHECK(rows == 2);  // header + the lambda = 0 baseline row
  CHECK(csv.find("\n0.000000,") != std::string::npos);
}

TEST_CASE("sweep defaults to the nine-point grid and reproduces byte-identically") {
  const fs::path out_a = workspace() / "sweep_a";
  const fs::path out_b = workspace() / "sweep_b";
  const std::string cmd =
      "sweep --config " + small_config().string() + " --episodes 20 --jobs 2 --out ";
  REQUIRE(run_cli(cmd + out_a.string(), "sweep_a").exit_code == 0);
  REQUIRE(run_cli(cmd + out_b.string(), "sweep_b").exit_code == 0);
  const std::string csv = read_file(out_a / "sweep.csv");
  CHECK(csv == read_file(out_b / "sweep.csv"));
  int rows = 0;
  for (const char ch : csv) rows += ch == '\n' ? 1 : 0;
  CHECK(rows == 10);  // header + nine lambdas
  for (const char* lambda : {"0.000000", "0.050000", "0.100000", "0.120000", "0.150000",
                             "0.180000", "0.200000", "0.300000", "0.400000"}) {
    CHECK(csv.find("\n"s + lambda + ",") != std::string::npos);
  }
}

TEST_CASE("gradcheck exits 0 clean and 3 under the corruption hook") {
  CHECK(run_cli("gradcheck", "gradcheck_ok").exit_code == 0);
  const RunOutcome corrupt = run_cli("gradcheck --corrupt", "gradcheck_corrupt");
  CHECK(corrupt.exit_code == 3);
  CHECK(corrupt.output.find("FAIL") != std::string::npos);
  // per-block worst errors are reported
  CHECK(corrupt.output.find("weight") != std::string::npos);
  CHECK(corrupt.output.find("bias") != std::string::npos);
  CHECK(corrupt.output.find("log_tau") != std::string::npos);
}

TEST_CASE("unknown flags exit 1, help exits 0") {
  CHECK(run_cli("--help", "help").exit_code == 0);
  CHECK(run_cli("train --no-such-flag", "badflag").exit_code == 1);
  CHECK(run_cli("eval", "eval_noargs").exit_code == 1);  // --checkpoint is required
}
