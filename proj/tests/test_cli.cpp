#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cavlab/cli.hpp"
#include "cavlab/io.hpp"
#include "test_util.hpp"

using namespace cavlab;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("gen-gmm writes a matrix of the documented size") {
  const fs::path dir = testing::scratch_dir("cli_gmm");
  const Result r = run({"--seed", "1", "--out", dir.string(), "gen-gmm", "--d", "50", "--n", "200"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(fs::file_size(dir / "gmm.cavm") == 32 + 50 * 200 * 8);
  const io::json summary = io::json::parse(r.out);
  CHECK(summary.at("command") == "gen-gmm");
  const io::Dataset ds = io::read_dataset(dir / "gmm");
  CHECK(ds.labels.size() == 200);
  CHECK(ds.meta.at("seed") == 1);
}

TEST_CASE("same seed gives byte-identical files") {
  const fs::path a = testing::scratch_dir("cli_rep_a"), b = testing::scratch_dir("cli_rep_b");
  for (const fs::path& dir : {a, b})
    REQUIRE(run({"--seed", "9", "--out", dir.string(), "gen-gmm", "--d", "5", "--n", "40"}).code == 0);
  CHECK(slurp(a / "gmm.cavm") == slurp(b / "gmm.cavm"));
  CHECK(slurp(a / "gmm.json") == slurp(b / "gmm.json"));
}

TEST_CASE("usage errors exit 2 with a JSON message") {
  const fs::path dir = testing::scratch_dir("cli_usage");
  const Result zero = run({"--seed", "1", "--out", dir.string(), "gen-ts", "--n", "0"});
  CHECK(zero.code == cli::kExitUsage);
  const io::json e = io::json::parse(zero.err);
  CHECK(e.at("exit_code") == 2);
  CHECK(e.contains("error"));
  CHECK(e.contains("message"));

  CHECK(run({"--out", dir.string(), "gen-gmm"}).code == cli::kExitUsage);  // no seed
  CHECK(run({"--seed", "1"}).code == cli::kExitUsage);                     // no command
  CHECK(run({"--seed", "1", "bogus"}).code == cli::kExitUsage);
  CHECK(run({"--seed", "1", "--out", dir.string(), "cav", "--data", (dir / "missing").string()}).code == cli::kExitUsage);
  CHECK(run({"--seed", "1", "--out", dir.string(), "gen-gmm", "--d", "x"}).code == cli::kExitUsage);
}

TEST_CASE("numerical failures exit 3") {
  const fs::path dir = testing::scratch_dir("cli_numerical");
  LabeledActivations one{Matrix(2, 3, {1, 2, 3, 4, 5, 6}), {1, 1, 1}, "0"};
  io::write_dataset(dir / "one", io::to_dataset(one, 0));
  const Result r = run({"--seed", "1", "--out", dir.string(), "cav", "--data", (dir / "one").string()});
  CHECK(r.code == cli::kExitNumerical);
  CHECK(io::json::parse(r.err).at("exit_code") == 3);
}

TEST_CASE("config file supplies seed and options; flags win") {
  const fs::path dir = testing::scratch_dir("cli_config");
  io::write_json_file(dir / "cfg.json", io::json{{"seed", 4}, {"gen-gmm", {{"d", 3}, {"n", 10}, {"name", "fromcfg"}}}});
  REQUIRE(run({"--config", (dir / "cfg.json").string(), "--out", dir.string(), "gen-gmm", "--n", "12"}).code == 0);
  const io::Dataset ds = io::read_dataset(dir / "fromcfg");
  CHECK(ds.data.rows() == 3);
  CHECK(ds.data.cols() == 12);
  CHECK(ds.meta.at("seed") == 4);

  io::write_text_file(dir / "bad.json", "[1, 2]");
  CHECK(run({"--config", (dir / "bad.json").string(), "--out", dir.string(), "gen-gmm"}).code == cli::kExitUsage);
}

TEST_CASE("pipeline: gen, cav, predict, sweep, hist") {
  const fs::path dir = testing::scratch_dir("cli_pipeline");
  const std::string out = dir.string();
  REQUIRE(run({"--seed", "3", "--out", out, "gen-gmm", "--d", "6", "--n", "120", "--shift", "0.5"}).code == 0);
  const std::string data = (dir / "gmm").string();
  REQUIRE(run({"--seed", "3", "--out", out, "cav", "--data", data, "--method", "ridge", "--lambda", "0.5"}).code == 0);
  CHECK(fs::exists(dir / "cav.json"));
  CHECK(fs::file_size(dir / "cav.cavm") == 32 + 6 * 8);

  REQUIRE(run({"--seed", "3", "--out", out, "predict", "--data", data, "--test", data, "--method", "pattern"}).code == 0);
  const io::json pred = io::read_json_file(dir / "prediction.json");
  CHECK(pred.contains("epsilon"));
  CHECK(pred.contains("eps_empirical"));

  REQUIRE(run({"--seed", "3", "--out", out, "sweep", "--data", data, "--lambdas", "0.1,10", "--reps", "10"}).code == 0);
  CHECK(slurp(dir / "sweep.csv").rfind("lambda,method,eps_theory,eps_empirical\n", 0) == 0);

  REQUIRE(run({"--seed", "3", "--out", out, "hist", "--data", data, "--bins", "8"}).code == 0);
  CHECK(fs::exists(dir / "hist.csv"));
  CHECK(fs::exists(dir / "hist.json"));
}

TEST_CASE("attack fixture command writes a trace") {
  const fs::path dir = testing::scratch_dir("cli_attack");
  REQUIRE(run({"--seed", "2", "--out", dir.string(), "attack", "--fixture", "--n", "30", "--max-iters", "100"}).code == 0);
  const std::string trace = slurp(dir / "attack_trace.csv");
  CHECK(trace.rfind("iter,loss,step,tcav_q_class_0,tcav_q_class_1,class_loss_0,class_loss_1\n", 0) == 0);
  CHECK(fs::exists(dir / "attack_hist_initial.csv"));
  CHECK(fs::exists(dir / "attack_hist_final.csv"));
  CHECK(fs::exists(dir / "attack_cav.json"));
}
