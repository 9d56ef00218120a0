// CLI tests: subcommand wiring driven in-process, file outputs, exit codes,
// config-file precedence, and manifest replay. Also covers the CSV/JSON
// formatting layer the commands write through.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "spinlab/cli.hpp"
#include "spinlab/errors.hpp"
#include "spinlab/io.hpp"

using namespace spinlab;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI in-process with stdout/stderr captured.
CliResult run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"spinlab"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() /
                     ("spinlab_cli_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

// Parses a CSV written by the CLI into lines of cells (no quoting cases).
std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  for (const std::string& line : split(slurp(path), '\n'))
    rows.push_back(split(line, ','));
  return rows;
}

}  // namespace

TEST_CASE("doubles survive a text round trip at 17 digits") {
  for (const double v : {1.0 / 3, 3.141592653589793, 1e-300, 0.1, -2.5e17,
                         6.02214076e23, 1.0000000000000002}) {
    CAPTURE(v);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-0.5) == "-0.5");
}

TEST_CASE("csv cells with separators are quoted") {
  const std::string dir = fresh_dir("csv");
  const std::string path = dir + "/t.csv";
  {
    CsvWriter w(path, {"a", "b"});
    w.row({std::string("x,y"), std::int64_t{7}});
    CHECK_THROWS_AS(w.row({std::int64_t{1}}), std::invalid_argument);
  }
  CHECK(slurp(path) == "a,b\n\"x,y\",7\n");
  CHECK_THROWS_AS(CsvWriter(dir + "/no/such/dir.csv", {"a"}), io_error);
}

TEST_CASE("the regime table spans the critical field") {
  const std::string dir = fresh_dir("regimes");
  const CliResult r =
      run({"--out", dir, "regimes", "--n", "1000", "--nu", "0.5", "--nu", "1.0",
           "--nu", "1.7320508075688772", "--nu", "2.5", "--nu", "3.5"});
  CHECK(r.code == 0);
  const auto rows = read_csv(dir + "/regimes.csv");
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == std::vector<std::string>{"nu", "B", "label",
                                            "expected_count"});
  std::vector<double> B;
  for (std::size_t i = 1; i < rows.size(); ++i) B.push_back(std::stod(rows[i][1]));
  for (std::size_t i = 1; i < B.size(); ++i) CHECK(B[i] < B[i - 1]);
  CHECK(B.front() > 0);
  CHECK(B.back() < 0);  // the grid crosses the critical field
  CHECK(rows[1][2] == "exponential");
  // At the critical field B vanishes to rounding and the row sits in the
  // polynomial band.
  CHECK(rows[3][2] == "polynomial");
  CHECK(std::abs(std::stod(rows[3][1])) < 1e-3);
  CHECK(rows[4][2] == "trivial");
  CHECK(std::stod(rows[4][3]) == 2.0);
  CHECK(std::stod(rows[5][3]) == 2.0);

  const nlohmann::json man = load_json(dir + "/manifest_regimes.json");
  CHECK(man.at("subcommand") == "regimes");
  CHECK(man.at("version") == std::string(kCodeVersion));
  CHECK(man.at("outputs") == std::vector<std::string>{"regimes.csv"});
  CHECK(man.at("config").at("n") == 1000.0);
  CHECK(man.at("started_at").get<std::string>().back() == 'Z');
}

TEST_CASE("a tau grid maps to increasing field strengths") {
  const std::string dir = fresh_dir("taugrid");
  const CliResult r =
      run({"--out", dir, "regimes", "--n", "100", "--tau", "1", "--tau", "4"});
  CHECK(r.code == 0);
  const auto rows = read_csv(dir + "/regimes.csv");
  REQUIRE(rows.size() == 3);
  const double nu1 = std::stod(rows[1][0]);
  const double nu2 = std::stod(rows[2][0]);
  CHECK(nu1 > std::sqrt(3.0));  // above the critical field
  CHECK(nu2 > nu1);
}

TEST_CASE("usage errors exit with the usage code") {
  CHECK(run({"regimes"}).code == 2);                   // no field grid
  CHECK(run({}).code == 2);                            // no subcommand
  CHECK(run({"frobnicate"}).code == 2);                // unknown subcommand
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"train", "--help"}).code == 0);
  CHECK(run({"train", "--optimizer", "sgd"}).code == 2);
  CHECK(run({"train", "--images", "x.idx"}).code == 2);  // labels missing
}

TEST_CASE("the landscape census writes per-trial rows and a summary") {
  const std::string dir = fresh_dir("landscape");
  const CliResult r = run({"--out", dir, "landscape", "--n", "24", "--trials",
                           "12", "--seed", "7", "--max-iters", "20000"});
  CHECK(r.code == 0);
  const auto rows = read_csv(dir + "/landscape.csv");
  REQUIRE(rows.size() == 1 + 3 * 12);
  CHECK(rows[0] == std::vector<std::string>{"regime", "trial", "seed",
                                            "normalized_energy", "index",
                                            "converged", "cluster"});

  const nlohmann::json sum = load_json(dir + "/landscape_summary.json");
  REQUIRE(sum.at("regimes").size() == 3);
  CHECK(sum.at("regimes")[0].at("label") == "exponential");
  CHECK(sum.at("regimes")[1].at("label") == "polynomial");
  CHECK(sum.at("regimes")[2].at("label") == "trivial");
  // nu = sqrt(3) nu_c = 3 sits deep in the trivialized phase: every descent
  // lands on the single field-aligned minimum.
  CHECK(sum.at("regimes")[2].at("cluster_count") == 1);
  CHECK(sum.at("regimes")[2].at("convergence_rate") == 1.0);
  CHECK(sum.at("regimes")[2].at("index_zero_fraction") == 1.0);
  CHECK(sum.at("regimes")[0].at("distance_defined") == true);
}

TEST_CASE("custom and bogus regime labels") {
  CHECK(run({"landscape", "--regime", "bogus"}).code == 2);
  CHECK(run({"landscape", "--regime", "weak=oops"}).code == 2);

  const std::string dir = fresh_dir("custom_regime");
  const CliResult r = run({"--out", dir, "landscape", "--n", "16", "--trials",
                           "4", "--regime", "weak=0.25", "--no-indices"});
  CHECK(r.code == 0);
  const nlohmann::json sum = load_json(dir + "/landscape_summary.json");
  REQUIRE(sum.at("regimes").size() == 1);
  CHECK(sum.at("regimes")[0].at("label") == "weak");
  CHECK(sum.at("regimes")[0].at("nu") == 0.25);
  CHECK(sum.at("indices_computed") == false);
}

TEST_CASE("a single-trial census leaves distances undefined") {
  const std::string dir = fresh_dir("one_trial");
  const CliResult r = run({"--out", dir, "landscape", "--n", "16", "--trials",
                           "1", "--regime", "trivial"});
  CHECK(r.code == 0);
  const nlohmann::json sum = load_json(dir + "/landscape_summary.json");
  CHECK(sum.at("regimes")[0].at("distance_defined") == false);
  CHECK(sum.at("regimes")[0].at("mean_cosine_distance") == 0.0);
}

TEST_CASE("the perturbation check reports zero shift at zero field") {
  const std::string dir = fresh_dir("perturb");
  const CliResult r = run({"--out", dir, "perturb-check", "--n", "12", "--n",
                           "16", "--trials", "5", "--nu", "0"});
  CHECK(r.code == 0);
  const nlohmann::json doc = load_json(dir + "/perturb_check.json");
  CHECK(doc.at("alpha_defined") == false);
  CHECK(doc.at("fraction_energy_within") == 1.0);
  REQUIRE(doc.at("rows").size() == 10);
  for (const auto& row : doc.at("rows")) {
    CHECK(row.at("distance") == 0.0);
    CHECK(row.at("energy_diff") == 0.0);
  }
}

TEST_CASE("training on blobs emits one metrics row per epoch") {
  const std::string dir = fresh_dir("train");
  const CliResult r =
      run({"--out", dir, "train", "--blob-classes", "3", "--blob-dim", "5",
           "--blob-per-class", "40", "--blob-spread", "0.3", "--hidden", "16",
           "--epochs", "2", "--batch", "16", "--seed", "3", "--lr", "0.05"});
  CHECK(r.code == 0);
  const auto rows = read_csv(dir + "/train_metrics.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"epoch", "loss", "val_error",
                                            "min_abs_grad", "alignment"});
  CHECK(rows[1][0] == "1");
  CHECK(rows[2][0] == "2");
  CHECK(std::stod(rows[1][1]) > 0);               // cross-entropy
  CHECK(std::stod(rows[1][4]) == 0.0);            // no perturbation direction
  const nlohmann::json man = load_json(dir + "/manifest_train.json");
  CHECK(man.at("config").at("epochs") == 2);
  CHECK(man.at("config").at("anneal") == false);
}

TEST_CASE("a zero-strength anneal flag reproduces the baseline file") {
  const std::string dir_a = fresh_dir("train_base");
  const std::string dir_b = fresh_dir("train_j0");
  const std::vector<std::string> common = {
      "train", "--blob-classes", "3",  "--blob-dim", "5", "--blob-per-class",
      "30",    "--hidden",       "12", "--epochs",   "2", "--batch",
      "8",     "--seed",         "9"};
  std::vector<std::string> a = {"--out", dir_a};
  a.insert(a.end(), common.begin(), common.end());
  std::vector<std::string> b = {"--out", dir_b};
  b.insert(b.end(), common.begin(), common.end());
  b.push_back("--anneal.J");
  b.push_back("0");
  CHECK(run(a).code == 0);
  CHECK(run(b).code == 0);
  CHECK(slurp(dir_a + "/train_metrics.csv") ==
        slurp(dir_b + "/train_metrics.csv"));
  // The manifests differ: the second run records the engaged engine.
  CHECK(load_json(dir_b + "/manifest_train.json").at("config").at("anneal") ==
        true);
}

TEST_CASE("missing image files fail with the path in the message") {
  const CliResult r =
      run({"train", "--images", "/nope/img.idx", "--labels", "/nope/lab.idx"});
  CHECK(r.code == 3);
  CHECK(r.err.find("/nope/img.idx") != std::string::npos);
}

TEST_CASE("the gradient audit passes clean and fails when sabotaged") {
  const std::string dir = fresh_dir("gradcheck");
  const CliResult ok =
      run({"--out", dir, "gradcheck", "--n", "12", "--count", "2", "--seed",
           "4"});
  CHECK(ok.code == 0);
  CHECK(load_json(dir + "/gradcheck.json").at("pass") == true);

  const std::string dir2 = fresh_dir("gradcheck_flip");
  const CliResult bad =
      run({"--out", dir2, "gradcheck", "--n", "12", "--count", "2", "--seed",
           "4", "--inject-sign-flip"});
  CHECK(bad.code == 1);
  CHECK(load_json(dir2 + "/gradcheck.json").at("pass") == false);
}

TEST_CASE("oversized tensors exit with the capacity code") {
  // 40^5 entries exceed the default budget of 1e8.
  const CliResult r = run({"gradcheck", "--n", "40", "--p", "5", "--count",
                           "1"});
  CHECK(r.code == 4);
}

TEST_CASE("replay reproduces output files byte for byte") {
  const std::string dir_a = fresh_dir("replay_src");
  const CliResult first =
      run({"--out", dir_a, "train", "--blob-classes", "3", "--blob-dim", "4",
           "--blob-per-class", "25", "--hidden", "10", "--epochs", "2",
           "--batch", "8", "--seed", "11", "--anneal.J", "0.002"});
  REQUIRE(first.code == 0);
  const std::string metrics = slurp(dir_a + "/train_metrics.csv");

  const std::string dir_b = fresh_dir("replay_dst");
  const CliResult second =
      run({"--out", dir_b, "replay", dir_a + "/manifest_train.json"});
  CHECK(second.code == 0);
  CHECK(slurp(dir_b + "/train_metrics.csv") == metrics);

  const std::string dir_c = fresh_dir("replay_reg_src");
  REQUIRE(run({"--out", dir_c, "regimes", "--nu", "0.4", "--nu", "2.9"}).code ==
          0);
  const std::string dir_d = fresh_dir("replay_reg_dst");
  CHECK(run({"--out", dir_d, "replay", dir_c + "/manifest_regimes.json"})
            .code == 0);
  CHECK(slurp(dir_d + "/regimes.csv") == slurp(dir_c + "/regimes.csv"));

  CHECK(run({"replay", dir_d + "/does_not_exist.json"}).code == 3);
}

TEST_CASE("the output directory falls back to the environment") {
  const std::string dir = fresh_dir("envout");
  ::setenv("SPINLAB_OUT", dir.c_str(), 1);
  const CliResult r = run({"regimes", "--nu", "1.0"});
  ::unsetenv("SPINLAB_OUT");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir + "/regimes.csv"));
  CHECK(fs::exists(dir + "/manifest_regimes.json"));
}

TEST_CASE("config files supply defaults and flags beat them") {
  const std::string dir = fresh_dir("config");
  const std::string ini = dir + "/run.ini";
  {
    std::ofstream f(ini);
    f << "[train]\n"
      << "epochs=3\n"
      << "lr=0.05\n"
      << "blob-per-class=20\n";
  }
  const std::vector<std::string> common = {"--config", ini,   "train",
                                           "--blob-classes",  "3",
                                           "--blob-dim",      "4",
                                           "--hidden",        "8"};
  std::vector<std::string> from_file = {"--out", dir};
  from_file.insert(from_file.end(), common.begin(), common.end());
  REQUIRE(run(from_file).code == 0);
  CHECK(read_csv(dir + "/train_metrics.csv").size() == 1 + 3);

  std::vector<std::string> overridden = from_file;
  overridden.push_back("--epochs");
  overridden.push_back("1");
  REQUIRE(run(overridden).code == 0);
  CHECK(read_csv(dir + "/train_metrics.csv").size() == 1 + 1);
  const nlohmann::json man = load_json(dir + "/manifest_train.json");
  CHECK(man.at("config").at("epochs") == 1);
  CHECK(man.at("config").at("lr") == 0.05);  // still from the file
}
