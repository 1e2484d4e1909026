#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sldl/dataset.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct CliDir {
  fs::path path;
  CliDir() {
    path = fs::temp_directory_path() /
           ("sldl_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~CliDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args, const std::string& stdout_path = "/dev/null") {
  const std::string cmd = std::string(SLDL_CLI_PATH) + " " + args + " > " + stdout_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::string common_flags() {
  return "--embed-dim 8 --k-neighbors 3 --rounds 5 --walk-steps 2 --seed 1";
}

}  // namespace

TEST_CASE("cli train/predict/eval round trip") {
  CliDir dir;
  const sldl::Dataset data = sldl::testing::cluster_fixture(8, 3, 5, 21);
  write_file(dir.file("train.txt"), sldl::serialize_dataset(data));

  CHECK(run_cli("train --data " + dir.file("train.txt") + " --model " + dir.file("m.sldl") + " " +
                common_flags()) == 0);
  CHECK(fs::exists(dir.file("m.sldl")));

  CHECK(run_cli("predict --model " + dir.file("m.sldl") + " --data " + dir.file("train.txt") +
                    " --k-out 5",
                dir.file("pred.txt")) == 0);
  const std::string preds = read_file(dir.file("pred.txt"));
  CHECK(std::count(preds.begin(), preds.end(), '\n') == data.n);
  CHECK(preds.find(':') != std::string::npos);

  CHECK(run_cli("eval --pred " + dir.file("pred.txt") + " --data " + dir.file("train.txt") +
                    " --ks 1,3 --out " + dir.file("report.json"),
                dir.file("eval.txt")) == 0);
  const std::string table = read_file(dir.file("eval.txt"));
  CHECK(table.find("P@1") != std::string::npos);
  CHECK(read_file(dir.file("report.json")).find("per_fold") != std::string::npos);
}

TEST_CASE("cli deterministic model bytes for a fixed seed") {
  CliDir dir;
  const sldl::Dataset data = sldl::testing::cluster_fixture(6, 2, 4, 5);
  write_file(dir.file("d.txt"), sldl::serialize_dataset(data));

  CHECK(run_cli("train --data " + dir.file("d.txt") + " --model " + dir.file("a.sldl") + " " +
                common_flags()) == 0);
  CHECK(run_cli("train --data " + dir.file("d.txt") + " --model " + dir.file("b.sldl") + " " +
                common_flags()) == 0);
  CHECK(read_file(dir.file("a.sldl")) == read_file(dir.file("b.sldl")));
}

TEST_CASE("cli exit codes") {
  CliDir dir;
  // Missing input file: I/O error.
  CHECK(run_cli("train --data " + dir.file("absent.txt") + " --model " + dir.file("m.sldl")) == 4);

  const sldl::Dataset data = sldl::testing::cluster_fixture(6, 2, 4, 9);
  write_file(dir.file("train.txt"), sldl::serialize_dataset(data));
  REQUIRE(run_cli("train --data " + dir.file("train.txt") + " --model " + dir.file("m.sldl") +
                  " " + common_flags()) == 0);

  // Feature-dimension mismatch: contract error.
  const sldl::Dataset other = sldl::testing::cluster_fixture(4, 2, 9, 9);
  write_file(dir.file("bad.txt"), sldl::serialize_dataset(other));
  CHECK(run_cli("predict --model " + dir.file("m.sldl") + " --data " + dir.file("bad.txt")) == 2);

  // Malformed dataset: parse error.
  write_file(dir.file("broken.txt"), "1 2\n");
  CHECK(run_cli("train --data " + dir.file("broken.txt") + " --model " + dir.file("x.sldl")) == 2);

  // Corrupted model version: parse error.
  std::string bytes = read_file(dir.file("m.sldl"));
  const auto pos = bytes.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  bytes.replace(pos, 18, "\"format_version\":9");
  write_file(dir.file("v9.sldl"), bytes);
  CHECK(run_cli("predict --model " + dir.file("v9.sldl") + " --data " + dir.file("train.txt")) == 2);

  // Unknown flag: usage error.
  CHECK(run_cli("train --data x --model y --definitely-not-a-flag") == 2);
}

TEST_CASE("cli predict on an empty test set writes no lines") {
  CliDir dir;
  const sldl::Dataset data = sldl::testing::cluster_fixture(6, 2, 4, 9);
  write_file(dir.file("train.txt"), sldl::serialize_dataset(data));
  REQUIRE(run_cli("train --data " + dir.file("train.txt") + " --model " + dir.file("m.sldl") +
                  " " + common_flags()) == 0);

  write_file(dir.file("empty.txt"), "0 4 12\n");
  CHECK(run_cli("predict --model " + dir.file("m.sldl") + " --data " + dir.file("empty.txt"),
                dir.file("out.txt")) == 0);
  CHECK(read_file(dir.file("out.txt")).empty());
}

TEST_CASE("cli dumps and config file") {
  CliDir dir;
  const sldl::Dataset data = sldl::testing::cluster_fixture(6, 2, 4, 31);
  write_file(dir.file("train.txt"), sldl::serialize_dataset(data));
  write_file(dir.file("cfg.ini"), "embed-dim=4\nrounds=3\nseed=2\n");

  CHECK(run_cli("train --data " + dir.file("train.txt") + " --model " + dir.file("m.sldl") +
                " --config " + dir.file("cfg.ini") + " --k-neighbors 2 --dump-transfer " +
                dir.file("P.txt") + " --dump-embeddings " + dir.file("E.txt")) == 0);

  const std::string P = read_file(dir.file("P.txt"));
  CHECK(std::count(P.begin(), P.end(), '\n') == data.c);
  const std::string E = read_file(dir.file("E.txt"));
  CHECK(std::count(E.begin(), E.end(), '\n') == data.c);
  CHECK(E.find('|') != std::string::npos);

  // embed-dim=4 from the config file: 4 mu columns before the separator.
  std::istringstream first_line(E.substr(0, E.find('\n')));
  int fields = 0;
  std::string tok;
  while (first_line >> tok && tok != "|") ++fields;
  CHECK(fields == 1 + 4);  // label index + 4 mean entries
}

TEST_CASE("cli cv runs a small grid") {
  CliDir dir;
  const sldl::Dataset data = sldl::testing::cluster_fixture(8, 3, 6, 37);
  write_file(dir.file("d.txt"), sldl::serialize_dataset(data));

  CHECK(run_cli("cv --data " + dir.file("d.txt") +
                    " --folds 3 --grid-dims 4,8 --grid-k 2,3 --rounds 3 --walk-steps 2"
                    " --seed 1 --jobs 2 --out " +
                    dir.file("cv.json"),
                dir.file("cv.txt")) == 0);
  const std::string table = read_file(dir.file("cv.txt"));
  CHECK(table.find("selected grid point") != std::string::npos);
  CHECK(table.find("P@1") != std::string::npos);
  const std::string json = read_file(dir.file("cv.json"));
  CHECK(json.find("best_grid") != std::string::npos);
  CHECK(json.find("grid") != std::string::npos);
}

TEST_CASE("cli ablation flags are accepted") {
  CliDir dir;
  const sldl::Dataset data = sldl::testing::cluster_fixture(6, 2, 4, 41);
  write_file(dir.file("d.txt"), sldl::serialize_dataset(data));
  CHECK(run_cli("train --data " + dir.file("d.txt") + " --model " + dir.file("g.sldl") + " " +
                common_flags() + " --no-gaussian") == 0);
  CHECK(run_cli("train --data " + dir.file("d.txt") + " --model " + dir.file("s.sldl") + " " +
                common_flags() + " --symmetric") == 0);
  CHECK(read_file(dir.file("g.sldl")) != read_file(dir.file("s.sldl")));
}
