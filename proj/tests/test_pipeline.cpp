#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sldl/errors.hpp"
#include "sldl/model_io.hpp"
#include "sldl/pipeline.hpp"
#include "synthetic.hpp"

using namespace sldl;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.embed_dim = 8;
  cfg.k_neighbors = 3;
  cfg.rounds = 5;
  cfg.walk_steps = 2;
  cfg.lbfgs.max_iters = 200;
  return cfg;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("sldl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("train_model end to end on the cluster fixture") {
  const Dataset data = testing::cluster_fixture(10, 3, 6, 42);
  const TrainedModel model = train_model(data, small_config());
  CHECK(model.q == 6);
  CHECK(model.c == 9);
  CHECK(model.regression.W.rows() == 6);
  CHECK(model.regression.W.cols() == 8);
  CHECK(model.decoder.Z_hat.rows() == data.n);

  // A query equal to a training instance with k=1 retrieves its own labels.
  RunConfig cfg1 = small_config();
  cfg1.k_neighbors = 1;
  cfg1.k_out = 3;
  const TrainedModel m1 = train_model(data, cfg1);
  const auto preds = predict_scores(m1, data);
  int exact = 0;
  for (int i = 0; i < data.n; ++i) {
    const auto top = top_k_labels(preds[i], static_cast<int>(data.labels[i].size()));
    auto sorted = top;
    std::sort(sorted.begin(), sorted.end());
    if (sorted == data.labels[i]) ++exact;
  }
  CHECK(exact == data.n);
}

TEST_CASE("model file round-trips bit-exactly") {
  TempDir tmp;
  const Dataset data = testing::cluster_fixture(8, 3, 5, 7);
  const TrainedModel model = train_model(data, small_config());

  const std::string path = (tmp.path / "model.sldl").string();
  save_model(path, model);
  const TrainedModel loaded = load_model(path);

  CHECK(loaded.q == model.q);
  CHECK(loaded.c == model.c);
  CHECK(loaded.regression.W == model.regression.W);  // bitwise
  CHECK(loaded.decoder.Z_hat == model.decoder.Z_hat);
  CHECK(loaded.decoder.train_labels == model.decoder.train_labels);
  CHECK(loaded.decoder.k_neighbors == model.decoder.k_neighbors);
  CHECK(loaded.embeddings.latent_dim == model.embeddings.latent_dim);
  for (int l = 0; l < model.c; ++l) {
    CHECK(loaded.embeddings.gaussians[l].mu == model.embeddings.gaussians[l].mu);
    CHECK(loaded.embeddings.gaussians[l].log_var == model.embeddings.gaussians[l].log_var);
  }

  // Loaded model predicts identically to the in-process one.
  const auto before = predict_scores(model, data);
  const auto after = predict_scores(loaded, data);
  for (int i = 0; i < data.n; ++i) CHECK(before[i].scores == after[i].scores);
}

TEST_CASE("same seed gives byte-identical model files") {
  TempDir tmp;
  const Dataset data = testing::cluster_fixture(8, 3, 5, 7);
  const std::string p1 = (tmp.path / "a.sldl").string();
  const std::string p2 = (tmp.path / "b.sldl").string();
  save_model(p1, train_model(data, small_config()));
  save_model(p2, train_model(data, small_config()));
  CHECK(read_file(p1) == read_file(p2));

  RunConfig other = small_config();
  other.seed = 99;
  const std::string p3 = (tmp.path / "c.sldl").string();
  save_model(p3, train_model(data, other));
  CHECK(read_file(p1) != read_file(p3));
}

TEST_CASE("unknown format version fails cleanly") {
  TempDir tmp;
  const Dataset data = testing::cluster_fixture(6, 2, 4, 3);
  const std::string path = (tmp.path / "model.sldl").string();
  save_model(path, train_model(data, small_config()));

  std::string bytes = read_file(path);
  const auto pos = bytes.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  bytes.replace(pos, 18, "\"format_version\":9");
  std::ofstream(path, std::ios::binary) << bytes;
  CHECK_THROWS_AS(load_model(path), ParseError);

  CHECK_THROWS_AS(load_model((tmp.path / "missing.sldl").string()), IoError);

  // Truncated payload.
  std::ofstream(path, std::ios::binary) << read_file(path).substr(0, 40);
  CHECK_THROWS_AS(load_model(path), ParseError);
}

TEST_CASE("predict_scores rejects mismatched feature dimensions") {
  const Dataset data = testing::cluster_fixture(6, 2, 4, 3);
  const TrainedModel model = train_model(data, small_config());
  const Dataset other = testing::cluster_fixture(4, 2, 7, 3);
  CHECK_THROWS_AS(predict_scores(model, other), std::invalid_argument);
}

TEST_CASE("cross_validate leave-one-out completes on a tiny fixture") {
  const Dataset data = testing::cluster_fixture(4, 2, 4, 11);  // n = 8
  RunConfig cfg = small_config();
  cfg.k_neighbors = 2;
  CvOptions opts;
  opts.folds = data.n;  // leave-one-out
  const CvResult cv = cross_validate(data, cfg, opts);
  CHECK(cv.report.per_fold.size() == static_cast<std::size_t>(data.n));
  for (double v : cv.report.mean) {
    CHECK(std::isfinite(v));
  }
}

TEST_CASE("grid of size one equals a single cv run") {
  const Dataset data = testing::cluster_fixture(6, 3, 5, 13);
  RunConfig cfg = small_config();
  CvOptions single;
  single.folds = 3;
  const CvResult plain = cross_validate(data, cfg, single);

  CvOptions grid1 = single;
  grid1.grid = {{cfg.embed_dim, cfg.k_neighbors}};
  const CvResult gridded = cross_validate(data, cfg, grid1);
  CHECK(plain.best.embed_dim == gridded.best.embed_dim);
  CHECK(plain.report.mean == gridded.report.mean);
  CHECK(plain.report.per_fold == gridded.report.per_fold);
}

TEST_CASE("cross_validate grid selection and parallel jobs") {
  const Dataset data = testing::cluster_fixture(8, 3, 6, 17);
  RunConfig cfg = small_config();
  CvOptions opts;
  opts.folds = 4;
  opts.grid = {{4, 2}, {8, 5}, {16, 10}};
  const CvResult serial = cross_validate(data, cfg, opts);
  CHECK(serial.grid_scores.size() == 3);

  CvOptions parallel = opts;
  parallel.jobs = 4;
  const CvResult par = cross_validate(data, cfg, parallel);
  CHECK(par.best.embed_dim == serial.best.embed_dim);
  CHECK(par.best.k_neighbors == serial.best.k_neighbors);
  CHECK(par.report.per_fold == serial.report.per_fold);  // scheduling-independent

  // Unknown selection metric is a contract error.
  CvOptions bad = opts;
  bad.select_metric = "nope";
  CHECK_THROWS_AS(cross_validate(data, cfg, bad), std::invalid_argument);
}

TEST_CASE("ablation switches produce different but valid models") {
  const Dataset data = testing::cluster_fixture(8, 3, 5, 19);
  RunConfig base = small_config();
  const TrainedModel kl = train_model(data, base);

  RunConfig js = base;
  js.divergence = Divergence::JS;
  const TrainedModel js_model = train_model(data, js);

  RunConfig point = base;
  point.gaussian_mode = GaussianMode::Point;
  const TrainedModel point_model = train_model(data, point);

  CHECK(kl.regression.W != js_model.regression.W);
  CHECK(kl.regression.W != point_model.regression.W);
  // Point mode never touches variances.
  for (int l = 0; l < point_model.c; ++l) {
    CHECK(point_model.embeddings.gaussians[l].log_var.norm() == 0.0);
  }
}

TEST_CASE("bias flag changes the learned map shape consistently") {
  const Dataset data = testing::cluster_fixture(6, 2, 4, 23);
  RunConfig cfg = small_config();
  cfg.bias = true;
  const TrainedModel model = train_model(data, cfg);
  CHECK(model.regression.W.rows() == data.q + 1);
  const auto preds = predict_scores(model, data);  // same raw q still accepted
  CHECK(static_cast<int>(preds.size()) == data.n);
}
