#include "sldl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace sldl {

namespace {

Dataset preprocess(const Dataset& raw, const RunConfig& config) {
  Dataset d = l2_normalize(raw);
  if (config.bias) d = append_bias_feature(d);
  return d;
}

}  // namespace

TrainedModel train_model(const Dataset& raw, const RunConfig& config,
                         TransferMatrices* transfer_out) {
  TrainedModel model;
  model.q = raw.q;
  model.c = raw.c;
  model.config = config;

  const Dataset d = preprocess(raw, config);
  TransferMatrices transfer = build_transfer(d.labels, d.c, config.walk_steps);
  model.embeddings = train_embeddings(transfer.P_hat, config.embedding_config());
  const Eigen::MatrixXd Z = embed_all(d.labels, model.embeddings);
  model.regression = train(d.features, Z, config.alpha, config.lbfgs);
  model.decoder =
      build_decoder(d.features, model.regression, d.labels, d.c, config.k_neighbors);
  if (transfer_out) *transfer_out = std::move(transfer);
  return model;
}

std::vector<PredictionScores> predict_scores(const TrainedModel& model, const Dataset& raw_test) {
  if (raw_test.q != model.q) {
    throw std::invalid_argument("feature dimension mismatch: model expects q=" +
                                std::to_string(model.q) + ", test data has q=" +
                                std::to_string(raw_test.q));
  }
  const Dataset d = preprocess(raw_test, model.config);
  const Eigen::MatrixXd Zq = d.features * model.regression.W;
  std::vector<PredictionScores> out;
  out.reserve(d.n);
  for (int i = 0; i < d.n; ++i) out.push_back(decode(Zq.row(i), model.decoder));
  return out;
}

std::vector<GridPoint> default_grid() {
  std::vector<GridPoint> grid;
  for (int dim = 16; dim <= 128; dim += 16) {
    for (int k = 10; k <= 100; k += 10) grid.push_back({dim, k});
  }
  return grid;
}

CvResult cross_validate(const Dataset& raw, const RunConfig& base, const CvOptions& options) {
  if (options.folds < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
  std::vector<GridPoint> grid = options.grid;
  if (grid.empty()) grid.push_back({base.embed_dim, base.k_neighbors});

  const FoldPlan plan = make_folds(raw, options.folds, base.seed);
  const std::size_t jobs_total = grid.size() * static_cast<std::size_t>(options.folds);
  std::vector<FoldMetrics> results(jobs_total);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  const auto worker = [&]() {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= jobs_total) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      try {
        const std::size_t g = job / options.folds;
        const int fold = static_cast<int>(job % options.folds);
        auto [train_part, test_part] = split_fold(raw, plan, fold);

        RunConfig cfg = base;
        cfg.embed_dim = grid[g].embed_dim;
        cfg.k_neighbors = std::min(grid[g].k_neighbors, train_part.n);
        const TrainedModel model = train_model(train_part, cfg);
        const auto preds = predict_scores(model, test_part);
        const PropensityModel prop = propensity_scores(
            label_frequencies(train_part), train_part.n, base.propensity_a, base.propensity_b);
        results[job] =
            evaluate(preds, test_part.labels, prop.xi, options.extra_ks, base.ndcg_normalizer);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int thread_count = std::max(1, std::min<int>(options.jobs, static_cast<int>(jobs_total)));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  CvResult cv;
  cv.select_metric = options.select_metric;
  std::size_t best_g = 0;
  double best_score = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double mean = 0.0;
    for (int f = 0; f < options.folds; ++f) {
      mean += results[g * options.folds + f].value_of(options.select_metric);
    }
    mean /= options.folds;
    cv.grid_scores.emplace_back(grid[g], mean);
    if (mean > best_score) {
      best_score = mean;
      best_g = g;
    }
  }
  cv.best = grid[best_g];
  std::vector<FoldMetrics> best_folds(results.begin() + best_g * options.folds,
                                      results.begin() + (best_g + 1) * options.folds);
  cv.report = aggregate_folds(best_folds, base.ndcg_normalizer);
  return cv;
}

}  // namespace sldl
