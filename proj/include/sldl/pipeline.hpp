#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sldl/correlation.hpp"
#include "sldl/dataset.hpp"
#include "sldl/decoder.hpp"
#include "sldl/embedding.hpp"
#include "sldl/metrics.hpp"
#include "sldl/regressor.hpp"

namespace sldl {

/// Every knob of the full pipeline. A single seed drives all randomness.
struct RunConfig {
  int embed_dim = 64;
  double tau = 0.1;
  double alpha = 1.0;
  int walk_steps = 4;
  int rounds = 20;
  int pairs_per_anchor = 10;
  double learning_rate = 0.05;
  int k_neighbors = 50;
  int k_out = 5;
  std::uint64_t seed = 0;
  Divergence divergence = Divergence::KL;
  GaussianMode gaussian_mode = GaussianMode::Gaussian;
  bool bias = false;
  NdcgNormalizer ndcg_normalizer = NdcgNormalizer::Paper;
  double propensity_a = 0.55;
  double propensity_b = 1.5;
  LbfgsConfig lbfgs;

  EmbeddingConfig embedding_config() const {
    EmbeddingConfig cfg;
    cfg.latent_dim = embed_dim;
    cfg.tau = tau;
    cfg.rounds = rounds;
    cfg.pairs_per_anchor = pairs_per_anchor;
    cfg.learning_rate = learning_rate;
    cfg.seed = seed;
    cfg.divergence = divergence;
    cfg.gaussian_mode = gaussian_mode;
    return cfg;
  }
};

/// Everything the test-time path needs, plus the config that produced it.
struct TrainedModel {
  int q = 0;  // raw feature count expected of inputs (before any bias column)
  int c = 0;
  RunConfig config;
  EmbeddingSet embeddings;
  RegressionModel regression;
  DecoderState decoder;
};

/// Full training pass on a raw (unnormalized) dataset: normalize, build the
/// transfer matrix, train label Gaussians, embed instances, fit the linear
/// map, freeze the decoder. Optionally exposes the transfer matrices.
TrainedModel train_model(const Dataset& raw, const RunConfig& config,
                         TransferMatrices* transfer_out = nullptr);

/// Scores for every instance of a raw test dataset. Requires test.q == model.q.
std::vector<PredictionScores> predict_scores(const TrainedModel& model, const Dataset& raw_test);

struct GridPoint {
  int embed_dim = 64;
  int k_neighbors = 50;
};

struct CvOptions {
  int folds = 10;
  std::vector<GridPoint> grid;          // empty: single point from the config
  std::string select_metric = "P@1";
  int jobs = 1;
  std::vector<int> extra_ks;            // extra k values beyond {1,3,5}
};

struct CvResult {
  GridPoint best;
  MetricReport report;  // metrics of the best grid point across folds
  std::vector<std::pair<GridPoint, double>> grid_scores;  // selection metric means
  std::string select_metric;
};

/// The paper-style grids: embed_dim in {16,32,...,128}, k in {10,20,...,100}.
std::vector<GridPoint> default_grid();

/// Fold-wise train/evaluate over every grid point; selects the grid point
/// maximizing the mean of the selection metric (ties: earlier grid entry).
/// Propensities come from each fold's training split. k_neighbors is clamped
/// to the training-fold size. Jobs run fold x grid tasks in parallel;
/// results are aggregated in fixed (grid, fold) order, so the output does not
/// depend on scheduling.
CvResult cross_validate(const Dataset& raw, const RunConfig& base, const CvOptions& options);

}  // namespace sldl
