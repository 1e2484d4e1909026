#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sldl/dataset.hpp"
#include "sldl/regressor.hpp"

namespace sldl {

/// Frozen state for nearest-neighbor decoding: training embeddings
/// transformed by the fitted map, the original training labels, and the
/// neighbor count. Immutable after build; decode is safe to call from
/// concurrent threads.
struct DecoderState {
  Eigen::MatrixXd Z_hat;                       // n x latent_dim, rows = X * W
  std::vector<std::vector<int>> train_labels;  // sorted label indices per row
  int label_count = 0;
  int k_neighbors = 1;
  double epsilon = 1e-6;  // floor for the reciprocal-distance weight
};

struct PredictionScores {
  Eigen::VectorXd scores;  // length c, nonnegative
};

/// Transform training instances into the learned latent space (Z_hat = X W).
/// Requires 1 <= k_neighbors <= n.
DecoderState build_decoder(const SparseRowMatrix& X, const RegressionModel& model,
                           const std::vector<std::vector<int>>& labels, int label_count,
                           int k_neighbors);

/// 1 - cos(a, b), in [0, 2]. Vectors with norm below 1e-15 are treated as
/// orthogonal to everything (distance 1), which keeps zero embeddings neutral.
double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Label scores for one query: the k nearest training rows by cosine distance
/// (ties broken by ascending row index) vote with weight 1 / max(d, epsilon).
PredictionScores decode(const Eigen::VectorXd& z_query, const DecoderState& state);

/// k_out labels by descending score, ties by ascending label index.
std::vector<int> top_k_labels(const PredictionScores& scores, int k_out);

/// One output line: "label:score" pairs in rank order, 6 significant digits.
std::string format_prediction_line(const PredictionScores& scores, int k_out);

/// Decoding-error bound harness: with E the Euclidean distance, checks
///   cost <= b (E(z, z_tilde) - sqrt(cost))^2 + b E(z, z_hat)^2.
/// Requires cost >= 0, b > 1 and the nearest-neighbor precondition
/// E(z, z_tilde) <= (b - 1) E(z, z_hat); a violated precondition throws
/// std::invalid_argument rather than returning false.
bool check_bound(const Eigen::VectorXd& z, const Eigen::VectorXd& z_hat,
                 const Eigen::VectorXd& z_tilde, double cost, double b);

}  // namespace sldl
