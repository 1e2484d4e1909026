#include "sldl/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sldl {

DecoderState build_decoder(const SparseRowMatrix& X, const RegressionModel& model,
                           const std::vector<std::vector<int>>& labels, int label_count,
                           int k_neighbors) {
  if (X.cols() != model.W.rows()) throw std::invalid_argument("build_decoder: shape mismatch");
  if (static_cast<std::size_t>(X.rows()) != labels.size()) {
    throw std::invalid_argument("build_decoder: label rows do not match feature rows");
  }
  if (k_neighbors < 1 || k_neighbors > X.rows()) {
    throw std::invalid_argument("k_neighbors out of range [1, n]");
  }
  DecoderState state;
  state.Z_hat = X * model.W;
  state.train_labels = labels;
  state.label_count = label_count;
  state.k_neighbors = k_neighbors;
  return state;
}

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-15 || nb < 1e-15) return 1.0;
  return std::clamp(1.0 - a.dot(b) / (na * nb), 0.0, 2.0);
}

PredictionScores decode(const Eigen::VectorXd& z_query, const DecoderState& state) {
  if (z_query.size() != state.Z_hat.cols()) {
    throw std::invalid_argument("decode: query dimension mismatch");
  }
  const int n = static_cast<int>(state.Z_hat.rows());
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) dist[i] = {cosine_distance(z_query, state.Z_hat.row(i)), i};

  const int k = state.k_neighbors;
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  PredictionScores out;
  out.scores = Eigen::VectorXd::Zero(state.label_count);
  for (int r = 0; r < k; ++r) {
    const double weight = 1.0 / std::max(dist[r].first, state.epsilon);
    for (int l : state.train_labels[dist[r].second]) out.scores[l] += weight;
  }
  return out;
}

std::vector<int> top_k_labels(const PredictionScores& scores, int k_out) {
  const int c = static_cast<int>(scores.scores.size());
  if (k_out < 1 || k_out > c) throw std::invalid_argument("k_out out of range [1, c]");
  std::vector<int> order(c);
  for (int l = 0; l < c; ++l) order[l] = l;
  std::partial_sort(order.begin(), order.begin() + k_out, order.end(), [&](int x, int y) {
    if (scores.scores[x] != scores.scores[y]) return scores.scores[x] > scores.scores[y];
    return x < y;
  });
  order.resize(k_out);
  return order;
}

std::string format_prediction_line(const PredictionScores& scores, int k_out) {
  const std::vector<int> top = top_k_labels(scores, k_out);
  std::string line;
  char buf[64];
  for (std::size_t r = 0; r < top.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%s%d:%.6g", r == 0 ? "" : " ", top[r], scores.scores[top[r]]);
    line += buf;
  }
  return line;
}

bool check_bound(const Eigen::VectorXd& z, const Eigen::VectorXd& z_hat,
                 const Eigen::VectorXd& z_tilde, double cost, double b) {
  if (cost < 0.0) throw std::invalid_argument("check_bound: cost must be nonnegative");
  if (b <= 1.0) throw std::invalid_argument("check_bound: b must exceed 1");
  const double embed_err = (z - z_tilde).norm();
  const double regress_err = (z - z_hat).norm();
  if (embed_err > (b - 1.0) * regress_err) {
    throw std::invalid_argument("check_bound: nearest-neighbor precondition "
                                "E(z, z_tilde) <= (b-1) E(z, z_hat) violated");
  }
  const double lhs = cost;
  const double gap = embed_err - std::sqrt(cost);
  return lhs <= b * gap * gap + b * regress_err * regress_err;
}

}  // namespace sldl
