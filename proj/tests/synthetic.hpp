#pragma once

// Shared synthetic fixtures for unit and acceptance tests.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sldl/dataset.hpp"
#include "sldl/embedding.hpp"
#include "sldl/rng.hpp"

namespace sldl::testing {

/// Clustered multi-label fixture: `clusters` Gaussian feature clusters in R^q,
/// cluster t tagged with the 3-label set {3t, 3t+1, 3t+2}. The first two
/// labels appear in every instance of the cluster; the third only with
/// probability child_prob, so (3t+2 => 3t) holds while the converse fails —
/// one asymmetric implication pair per cluster.
inline Dataset cluster_fixture(int per_cluster, int clusters, int q, std::uint64_t seed,
                               double child_prob = 0.8, double noise = 0.5) {
  Rng rng(seed);
  const int n = per_cluster * clusters;
  const int c = 3 * clusters;

  std::vector<Eigen::VectorXd> centers(clusters);
  for (auto& center : centers) {
    center.resize(q);
    for (int j = 0; j < q; ++j) center[j] = rng.next_gaussian();
    center *= 6.0 / center.norm();
  }

  std::string text = std::to_string(n) + " " + std::to_string(q) + " " + std::to_string(c) + "\n";
  char buf[64];
  for (int t = 0; t < clusters; ++t) {
    for (int i = 0; i < per_cluster; ++i) {
      std::string labels = std::to_string(3 * t) + "," + std::to_string(3 * t + 1);
      if (rng.next_double() < child_prob) labels += "," + std::to_string(3 * t + 2);
      text += labels;
      for (int j = 0; j < q; ++j) {
        std::snprintf(buf, sizeof(buf), " %d:%.17g", j, centers[t][j] + noise * rng.next_gaussian());
        text += buf;
      }
      text += '\n';
    }
  }
  return parse_sparse_dataset(text);
}

/// Transfer matrix with planted, realizable ranking structure: a hidden set
/// of ground-truth Gaussians generates row weights exp(-KL/2), so each
/// anchor's ranking is exactly the KL ordering of some embedding configuration
/// and the triplet constraints are jointly satisfiable.
inline Eigen::MatrixXd planted_transfer_matrix(int c, std::uint64_t seed, int hidden_dim = 16) {
  Rng rng(seed);
  std::vector<LabelGaussian> hidden(c);
  for (auto& g : hidden) {
    g.mu.resize(hidden_dim);
    for (int k = 0; k < hidden_dim; ++k) g.mu[k] = rng.next_gaussian();
    g.log_var = Eigen::VectorXd::Zero(hidden_dim);
  }
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(c, c);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) {
      if (i != j) P(i, j) = std::exp(-0.5 * kl_divergence(hidden[i], hidden[j]));
    }
    P.row(i) /= P.row(i).sum();
  }
  return P;
}

}  // namespace sldl::testing
