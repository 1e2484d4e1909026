#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace sldl {

/// Diagonal Gaussian in the latent space. Variance is kept as log_var so that
/// sigma^2 = exp(log_var) stays positive under unconstrained gradient steps.
struct LabelGaussian {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_var;

  Eigen::ArrayXd variance() const { return log_var.array().exp(); }
};

enum class Divergence { KL, JS };
enum class GaussianMode { Gaussian, Point };

struct EmbeddingConfig {
  int latent_dim = 64;
  double tau = 0.1;  // triplet margin threshold
  int rounds = 20;
  int pairs_per_anchor = 10;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  Divergence divergence = Divergence::KL;
  GaussianMode gaussian_mode = GaussianMode::Gaussian;
};

/// One Gaussian per label, uniform latent dimension.
struct EmbeddingSet {
  int latent_dim = 0;
  std::vector<LabelGaussian> gaussians;
};

/// KL(a || b) for diagonal Gaussians of equal dimension. Asymmetric: this is
/// what encodes directed label correlation.
double kl_divergence(const LabelGaussian& a, const LabelGaussian& b);

/// Symmetric surrogate used by the symmetric-correlation ablation:
/// JS(a,b) = (KL(a||m) + KL(b||m)) / 2 with m the parameter-averaged Gaussian
/// (mu_m = (mu_a+mu_b)/2, var_m = (var_a+var_b)/2). The true Gaussian mixture
/// has no closed-form KL, so the average is taken in parameter space.
double js_divergence(const LabelGaussian& a, const LabelGaussian& b);

/// Squared Euclidean distance of the means (no-Gaussian ablation).
double point_divergence(const LabelGaussian& a, const LabelGaussian& b);

/// max(0, KL(anchor||pos) - KL(anchor||neg) + tau).
double triplet_hinge(const LabelGaussian& anchor, const LabelGaussian& pos,
                     const LabelGaussian& neg, double tau);

/// Gradients of the triplet hinge with respect to both parameter vectors of
/// each participant. Zero at and below the hinge kink (margin <= 0).
struct TripletGradients {
  double loss = 0.0;
  bool active = false;  // margin > 0
  Eigen::VectorXd d_mu_anchor, d_lv_anchor;
  Eigen::VectorXd d_mu_pos, d_lv_pos;
  Eigen::VectorXd d_mu_neg, d_lv_neg;
};

TripletGradients triplet_hinge_gradients(const LabelGaussian& anchor, const LabelGaussian& pos,
                                         const LabelGaussian& neg, double tau,
                                         Divergence divergence = Divergence::KL,
                                         GaussianMode mode = GaussianMode::Gaussian);

/// Remaining labels sorted by descending transfer strength P_hat(anchor, .),
/// ties broken by ascending label index; the anchor itself is excluded.
std::vector<int> rank_row(const Eigen::MatrixXd& P_hat, int anchor);

/// Per-round mean hinge over all sampled (anchor, j) constraints; entry 0 is
/// the value at initialization.
struct EmbeddingTrainTrace {
  std::vector<double> round_mean_hinge;
};

/// Multi-round per-anchor optimization: for each anchor, walk the transfer
/// ranking and push the j-th ranked label KL-closer than the (j+1)-th by the
/// margin tau, one plain gradient step per triplet. Deterministic for a fixed
/// seed (fixed visit order, seeded initialization).
EmbeddingSet train_embeddings(const Eigen::MatrixXd& P_hat, const EmbeddingConfig& cfg,
                              EmbeddingTrainTrace* trace = nullptr);

/// z = sum of mu_l over the instance's labels. Empty label sets embed to 0.
Eigen::VectorXd embed_instance(const std::vector<int>& labels, const EmbeddingSet& set);

/// Stack embed_instance over all instances into an n x latent_dim matrix.
Eigen::MatrixXd embed_all(const std::vector<std::vector<int>>& labels, const EmbeddingSet& set);

}  // namespace sldl
