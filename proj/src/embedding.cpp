#include "sldl/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sldl/rng.hpp"

namespace sldl {

namespace {

void require_same_dim(const LabelGaussian& a, const LabelGaussian& b) {
  if (a.mu.size() != b.mu.size() || a.log_var.size() != b.log_var.size() ||
      a.mu.size() != a.log_var.size()) {
    throw std::invalid_argument("Gaussian dimension mismatch");
  }
}

double kl_impl(const Eigen::ArrayXd& mu_x, const Eigen::ArrayXd& lv_x, const Eigen::ArrayXd& mu_y,
               const Eigen::ArrayXd& lv_y) {
  const Eigen::ArrayXd ratio = (lv_x - lv_y).exp();           // var_x / var_y
  const Eigen::ArrayXd t = (mu_x - mu_y).square() / lv_y.exp();
  return 0.5 * (ratio + t - 1.0 - (lv_x - lv_y)).sum();
}

double div_value(const LabelGaussian& a, const LabelGaussian& b, Divergence div,
                 GaussianMode mode) {
  if (mode == GaussianMode::Point) return point_divergence(a, b);
  return div == Divergence::KL ? kl_divergence(a, b) : js_divergence(a, b);
}

// Value and gradients of one divergence term D(a, b) w.r.t. (mu, log_var) of
// both arguments.
struct DivGradients {
  double value = 0.0;
  Eigen::VectorXd d_mu_a, d_lv_a, d_mu_b, d_lv_b;
};

DivGradients kl_gradients(const LabelGaussian& a, const LabelGaussian& b) {
  const Eigen::ArrayXd va = a.variance();
  const Eigen::ArrayXd vb = b.variance();
  const Eigen::ArrayXd delta = a.mu.array() - b.mu.array();
  const Eigen::ArrayXd ratio = va / vb;

  DivGradients g;
  g.value = 0.5 * (ratio + delta.square() / vb - 1.0 - (a.log_var.array() - b.log_var.array())).sum();
  g.d_mu_a = (delta / vb).matrix();
  g.d_mu_b = -g.d_mu_a;
  g.d_lv_a = (0.5 * (ratio - 1.0)).matrix();
  g.d_lv_b = (0.5 * (1.0 - ratio - delta.square() / vb)).matrix();
  return g;
}

// The mu_m chain terms cancel (the two offsets to the midpoint are opposite),
// which collapses the JS gradient to the closed forms below.
DivGradients js_gradients(const LabelGaussian& a, const LabelGaussian& b) {
  const Eigen::ArrayXd va = a.variance();
  const Eigen::ArrayXd vb = b.variance();
  const Eigen::ArrayXd vm = 0.5 * (va + vb);
  const Eigen::ArrayXd delta = a.mu.array() - b.mu.array();

  DivGradients g;
  g.value = js_divergence(a, b);
  g.d_mu_a = (0.25 * delta / vm).matrix();
  g.d_mu_b = -g.d_mu_a;
  const Eigen::ArrayXd shared = delta.square() / (16.0 * vm.square());
  g.d_lv_a = (va * (0.25 * (1.0 / vm - 1.0 / va)) - va * shared).matrix();
  g.d_lv_b = (vb * (0.25 * (1.0 / vm - 1.0 / vb)) - vb * shared).matrix();
  return g;
}

DivGradients point_gradients(const LabelGaussian& a, const LabelGaussian& b) {
  DivGradients g;
  const Eigen::VectorXd delta = a.mu - b.mu;
  g.value = delta.squaredNorm();
  g.d_mu_a = 2.0 * delta;
  g.d_mu_b = -g.d_mu_a;
  g.d_lv_a = Eigen::VectorXd::Zero(a.mu.size());
  g.d_lv_b = Eigen::VectorXd::Zero(a.mu.size());
  return g;
}

DivGradients div_gradients(const LabelGaussian& a, const LabelGaussian& b, Divergence div,
                           GaussianMode mode) {
  if (mode == GaussianMode::Point) return point_gradients(a, b);
  return div == Divergence::KL ? kl_gradients(a, b) : js_gradients(a, b);
}

}  // namespace

double kl_divergence(const LabelGaussian& a, const LabelGaussian& b) {
  require_same_dim(a, b);
  return kl_impl(a.mu.array(), a.log_var.array(), b.mu.array(), b.log_var.array());
}

double js_divergence(const LabelGaussian& a, const LabelGaussian& b) {
  require_same_dim(a, b);
  LabelGaussian m;
  m.mu = 0.5 * (a.mu + b.mu);
  m.log_var = (0.5 * (a.variance() + b.variance())).log().matrix();
  return 0.5 * kl_divergence(a, m) + 0.5 * kl_divergence(b, m);
}

double point_divergence(const LabelGaussian& a, const LabelGaussian& b) {
  require_same_dim(a, b);
  return (a.mu - b.mu).squaredNorm();
}

double triplet_hinge(const LabelGaussian& anchor, const LabelGaussian& pos,
                     const LabelGaussian& neg, double tau) {
  if (tau < 0.0) throw std::invalid_argument("tau must be nonnegative");
  return std::max(0.0, kl_divergence(anchor, pos) - kl_divergence(anchor, neg) + tau);
}

TripletGradients triplet_hinge_gradients(const LabelGaussian& anchor, const LabelGaussian& pos,
                                         const LabelGaussian& neg, double tau,
                                         Divergence divergence, GaussianMode mode) {
  if (tau < 0.0) throw std::invalid_argument("tau must be nonnegative");
  require_same_dim(anchor, pos);
  require_same_dim(anchor, neg);

  const DivGradients dp = div_gradients(anchor, pos, divergence, mode);
  const DivGradients dn = div_gradients(anchor, neg, divergence, mode);
  const double margin = dp.value - dn.value + tau;

  TripletGradients g;
  const Eigen::Index dim = anchor.mu.size();
  if (margin <= 0.0) {
    g.d_mu_anchor = g.d_lv_anchor = Eigen::VectorXd::Zero(dim);
    g.d_mu_pos = g.d_lv_pos = Eigen::VectorXd::Zero(dim);
    g.d_mu_neg = g.d_lv_neg = Eigen::VectorXd::Zero(dim);
    return g;
  }
  g.loss = margin;
  g.active = true;
  g.d_mu_anchor = dp.d_mu_a - dn.d_mu_a;
  g.d_lv_anchor = dp.d_lv_a - dn.d_lv_a;
  g.d_mu_pos = dp.d_mu_b;
  g.d_lv_pos = dp.d_lv_b;
  g.d_mu_neg = -dn.d_mu_b;
  g.d_lv_neg = -dn.d_lv_b;
  return g;
}

std::vector<int> rank_row(const Eigen::MatrixXd& P_hat, int anchor) {
  const int c = static_cast<int>(P_hat.rows());
  if (anchor < 0 || anchor >= c) throw std::invalid_argument("anchor index out of range");
  std::vector<int> order;
  order.reserve(c - 1);
  for (int l = 0; l < c; ++l) {
    if (l != anchor) order.push_back(l);
  }
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (P_hat(anchor, x) != P_hat(anchor, y)) return P_hat(anchor, x) > P_hat(anchor, y);
    return x < y;
  });
  return order;
}

EmbeddingSet train_embeddings(const Eigen::MatrixXd& P_hat, const EmbeddingConfig& cfg,
                              EmbeddingTrainTrace* trace) {
  if (cfg.latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (cfg.tau < 0.0) throw std::invalid_argument("tau must be nonnegative");
  if (cfg.rounds < 0) throw std::invalid_argument("rounds must be nonnegative");
  if (cfg.pairs_per_anchor < 0) throw std::invalid_argument("pairs_per_anchor must be nonnegative");
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (P_hat.rows() != P_hat.cols()) throw std::invalid_argument("P_hat must be square");

  const int c = static_cast<int>(P_hat.rows());
  EmbeddingSet set;
  set.latent_dim = cfg.latent_dim;
  set.gaussians.resize(c);

  Rng rng(cfg.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
  for (int l = 0; l < c; ++l) {
    auto& g = set.gaussians[l];
    g.mu.resize(cfg.latent_dim);
    for (int k = 0; k < cfg.latent_dim; ++k) g.mu[k] = rng.next_gaussian() * scale;
    g.log_var = Eigen::VectorXd::Zero(cfg.latent_dim);
  }

  const int jmax = std::min(c - 2, cfg.pairs_per_anchor);
  if (jmax < 1) return set;  // fewer than 3 labels: no (pos, neg) pair exists

  std::vector<std::vector<int>> ranked(c);
  for (int i = 0; i < c; ++i) ranked[i] = rank_row(P_hat, i);

  const auto mean_hinge = [&]() {
    double sum = 0.0;
    for (int i = 0; i < c; ++i) {
      for (int j = 1; j <= jmax; ++j) {
        const auto& a = set.gaussians[i];
        const auto& p = set.gaussians[ranked[i][j - 1]];
        const auto& n = set.gaussians[ranked[i][j]];
        sum += std::max(0.0, div_value(a, p, cfg.divergence, cfg.gaussian_mode) -
                                 div_value(a, n, cfg.divergence, cfg.gaussian_mode) + cfg.tau);
      }
    }
    return sum / (static_cast<double>(c) * jmax);
  };

  if (trace) trace->round_mean_hinge.push_back(mean_hinge());

  for (int round = 0; round < cfg.rounds; ++round) {
    for (int i = 0; i < c; ++i) {
      for (int j = 1; j <= jmax; ++j) {
        const int pos = ranked[i][j - 1];
        const int neg = ranked[i][j];
        const TripletGradients g = triplet_hinge_gradients(
            set.gaussians[i], set.gaussians[pos], set.gaussians[neg], cfg.tau, cfg.divergence,
            cfg.gaussian_mode);
        if (!g.active) continue;
        const double lr = cfg.learning_rate;
        set.gaussians[i].mu -= lr * g.d_mu_anchor;
        set.gaussians[i].log_var -= lr * g.d_lv_anchor;
        set.gaussians[pos].mu -= lr * g.d_mu_pos;
        set.gaussians[pos].log_var -= lr * g.d_lv_pos;
        set.gaussians[neg].mu -= lr * g.d_mu_neg;
        set.gaussians[neg].log_var -= lr * g.d_lv_neg;
      }
    }
    if (trace) trace->round_mean_hinge.push_back(mean_hinge());
  }
  return set;
}

Eigen::VectorXd embed_instance(const std::vector<int>& labels, const EmbeddingSet& set) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(set.latent_dim);
  for (int l : labels) z += set.gaussians[l].mu;
  return z;
}

Eigen::MatrixXd embed_all(const std::vector<std::vector<int>>& labels, const EmbeddingSet& set) {
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(labels.size()), set.latent_dim);
  for (std::size_t i = 0; i < labels.size(); ++i) Z.row(i) = embed_instance(labels[i], set);
  return Z;
}

}  // namespace sldl
