#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

#include "sldl/errors.hpp"

namespace sldl {

/// Linear map from normalized features to the latent space, fit by ridge
/// regression: |Z - XW|_F^2 + alpha |W|_F^2. Nothing in this module depends
/// on the number of labels; it sees only (n, q, latent_dim)-shaped data.
struct RegressionModel {
  Eigen::MatrixXd W;  // q x latent_dim
  double alpha = 1.0;
};

struct LbfgsConfig {
  int memory = 10;        // stored (step, gradient-difference) pairs
  int max_iters = 500;
  double grad_tol = 1e-6;
  double c1 = 1e-4;       // sufficient-decrease constant
  double c2 = 0.9;        // curvature constant, 0 < c1 < c2 < 1
  bool verbose = false;   // per-iteration log line on stderr
};

/// Scalars recorded at each accepted step, enough to re-audit both strong
/// Wolfe inequalities after the fact.
struct LbfgsIteration {
  double f_before = 0.0;
  double f_after = 0.0;
  double dir_deriv_before = 0.0;  // grad(x)      . d
  double dir_deriv_after = 0.0;   // grad(x + bd) . d
  double step = 0.0;              // accepted beta
  double grad_norm = 0.0;         // |grad| after the step
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<LbfgsIteration> trace;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Limited-memory quasi-Newton minimization. Search directions come from the
/// standard two-loop recursion over the last `memory` curvature pairs; every
/// step length satisfies the strong Wolfe conditions with (c1, c2). Throws
/// NumericError when the objective turns non-finite or the line search cannot
/// find an acceptable step within 50 trial evaluations.
LbfgsResult lbfgs_minimize(const Objective& f, const GradientFn& g, Eigen::VectorXd x0,
                           const LbfgsConfig& cfg);

template <class XMat>
double ridge_objective(const Eigen::MatrixXd& W, const XMat& X, const Eigen::MatrixXd& Z,
                       double alpha) {
  if (X.cols() != W.rows() || X.rows() != Z.rows() || W.cols() != Z.cols()) {
    throw std::invalid_argument("ridge_objective: shape mismatch");
  }
  const Eigen::MatrixXd residual = Z - X * W;
  return residual.squaredNorm() + alpha * W.squaredNorm();
}

template <class XMat>
Eigen::MatrixXd ridge_gradient(const Eigen::MatrixXd& W, const XMat& X, const Eigen::MatrixXd& Z,
                               double alpha) {
  if (X.cols() != W.rows() || X.rows() != Z.rows() || W.cols() != Z.cols()) {
    throw std::invalid_argument("ridge_gradient: shape mismatch");
  }
  const Eigen::MatrixXd residual = X * W - Z;
  const Eigen::MatrixXd back = X.transpose() * residual;
  return 2.0 * back + 2.0 * alpha * W;
}

/// Exact minimizer (X^T X + alpha I)^{-1} X^T Z, used as the test oracle for
/// the iterative path. Requires alpha > 0 or full-rank X^T X.
template <class XMat>
Eigen::MatrixXd closed_form_ridge(const XMat& X, const Eigen::MatrixXd& Z, double alpha) {
  if (X.rows() != Z.rows()) throw std::invalid_argument("closed_form_ridge: shape mismatch");
  Eigen::MatrixXd gram = Eigen::MatrixXd(X.transpose() * X);
  gram.diagonal().array() += alpha;
  const Eigen::MatrixXd rhs = Eigen::MatrixXd(X.transpose() * Z);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const double d_max = ldlt.vectorD().cwiseAbs().maxCoeff();
  const bool singular =
      d_max <= 0.0 || (ldlt.vectorD().array().abs() <= 1e-12 * d_max).any();
  Eigen::MatrixXd W = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || singular || !W.allFinite()) {
    throw NumericError("closed_form_ridge: singular system (alpha = 0 with rank-deficient X)");
  }
  return W;
}

/// Fit W by L-BFGS from the zero start. X rows are assumed L2-normalized
/// upstream.
template <class XMat>
RegressionModel train(const XMat& X, const Eigen::MatrixXd& Z, double alpha,
                      const LbfgsConfig& cfg, LbfgsResult* diagnostics = nullptr) {
  const Eigen::Index q = X.cols();
  const Eigen::Index dim = Z.cols();
  const auto unflatten = [q, dim](const Eigen::VectorXd& v) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), q, dim);
  };
  const Objective fobj = [&](const Eigen::VectorXd& v) {
    return ridge_objective(unflatten(v), X, Z, alpha);
  };
  const GradientFn fgrad = [&](const Eigen::VectorXd& v) {
    const Eigen::MatrixXd G = ridge_gradient(unflatten(v), X, Z, alpha);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(G.data(), G.size()));
  };
  LbfgsResult res = lbfgs_minimize(fobj, fgrad, Eigen::VectorXd::Zero(q * dim), cfg);
  RegressionModel model;
  model.W = unflatten(res.x);
  model.alpha = alpha;
  if (diagnostics) *diagnostics = std::move(res);
  return model;
}

}  // namespace sldl
