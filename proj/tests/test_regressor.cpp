#include <doctest.h>

#include <cmath>

#include "sldl/regressor.hpp"
#include "sldl/rng.hpp"

using namespace sldl;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.next_gaussian();
  }
  return m;
}

}  // namespace

TEST_CASE("ridge_objective plug-in values") {
  Rng rng(1);
  const Eigen::MatrixXd X = random_matrix(rng, 5, 3);
  const Eigen::MatrixXd Z = random_matrix(rng, 5, 2);
  const Eigen::MatrixXd W0 = Eigen::MatrixXd::Zero(3, 2);
  CHECK(ridge_objective(W0, X, Z, 1.0) == doctest::Approx(Z.squaredNorm()).epsilon(1e-14));

  const Eigen::MatrixXd W = random_matrix(rng, 3, 2);
  CHECK(ridge_objective(W, X, X * W, 0.0) == doctest::Approx(0.0).epsilon(1e-12));

  const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK(ridge_objective(I2, I2, I2, 1.0) == 2.0);

  CHECK_THROWS_AS(ridge_objective(W, X, random_matrix(rng, 4, 2), 1.0), std::invalid_argument);
}

TEST_CASE("ridge_gradient matches finite differences") {
  Rng rng(2);
  const Eigen::MatrixXd X = random_matrix(rng, 6, 4);
  const Eigen::MatrixXd Z = random_matrix(rng, 6, 3);
  Eigen::MatrixXd W = random_matrix(rng, 4, 3);
  const double alpha = 0.7;
  const Eigen::MatrixXd G = ridge_gradient(W, X, Z, alpha);

  const double h = 1e-6;
  for (int i = 0; i < W.rows(); ++i) {
    for (int j = 0; j < W.cols(); ++j) {
      const double saved = W(i, j);
      W(i, j) = saved + h;
      const double up = ridge_objective(W, X, Z, alpha);
      W(i, j) = saved - h;
      const double down = ridge_objective(W, X, Z, alpha);
      W(i, j) = saved;
      const double fd = (up - down) / (2.0 * h);
      CHECK(std::abs(fd - G(i, j)) / std::max(1.0, std::abs(fd)) < 1e-5);
    }
  }
}

TEST_CASE("ridge_gradient vanishes at the closed-form minimizer") {
  Rng rng(3);
  const Eigen::MatrixXd X = random_matrix(rng, 20, 6);
  const Eigen::MatrixXd Z = random_matrix(rng, 20, 4);
  const Eigen::MatrixXd W = closed_form_ridge(X, Z, 1.0);
  CHECK(ridge_gradient(W, X, Z, 1.0).norm() < 1e-8);

  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(6, 4);
  CHECK(ridge_gradient(zero, Eigen::MatrixXd::Zero(20, 6), Eigen::MatrixXd::Zero(20, 4), 0.0)
            .norm() == 0.0);
}

TEST_CASE("closed_form_ridge identities") {
  Rng rng(4);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(5, 5);
  const Eigen::MatrixXd Z = random_matrix(rng, 5, 3);
  CHECK((closed_form_ridge(I, Z, 0.0) - Z).norm() < 1e-12);
  CHECK((closed_form_ridge(I, Z, 1.0) - 0.5 * Z).norm() < 1e-12);

  const Eigen::MatrixXd X = random_matrix(rng, 50, 20);
  const Eigen::MatrixXd Z2 = random_matrix(rng, 50, 8);
  const Eigen::MatrixXd W = closed_form_ridge(X, Z2, 1.0);
  CHECK(ridge_gradient(W, X, Z2, 1.0).norm() < 1e-8);

  // Rank-deficient X with alpha = 0 has no unique minimizer.
  Eigen::MatrixXd deficient = Eigen::MatrixXd::Zero(4, 3);
  deficient.col(0).setOnes();
  CHECK_THROWS_AS(closed_form_ridge(deficient, random_matrix(rng, 4, 2), 0.0), NumericError);
}

TEST_CASE("lbfgs minimizes simple analytic functions") {
  LbfgsConfig cfg;
  cfg.grad_tol = 1e-10;

  const Objective parabola = [](const Eigen::VectorXd& w) { return (w[0] - 3.0) * (w[0] - 3.0); };
  const GradientFn parabola_grad = [](const Eigen::VectorXd& w) {
    return Eigen::VectorXd::Constant(1, 2.0 * (w[0] - 3.0)).eval();
  };
  const LbfgsResult r1 = lbfgs_minimize(parabola, parabola_grad, Eigen::VectorXd::Zero(1), cfg);
  CHECK(std::abs(r1.x[0] - 3.0) < 1e-8);
  CHECK(r1.converged);

  const Objective rosenbrock = [](const Eigen::VectorXd& w) {
    const double a = 1.0 - w[0];
    const double b = w[1] - w[0] * w[0];
    return a * a + 100.0 * b * b;
  };
  const GradientFn rosenbrock_grad = [](const Eigen::VectorXd& w) {
    Eigen::VectorXd g(2);
    const double b = w[1] - w[0] * w[0];
    g[0] = -2.0 * (1.0 - w[0]) - 400.0 * w[0] * b;
    g[1] = 200.0 * b;
    return g;
  };
  Eigen::VectorXd start(2);
  start << -1.2, 1.0;
  const LbfgsResult r2 = lbfgs_minimize(rosenbrock, rosenbrock_grad, start, cfg);
  CHECK(std::abs(r2.x[0] - 1.0) < 1e-6);
  CHECK(std::abs(r2.x[1] - 1.0) < 1e-6);
}

TEST_CASE("lbfgs matches the closed-form ridge oracle") {
  Rng rng(5);
  const Eigen::MatrixXd X = random_matrix(rng, 100, 30);
  const Eigen::MatrixXd Z = random_matrix(rng, 100, 8);
  const Eigen::MatrixXd oracle = closed_form_ridge(X, Z, 1.0);

  LbfgsConfig cfg;
  const RegressionModel model = train(X, Z, 1.0, cfg);
  CHECK((model.W - oracle).norm() / oracle.norm() < 1e-4);
}

TEST_CASE("lbfgs audit: strong Wolfe conditions and monotone descent") {
  Rng rng(6);
  const Eigen::MatrixXd X = random_matrix(rng, 40, 12);
  const Eigen::MatrixXd Z = random_matrix(rng, 40, 5);

  LbfgsConfig cfg;
  LbfgsResult diag;
  train(X, Z, 1.0, cfg, &diag);
  REQUIRE(diag.trace.size() > 1);
  for (const LbfgsIteration& it : diag.trace) {
    CHECK(it.f_after <= it.f_before + cfg.c1 * it.step * it.dir_deriv_before);  // Armijo
    CHECK(std::abs(it.dir_deriv_after) <= cfg.c2 * std::abs(it.dir_deriv_before));  // curvature
    CHECK(it.f_after <= it.f_before);
    CHECK(it.step > 0.0);
  }
}

TEST_CASE("train handles the already-minimal case") {
  Rng rng(7);
  const Eigen::MatrixXd X = random_matrix(rng, 10, 4);
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(10, 3);
  const RegressionModel model = train(X, Z, 1.0, LbfgsConfig{});
  CHECK(model.W.norm() == 0.0);
}

TEST_CASE("strong convexity: distinct starts converge to the same solution") {
  Rng rng(8);
  const Eigen::MatrixXd X = random_matrix(rng, 30, 10);
  const Eigen::MatrixXd Z = random_matrix(rng, 30, 4);
  LbfgsConfig cfg;
  const double alpha = 2.0;  // Hessian floor 2*alpha keeps solutions 1e-6-close

  const auto solve_from = [&](const Eigen::VectorXd& x0) {
    const Objective f = [&](const Eigen::VectorXd& v) {
      return ridge_objective(Eigen::Map<const Eigen::MatrixXd>(v.data(), 10, 4), X, Z, alpha);
    };
    const GradientFn g = [&](const Eigen::VectorXd& v) {
      const Eigen::MatrixXd G =
          ridge_gradient(Eigen::Map<const Eigen::MatrixXd>(v.data(), 10, 4), X, Z, alpha);
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(G.data(), G.size()));
    };
    return lbfgs_minimize(f, g, x0, cfg).x;
  };

  const Eigen::VectorXd from_zero = solve_from(Eigen::VectorXd::Zero(40));
  Eigen::VectorXd other(40);
  for (int i = 0; i < 40; ++i) other[i] = rng.next_gaussian();
  const Eigen::VectorXd from_random = solve_from(other);
  CHECK((from_zero - from_random).norm() < 1e-6);
}

TEST_CASE("doubling alpha never increases the solution norm") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd X = random_matrix(rng, 25, 8);
    const Eigen::MatrixXd Z = random_matrix(rng, 25, 3);
    const double n_half = closed_form_ridge(X, Z, 0.5).norm();
    const double n_one = closed_form_ridge(X, Z, 1.0).norm();
    const double n_two = closed_form_ridge(X, Z, 2.0).norm();
    CHECK(n_one <= n_half);
    CHECK(n_two <= n_one);
  }
}

TEST_CASE("lbfgs rejects bad configuration and non-finite objectives") {
  LbfgsConfig bad;
  bad.c1 = 0.95;  // violates c1 < c2
  const Objective f = [](const Eigen::VectorXd& w) { return w.squaredNorm(); };
  const GradientFn g = [](const Eigen::VectorXd& w) { return (2.0 * w).eval(); };
  CHECK_THROWS_AS(lbfgs_minimize(f, g, Eigen::VectorXd::Ones(2), bad), std::invalid_argument);

  const Objective nan_f = [](const Eigen::VectorXd&) { return std::nan(""); };
  CHECK_THROWS_AS(lbfgs_minimize(nan_f, g, Eigen::VectorXd::Ones(2), LbfgsConfig{}), NumericError);
}
