#include "sldl/correlation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sldl {

Eigen::MatrixXd build_cooccurrence(const std::vector<std::vector<int>>& labels, int label_count) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(label_count, label_count);
  for (const auto& ls : labels) {
    for (std::size_t a = 0; a < ls.size(); ++a) {
      A(ls[a], ls[a]) = 1.0;
      for (std::size_t b = a + 1; b < ls.size(); ++b) {
        A(ls[a], ls[b]) = 1.0;
        A(ls[b], ls[a]) = 1.0;
      }
    }
  }
  return A;
}

Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& A) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double sum = A.row(i).sum();
    if (sum > 0.0) {
      out.row(i) = A.row(i) / sum;
    } else {
      out(i, i) = 1.0;
    }
  }
  return out;
}

Eigen::MatrixXd transfer_matrix(const Eigen::MatrixXd& A_hat, int steps) {
  if (steps < 0) throw std::invalid_argument("steps must be nonnegative");
  if (A_hat.rows() != A_hat.cols()) throw std::invalid_argument("A_hat must be square");
  for (Eigen::Index i = 0; i < A_hat.rows(); ++i) {
    const double dev = std::abs(A_hat.row(i).sum() - 1.0);
    if (dev > 1e-6) {
      throw std::invalid_argument("A_hat row " + std::to_string(i) +
                                  " is not stochastic (sum deviates by " + std::to_string(dev) + ")");
    }
  }

  Eigen::MatrixXd P = A_hat;
  Eigen::MatrixXd P_total = A_hat;  // gamma^(0) * P^(0)
  double gamma = 1.0;
  for (int s = 0; s < steps; ++s) {
    P = P * A_hat;
    gamma *= 0.5;
    P_total += gamma * P;
  }
  return row_normalize(P_total);
}

TransferMatrices build_transfer(const std::vector<std::vector<int>>& labels, int label_count,
                                int steps) {
  TransferMatrices tm;
  tm.A = build_cooccurrence(labels, label_count);
  tm.A_hat = row_normalize(tm.A);
  tm.step_count = steps;
  tm.gamma_schedule.resize(steps + 1);
  double gamma = 1.0;
  tm.gamma_schedule[0] = gamma;

  Eigen::MatrixXd P = tm.A_hat;
  tm.P_total = tm.A_hat;
  for (int s = 0; s < steps; ++s) {
    P = P * tm.A_hat;
    gamma *= 0.5;
    tm.gamma_schedule[s + 1] = gamma;
    tm.P_total += gamma * P;
  }
  tm.P_hat = row_normalize(tm.P_total);
  return tm;
}

}  // namespace sldl
