#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sldl {

/// Label-to-label transfer structure built from a binary label matrix:
/// co-occurrence A, its row-normalized form, the discounted random-walk
/// accumulation, and the final row-standardized transfer matrix.
struct TransferMatrices {
  Eigen::MatrixXd A;        // c x c, entries in {0,1}, symmetric
  Eigen::MatrixXd A_hat;    // row-stochastic
  Eigen::MatrixXd P_total;  // nonnegative accumulation
  Eigen::MatrixXd P_hat;    // row-stochastic standardization of P_total
  int step_count = 0;
  std::vector<double> gamma_schedule;  // gamma^(0..steps), halving each step
};

/// A_ij = 1 iff labels i != j appear together in at least one instance.
/// A_ii = 1 for every label observed at least once, so no observed label has
/// a zero row when normalizing.
Eigen::MatrixXd build_cooccurrence(const std::vector<std::vector<int>>& labels, int label_count);

/// Divide each row by its sum. Zero rows (labels never observed) become the
/// identity row e_i, which keeps the matrix stochastic without inventing
/// correlations.
Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& A);

/// Discounted random-walk accumulation: starting from P = A_hat with unit
/// discount, repeatedly advance P <- P * A_hat and halve the discount, summing
/// discounted terms; the result is row-standardized. Throws
/// std::invalid_argument when a row sum of A_hat deviates from 1 by > 1e-6.
Eigen::MatrixXd transfer_matrix(const Eigen::MatrixXd& A_hat, int steps);

/// Full construction keeping intermediates (debug dumps, tests).
TransferMatrices build_transfer(const std::vector<std::vector<int>>& labels, int label_count,
                                int steps);

}  // namespace sldl
