#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sldl/decoder.hpp"

namespace sldl {

enum class NdcgNormalizer {
  Paper,     // divide by sum_{i=1..k} 1/log2(i+1), the formula as printed
  Standard,  // divide by sum_{i=1..min(k,|relevant|)} 1/log2(i+1)
};

/// Per-label inverse propensity weights, clamped into (0, 1].
struct PropensityModel {
  Eigen::VectorXd xi;
  double a_param = 0.55;
  double b_param = 1.5;
};

/// xi_l = 1 / (1 + C exp(-a log(N_l + b))) with C = (log n - 1)(b + 1)^a.
/// Degenerate small-n cases where the formula leaves (0, 1] clamp to 1.
PropensityModel propensity_scores(const std::vector<std::int64_t>& freqs, std::int64_t n,
                                  double a_param = 0.55, double b_param = 1.5);

/// |top-k of ranking that are relevant| / k. Requires 1 <= k <= |ranking|.
double precision_at_k(const std::vector<int>& ranking, const std::vector<int>& relevant, int k);

/// Hits discounted by 1/log2(rank+1), divided by the chosen normalizer sum.
double ndcg_at_k(const std::vector<int>& ranking, const std::vector<int>& relevant, int k,
                 NdcgNormalizer normalizer);

/// Propensity-scored variants: each hit is upweighted by 1/xi of its label.
double psp_at_k(const std::vector<int>& ranking, const std::vector<int>& relevant,
                const Eigen::VectorXd& xi, int k);
double psndcg_at_k(const std::vector<int>& ranking, const std::vector<int>& relevant,
                   const Eigen::VectorXd& xi, int k, NdcgNormalizer normalizer);

/// Named metric values for one test set (means over its instances).
struct FoldMetrics {
  std::vector<std::string> names;
  std::vector<double> values;

  double value_of(const std::string& name) const;
};

/// Evaluate a test set: rank each instance's scores over all labels and
/// average the per-instance metrics. Reported slots are the standard eight
/// (P@1, P@3, P@5, nDCG@3, nDCG@5, PSP@1, PSP@5, PSnDCG@5, auto-dropping any
/// k exceeding the label count) plus all four metrics at every explicitly
/// requested k; a requested k larger than the label count is an error.
FoldMetrics evaluate(const std::vector<PredictionScores>& predictions,
                     const std::vector<std::vector<int>>& truth, const Eigen::VectorXd& xi,
                     const std::vector<int>& ks, NdcgNormalizer normalizer);

/// Cross-fold aggregation: per-fold values plus mean and standard deviation.
struct MetricReport {
  std::vector<std::string> names;
  std::vector<std::vector<double>> per_fold;  // [fold][metric]
  std::vector<double> mean;
  std::vector<double> stddev;
  NdcgNormalizer normalizer = NdcgNormalizer::Paper;
};

MetricReport aggregate_folds(const std::vector<FoldMetrics>& folds, NdcgNormalizer normalizer);

/// Aligned plain-text table (one row per metric).
std::string format_report_table(const MetricReport& report);

/// Machine-readable JSON document with per-fold arrays.
std::string report_to_json(const MetricReport& report);

}  // namespace sldl
