#include "sldl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sldl {

namespace {

bool is_relevant(const std::vector<int>& relevant, int label) {
  return std::binary_search(relevant.begin(), relevant.end(), label);
}

void check_k(const std::vector<int>& ranking, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > ranking.size()) {
    throw std::invalid_argument("k out of range [1, ranking length]");
  }
}

double discount(int rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

double normalizer_sum(int k, std::size_t relevant_count, NdcgNormalizer normalizer) {
  const int limit = normalizer == NdcgNormalizer::Paper
                        ? k
                        : std::min<int>(k, static_cast<int>(relevant_count));
  double sum = 0.0;
  for (int i = 1; i <= limit; ++i) sum += discount(i);
  return sum;
}

}  // namespace

PropensityModel propensity_scores(const std::vector<std::int64_t>& freqs, std::int64_t n,
                                  double a_param, double b_param) {
  if (n < 1) throw std::invalid_argument("propensity_scores: n must be >= 1");
  for (std::int64_t f : freqs) {
    if (f < 0 || f > n) throw std::invalid_argument("propensity_scores: frequency out of [0, n]");
  }
  PropensityModel model;
  model.a_param = a_param;
  model.b_param = b_param;
  const double C = (std::log(static_cast<double>(n)) - 1.0) * std::pow(b_param + 1.0, a_param);
  model.xi.resize(static_cast<Eigen::Index>(freqs.size()));
  for (std::size_t l = 0; l < freqs.size(); ++l) {
    const double xi =
        1.0 / (1.0 + C * std::exp(-a_param * std::log(static_cast<double>(freqs[l]) + b_param)));
    model.xi[static_cast<Eigen::Index>(l)] = (xi > 0.0 && xi <= 1.0) ? xi : 1.0;
  }
  return model;
}

double precision_at_k(const std::vector<int>& ranking, const std::vector<int>& relevant, int k) {
  check_k(ranking, k);
  int hits = 0;
  for (int i = 0; i < k; ++i) hits += is_relevant(relevant, ranking[i]) ? 1 : 0;
  return static_cast<double>(hits) / k;
}

double ndcg_at_k(const std::vector<int>& ranking, const std::vector<int>& relevant, int k,
                 NdcgNormalizer normalizer) {
  check_k(ranking, k);
  if (relevant.empty()) return 0.0;
  double dcg = 0.0;
  for (int i = 0; i < k; ++i) {
    if (is_relevant(relevant, ranking[i])) dcg += discount(i + 1);
  }
  return dcg / normalizer_sum(k, relevant.size(), normalizer);
}

double psp_at_k(const std::vector<int>& ranking, const std::vector<int>& relevant,
                const Eigen::VectorXd& xi, int k) {
  check_k(ranking, k);
  if ((xi.array() <= 0.0).any()) throw std::invalid_argument("propensities must be positive");
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    if (is_relevant(relevant, ranking[i])) sum += 1.0 / xi[ranking[i]];
  }
  return sum / k;
}

double psndcg_at_k(const std::vector<int>& ranking, const std::vector<int>& relevant,
                   const Eigen::VectorXd& xi, int k, NdcgNormalizer normalizer) {
  check_k(ranking, k);
  if ((xi.array() <= 0.0).any()) throw std::invalid_argument("propensities must be positive");
  if (relevant.empty()) return 0.0;
  double dcg = 0.0;
  for (int i = 0; i < k; ++i) {
    if (is_relevant(relevant, ranking[i])) dcg += discount(i + 1) / xi[ranking[i]];
  }
  return dcg / normalizer_sum(k, relevant.size(), normalizer);
}

double FoldMetrics::value_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  throw std::invalid_argument("unknown metric '" + name + "'");
}

FoldMetrics evaluate(const std::vector<PredictionScores>& predictions,
                     const std::vector<std::vector<int>>& truth, const Eigen::VectorXd& xi,
                     const std::vector<int>& ks, NdcgNormalizer normalizer) {
  if (predictions.size() != truth.size()) {
    throw std::invalid_argument("evaluate: predictions and truth lengths differ");
  }
  if (predictions.empty()) throw std::invalid_argument("evaluate: empty test set");
  const int c = static_cast<int>(predictions.front().scores.size());

  // Slot list: the standard eight (k <= c only), then extras for requested ks.
  std::vector<std::pair<std::string, int>> slots;  // (kind@k) encoded below
  std::vector<int> base_ks = {1, 3, 5};
  auto add_slots = [&](int k, bool base) {
    const auto add = [&](const std::string& name) {
      for (const auto& s : slots) {
        if (s.first == name) return;
      }
      slots.emplace_back(name, k);
    };
    if (base) {
      if (k == 1) {
        add("P@1");
        add("PSP@1");
      } else {
        add("P@" + std::to_string(k));
        add("nDCG@" + std::to_string(k));
        if (k == 5) {
          add("PSP@5");
          add("PSnDCG@5");
        }
      }
    } else {
      add("P@" + std::to_string(k));
      add("nDCG@" + std::to_string(k));
      add("PSP@" + std::to_string(k));
      add("PSnDCG@" + std::to_string(k));
    }
  };
  for (int k : base_ks) {
    if (k <= c) add_slots(k, true);
  }
  for (int k : ks) {
    if (k > c) throw std::invalid_argument("evaluate: requested k exceeds label count");
    add_slots(k, false);
  }

  FoldMetrics out;
  out.names.reserve(slots.size());
  out.values.assign(slots.size(), 0.0);
  for (const auto& s : slots) out.names.push_back(s.first);

  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (static_cast<int>(predictions[i].scores.size()) != c) {
      throw std::invalid_argument("evaluate: inconsistent score lengths");
    }
    const std::vector<int> ranking = top_k_labels(predictions[i], c);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto& [name, k] = slots[s];
      double v = 0.0;
      if (name.rfind("PSnDCG@", 0) == 0) {
        v = psndcg_at_k(ranking, truth[i], xi, k, normalizer);
      } else if (name.rfind("PSP@", 0) == 0) {
        v = psp_at_k(ranking, truth[i], xi, k);
      } else if (name.rfind("nDCG@", 0) == 0) {
        v = ndcg_at_k(ranking, truth[i], k, normalizer);
      } else {
        v = precision_at_k(ranking, truth[i], k);
      }
      out.values[s] += v;
    }
  }
  for (double& v : out.values) v /= static_cast<double>(predictions.size());
  return out;
}

MetricReport aggregate_folds(const std::vector<FoldMetrics>& folds, NdcgNormalizer normalizer) {
  if (folds.empty()) throw std::invalid_argument("aggregate_folds: no folds");
  MetricReport report;
  report.normalizer = normalizer;
  report.names = folds.front().names;
  const std::size_t m = report.names.size();
  report.per_fold.reserve(folds.size());
  for (const auto& f : folds) {
    if (f.names != report.names) throw std::invalid_argument("aggregate_folds: fold slot mismatch");
    report.per_fold.push_back(f.values);
  }
  report.mean.assign(m, 0.0);
  report.stddev.assign(m, 0.0);
  for (const auto& row : report.per_fold) {
    for (std::size_t j = 0; j < m; ++j) report.mean[j] += row[j];
  }
  for (double& v : report.mean) v /= static_cast<double>(folds.size());
  for (const auto& row : report.per_fold) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = row[j] - report.mean[j];
      report.stddev[j] += d * d;
    }
  }
  for (double& v : report.stddev) v = std::sqrt(v / static_cast<double>(folds.size()));
  return report;
}

std::string format_report_table(const MetricReport& report) {
  std::string out = "metric        mean      std\n";
  char buf[96];
  for (std::size_t j = 0; j < report.names.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%-10s %8.4f %8.4f\n", report.names[j].c_str(),
                  report.mean[j], report.stddev[j]);
    out += buf;
  }
  out += "ndcg normalizer: ";
  out += report.normalizer == NdcgNormalizer::Paper ? "paper" : "standard";
  out += '\n';
  return out;
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["ndcg_normalizer"] = report.normalizer == NdcgNormalizer::Paper ? "paper" : "standard";
  j["fold_count"] = report.per_fold.size();
  nlohmann::json metrics = nlohmann::json::array();
  for (std::size_t m = 0; m < report.names.size(); ++m) {
    nlohmann::json entry;
    entry["name"] = report.names[m];
    entry["mean"] = report.mean[m];
    entry["std"] = report.stddev[m];
    nlohmann::json pf = nlohmann::json::array();
    for (const auto& row : report.per_fold) pf.push_back(row[m]);
    entry["per_fold"] = pf;
    metrics.push_back(entry);
  }
  j["metrics"] = metrics;
  return j.dump(2);
}

}  // namespace sldl
