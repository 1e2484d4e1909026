#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sldl {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// A multi-label dataset: n instances, q feature dimensions, c labels.
/// Features are sparse reals, labels are per-instance sorted index sets.
/// Immutable by convention once built; all transforms return copies.
struct Dataset {
  int n = 0;
  int q = 0;
  int c = 0;
  SparseRowMatrix features;              // n x q
  std::vector<std::vector<int>> labels;  // ascending indices per instance
};

struct ParseOptions {
  bool one_based = false;  // corpora that index labels/features from 1
};

/// Parse the extreme-classification sparse text format:
///   line 1: "n q c"
///   lines 2..n+1: "l1,l2,... i1:v1 i2:v2 ..." (label list may be empty,
///   in which case the line starts with a space or holds only features).
/// LF and CRLF both accepted.
Dataset parse_sparse_dataset(const std::string& text, const ParseOptions& opts = {});

/// Load and parse a dataset file. Throws IoError if the file cannot be read.
Dataset load_dataset(const std::string& path, const ParseOptions& opts = {});

/// Canonical text form; parse(serialize(d)) reproduces d exactly.
std::string serialize_dataset(const Dataset& d);

/// Scale every instance row to unit Euclidean norm. Zero rows pass through
/// unchanged: the decoder floors distances, and dropping rows would change n.
Dataset l2_normalize(const Dataset& d);

/// Remove instances whose label set is empty (optional training filter).
Dataset drop_empty_label_instances(const Dataset& d);

/// Append a constant-1 feature column (q grows by one). Applied after
/// normalization so the bias is not scaled away.
Dataset append_bias_feature(const Dataset& d);

/// Balanced random partition for cross-validation.
struct FoldPlan {
  int fold_count = 0;
  std::vector<int> assignments;  // per-instance fold index
  std::uint64_t seed = 0;
};

/// Shuffled assignment, deterministic for a fixed seed; fold sizes differ by
/// at most one. Requires 2 <= fold_count <= d.n.
FoldPlan make_folds(const Dataset& d, int fold_count, std::uint64_t seed);

/// Split into (train, test) where test = instances assigned to test_fold.
/// Instance order within each part follows the original dataset order.
std::pair<Dataset, Dataset> split_fold(const Dataset& d, const FoldPlan& plan, int test_fold);

/// Per-label positive-instance counts, length c.
std::vector<std::int64_t> label_frequencies(const Dataset& d);

}  // namespace sldl
