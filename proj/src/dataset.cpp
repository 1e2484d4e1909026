#include "sldl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sldl/errors.hpp"
#include "sldl/rng.hpp"

namespace sldl {

namespace {

int parse_int(std::string_view tok, int line_no, const char* what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": non-numeric " + what + " '" +
                     std::string(tok) + "'");
  }
  return value;
}

double parse_value(std::string_view tok, int line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line_no) + ": non-numeric feature value '" +
                     std::string(tok) + "'");
  }
  return value;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

Dataset parse_sparse_dataset(const std::string& text, const ParseOptions& opts) {
  std::istringstream in(text);
  std::string raw;
  if (!std::getline(in, raw)) throw ParseError("empty input: missing 'n q c' dimension line");

  Dataset d;
  {
    std::istringstream head(std::string(strip_cr(raw)));
    std::string extra;
    if (!(head >> d.n >> d.q >> d.c) || (head >> extra) || d.n < 0 || d.q < 0 || d.c < 0) {
      throw ParseError("malformed dimension line, expected 'n q c': '" + raw + "'");
    }
  }

  const int shift = opts.one_based ? 1 : 0;
  std::vector<Eigen::Triplet<double>> triplets;
  d.labels.resize(d.n);

  for (int i = 0; i < d.n; ++i) {
    const int line_no = i + 2;
    if (!std::getline(in, raw)) {
      throw ParseError("line count mismatch: expected " + std::to_string(d.n) +
                       " data lines, got " + std::to_string(i));
    }
    std::string_view line = strip_cr(raw);

    // Split off the label field: everything before the first space, unless the
    // line starts with a space or the head token is already an i:v pair (both
    // mean an empty label list).
    std::string_view label_field;
    std::string_view rest = line;
    if (!line.empty() && line.front() != ' ') {
      const std::size_t sp = line.find(' ');
      std::string_view head = line.substr(0, sp);
      if (head.find(':') == std::string_view::npos) {
        label_field = head;
        rest = sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
      }
    }

    auto& labels = d.labels[i];
    for (std::size_t pos = 0; pos < label_field.size();) {
      std::size_t comma = label_field.find(',', pos);
      if (comma == std::string_view::npos) comma = label_field.size();
      const std::string_view tok = label_field.substr(pos, comma - pos);
      const int l = parse_int(tok, line_no, "label index") - shift;
      if (l < 0 || l >= d.c) {
        throw ParseError("line " + std::to_string(line_no) + ": label index " +
                         std::string(tok) + " out of range [0, " + std::to_string(d.c) + ")");
      }
      labels.push_back(l);
      pos = comma + 1;
    }
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate label index");
    }

    std::vector<std::pair<int, double>> row;
    std::size_t pos = 0;
    while (pos < rest.size()) {
      while (pos < rest.size() && rest[pos] == ' ') ++pos;
      if (pos >= rest.size()) break;
      std::size_t end = rest.find(' ', pos);
      if (end == std::string_view::npos) end = rest.size();
      const std::string_view tok = rest.substr(pos, end - pos);
      pos = end;
      const std::size_t colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("line " + std::to_string(line_no) + ": expected 'index:value', got '" +
                         std::string(tok) + "'");
      }
      const int j = parse_int(tok.substr(0, colon), line_no, "feature index") - shift;
      if (j < 0 || j >= d.q) {
        throw ParseError("line " + std::to_string(line_no) + ": feature index " +
                         std::string(tok.substr(0, colon)) + " out of range [0, " +
                         std::to_string(d.q) + ")");
      }
      row.emplace_back(j, parse_value(tok.substr(colon + 1), line_no));
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 1; k < row.size(); ++k) {
      if (row[k].first == row[k - 1].first) {
        throw ParseError("line " + std::to_string(line_no) + ": duplicate feature index " +
                         std::to_string(row[k].first));
      }
    }
    for (const auto& [j, v] : row) triplets.emplace_back(i, j, v);
  }

  while (std::getline(in, raw)) {
    if (!strip_cr(raw).empty()) {
      throw ParseError("line count mismatch: more than " + std::to_string(d.n) + " data lines");
    }
  }

  d.features.resize(d.n, d.q);
  d.features.setFromTriplets(triplets.begin(), triplets.end());
  return d;
}

Dataset load_dataset(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path + "'");
  return parse_sparse_dataset(buf.str(), opts);
}

std::string serialize_dataset(const Dataset& d) {
  std::string out = std::to_string(d.n) + " " + std::to_string(d.q) + " " + std::to_string(d.c) + "\n";
  char buf[64];
  for (int i = 0; i < d.n; ++i) {
    for (std::size_t k = 0; k < d.labels[i].size(); ++k) {
      if (k > 0) out += ',';
      out += std::to_string(d.labels[i][k]);
    }
    for (SparseRowMatrix::InnerIterator it(d.features, i); it; ++it) {
      std::snprintf(buf, sizeof(buf), " %d:%.17g", static_cast<int>(it.col()), it.value());
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Dataset l2_normalize(const Dataset& d) {
  Dataset out = d;
  for (int i = 0; i < out.n; ++i) {
    double sq = 0.0;
    for (SparseRowMatrix::InnerIterator it(out.features, i); it; ++it) sq += it.value() * it.value();
    if (sq <= 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (SparseRowMatrix::InnerIterator it(out.features, i); it; ++it) it.valueRef() *= inv;
  }
  return out;
}

Dataset drop_empty_label_instances(const Dataset& d) {
  std::vector<int> keep;
  keep.reserve(d.n);
  for (int i = 0; i < d.n; ++i) {
    if (!d.labels[i].empty()) keep.push_back(i);
  }
  Dataset out;
  out.n = static_cast<int>(keep.size());
  out.q = d.q;
  out.c = d.c;
  out.labels.reserve(keep.size());
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.labels.push_back(d.labels[keep[r]]);
    for (SparseRowMatrix::InnerIterator it(d.features, keep[r]); it; ++it) {
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(it.col()), it.value());
    }
  }
  out.features.resize(out.n, out.q);
  out.features.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Dataset append_bias_feature(const Dataset& d) {
  Dataset out;
  out.n = d.n;
  out.q = d.q + 1;
  out.c = d.c;
  out.labels = d.labels;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < d.n; ++i) {
    for (SparseRowMatrix::InnerIterator it(d.features, i); it; ++it) {
      triplets.emplace_back(i, static_cast<int>(it.col()), it.value());
    }
    triplets.emplace_back(i, d.q, 1.0);
  }
  out.features.resize(out.n, out.q);
  out.features.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

FoldPlan make_folds(const Dataset& d, int fold_count, std::uint64_t seed) {
  if (fold_count < 2 || fold_count > d.n) {
    throw std::invalid_argument("fold_count " + std::to_string(fold_count) +
                                " out of range [2, " + std::to_string(d.n) + "]");
  }
  std::vector<int> order(d.n);
  for (int i = 0; i < d.n; ++i) order[i] = i;
  Rng rng(seed);
  for (int i = d.n - 1; i > 0; --i) std::swap(order[i], order[rng.next_below(i + 1)]);

  FoldPlan plan;
  plan.fold_count = fold_count;
  plan.seed = seed;
  plan.assignments.resize(d.n);
  for (int pos = 0; pos < d.n; ++pos) plan.assignments[order[pos]] = pos % fold_count;
  return plan;
}

std::pair<Dataset, Dataset> split_fold(const Dataset& d, const FoldPlan& plan, int test_fold) {
  if (static_cast<int>(plan.assignments.size()) != d.n) {
    throw std::invalid_argument("fold plan does not match dataset size");
  }
  if (test_fold < 0 || test_fold >= plan.fold_count) {
    throw std::invalid_argument("test fold index out of range");
  }
  Dataset train, test;
  train.q = test.q = d.q;
  train.c = test.c = d.c;
  std::vector<Eigen::Triplet<double>> tr_trip, te_trip;
  for (int i = 0; i < d.n; ++i) {
    const bool is_test = plan.assignments[i] == test_fold;
    Dataset& part = is_test ? test : train;
    auto& trip = is_test ? te_trip : tr_trip;
    for (SparseRowMatrix::InnerIterator it(d.features, i); it; ++it) {
      trip.emplace_back(part.n, static_cast<int>(it.col()), it.value());
    }
    part.labels.push_back(d.labels[i]);
    ++part.n;
  }
  train.features.resize(train.n, d.q);
  train.features.setFromTriplets(tr_trip.begin(), tr_trip.end());
  test.features.resize(test.n, d.q);
  test.features.setFromTriplets(te_trip.begin(), te_trip.end());
  return {std::move(train), std::move(test)};
}

std::vector<std::int64_t> label_frequencies(const Dataset& d) {
  std::vector<std::int64_t> freq(d.c, 0);
  for (const auto& ls : d.labels) {
    for (int l : ls) ++freq[l];
  }
  return freq;
}

}  // namespace sldl
