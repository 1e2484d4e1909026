#include "sldl/model_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "sldl/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are unsupported");

namespace sldl {

namespace {

using nlohmann::json;

json config_to_json(const RunConfig& c) {
  return json{
      {"embed_dim", c.embed_dim},
      {"tau", c.tau},
      {"alpha", c.alpha},
      {"walk_steps", c.walk_steps},
      {"rounds", c.rounds},
      {"pairs_per_anchor", c.pairs_per_anchor},
      {"learning_rate", c.learning_rate},
      {"k_neighbors", c.k_neighbors},
      {"k_out", c.k_out},
      {"seed", c.seed},
      {"divergence", c.divergence == Divergence::KL ? "kl" : "js"},
      {"gaussian_mode", c.gaussian_mode == GaussianMode::Gaussian ? "gaussian" : "point"},
      {"bias", c.bias},
      {"ndcg_normalizer", c.ndcg_normalizer == NdcgNormalizer::Paper ? "paper" : "standard"},
      {"propensity_a", c.propensity_a},
      {"propensity_b", c.propensity_b},
      {"lbfgs",
       {{"memory", c.lbfgs.memory},
        {"max_iters", c.lbfgs.max_iters},
        {"grad_tol", c.lbfgs.grad_tol},
        {"c1", c.lbfgs.c1},
        {"c2", c.lbfgs.c2}}},
  };
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.embed_dim = j.at("embed_dim").get<int>();
  c.tau = j.at("tau").get<double>();
  c.alpha = j.at("alpha").get<double>();
  c.walk_steps = j.at("walk_steps").get<int>();
  c.rounds = j.at("rounds").get<int>();
  c.pairs_per_anchor = j.at("pairs_per_anchor").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.k_neighbors = j.at("k_neighbors").get<int>();
  c.k_out = j.at("k_out").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.divergence = j.at("divergence").get<std::string>() == "js" ? Divergence::JS : Divergence::KL;
  c.gaussian_mode = j.at("gaussian_mode").get<std::string>() == "point" ? GaussianMode::Point
                                                                        : GaussianMode::Gaussian;
  c.bias = j.at("bias").get<bool>();
  c.ndcg_normalizer = j.at("ndcg_normalizer").get<std::string>() == "standard"
                          ? NdcgNormalizer::Standard
                          : NdcgNormalizer::Paper;
  c.propensity_a = j.at("propensity_a").get<double>();
  c.propensity_b = j.at("propensity_b").get<double>();
  const json& lb = j.at("lbfgs");
  c.lbfgs.memory = lb.at("memory").get<int>();
  c.lbfgs.max_iters = lb.at("max_iters").get<int>();
  c.lbfgs.grad_tol = lb.at("grad_tol").get<double>();
  c.lbfgs.c1 = lb.at("c1").get<double>();
  c.lbfgs.c2 = lb.at("c2").get<double>();
  return c;
}

void write_f64_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  std::vector<double> row(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

Eigen::MatrixXd read_f64_matrix(std::ifstream& in, std::int64_t rows, std::int64_t cols) {
  Eigen::MatrixXd m(rows, cols);
  std::vector<double> row(cols);
  for (std::int64_t i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw ParseError("model file truncated inside a float64 block");
    for (std::int64_t j = 0; j < cols; ++j) m(i, j) = row[j];
  }
  return m;
}

void write_i64(std::ofstream& out, const std::vector<std::int64_t>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(std::int64_t)));
}

std::vector<std::int64_t> read_i64(std::ifstream& in, std::int64_t count) {
  std::vector<std::int64_t> v(count);
  if (count > 0) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(std::int64_t)));
    if (!in) throw ParseError("model file truncated inside an int64 block");
  }
  return v;
}

}  // namespace

void save_model(const std::string& path, const TrainedModel& model) {
  const int c = model.c;
  const int dim = model.embeddings.latent_dim;
  const std::int64_t n_train = model.decoder.Z_hat.rows();
  std::int64_t nnz = 0;
  for (const auto& ls : model.decoder.train_labels) nnz += static_cast<std::int64_t>(ls.size());

  json header;
  header["format_version"] = kModelFormatVersion;
  header["dims"] = {{"q", model.q}, {"c", c}, {"embed_dim", dim}, {"n_train", n_train}};
  header["k_neighbors"] = model.decoder.k_neighbors;
  header["config"] = config_to_json(model.config);
  header["blocks"] = json::array({
      json{{"name", "mu"}, {"rows", c}, {"cols", dim}, {"dtype", "f64"}},
      json{{"name", "log_var"}, {"rows", c}, {"cols", dim}, {"dtype", "f64"}},
      json{{"name", "W"}, {"rows", model.regression.W.rows()}, {"cols", dim}, {"dtype", "f64"}},
      json{{"name", "z_hat"}, {"rows", n_train}, {"cols", dim}, {"dtype", "f64"}},
      json{{"name", "label_row_ptr"}, {"rows", n_train + 1}, {"cols", 1}, {"dtype", "i64"}},
      json{{"name", "label_col_idx"}, {"rows", nnz}, {"cols", 1}, {"dtype", "i64"}},
  });

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << header.dump() << '\n';

  Eigen::MatrixXd mu(c, dim), log_var(c, dim);
  for (int l = 0; l < c; ++l) {
    mu.row(l) = model.embeddings.gaussians[l].mu;
    log_var.row(l) = model.embeddings.gaussians[l].log_var;
  }
  write_f64_matrix(out, mu);
  write_f64_matrix(out, log_var);
  write_f64_matrix(out, model.regression.W);
  write_f64_matrix(out, model.decoder.Z_hat);

  std::vector<std::int64_t> row_ptr(n_train + 1, 0);
  std::vector<std::int64_t> col_idx;
  col_idx.reserve(nnz);
  for (std::int64_t i = 0; i < n_train; ++i) {
    for (int l : model.decoder.train_labels[i]) col_idx.push_back(l);
    row_ptr[i + 1] = static_cast<std::int64_t>(col_idx.size());
  }
  write_i64(out, row_ptr);
  write_i64(out, col_idx);
  if (!out) throw IoError("write failure on '" + path + "'");
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError("model file has no header line");

  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model header is not valid JSON: ") + e.what());
  }

  TrainedModel model;
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ParseError("unsupported model format_version " + std::to_string(version));
    }
    const json& dims = header.at("dims");
    model.q = dims.at("q").get<int>();
    model.c = dims.at("c").get<int>();
    const int dim = dims.at("embed_dim").get<int>();
    const std::int64_t n_train = dims.at("n_train").get<std::int64_t>();
    model.config = config_from_json(header.at("config"));
    const int k_neighbors = header.at("k_neighbors").get<int>();

    const json& blocks = header.at("blocks");
    if (blocks.size() != 6) throw ParseError("unexpected model block directory");
    const int expected_w_rows = model.q + (model.config.bias ? 1 : 0);
    const struct {
      const char* name;
      std::int64_t rows, cols;
      const char* dtype;
    } expected[] = {
        {"mu", model.c, dim, "f64"},
        {"log_var", model.c, dim, "f64"},
        {"W", expected_w_rows, dim, "f64"},
        {"z_hat", n_train, dim, "f64"},
        {"label_row_ptr", n_train + 1, 1, "i64"},
        {"label_col_idx", -1, 1, "i64"},  // length checked against row_ptr below
    };
    std::int64_t nnz = -1;
    for (std::size_t b = 0; b < 6; ++b) {
      const json& blk = blocks[b];
      if (blk.at("name").get<std::string>() != expected[b].name ||
          blk.at("dtype").get<std::string>() != expected[b].dtype ||
          blk.at("cols").get<std::int64_t>() != expected[b].cols ||
          (expected[b].rows >= 0 && blk.at("rows").get<std::int64_t>() != expected[b].rows)) {
        throw ParseError(std::string("model block '") + expected[b].name +
                         "' does not match the declared dimensions");
      }
      if (b == 5) nnz = blk.at("rows").get<std::int64_t>();
    }

    const Eigen::MatrixXd mu = read_f64_matrix(in, model.c, dim);
    const Eigen::MatrixXd log_var = read_f64_matrix(in, model.c, dim);
    model.regression.W = read_f64_matrix(in, expected_w_rows, dim);
    model.regression.alpha = model.config.alpha;
    model.decoder.Z_hat = read_f64_matrix(in, n_train, dim);
    const std::vector<std::int64_t> row_ptr = read_i64(in, n_train + 1);
    if (row_ptr.front() != 0 || row_ptr.back() != nnz) {
      throw ParseError("model label index does not match the declared sizes");
    }
    const std::vector<std::int64_t> col_idx = read_i64(in, nnz);
    if (in.peek() != std::char_traits<char>::eof()) {
      throw ParseError("model file has trailing bytes beyond the declared blocks");
    }

    model.embeddings.latent_dim = dim;
    model.embeddings.gaussians.resize(model.c);
    for (int l = 0; l < model.c; ++l) {
      model.embeddings.gaussians[l].mu = mu.row(l);
      model.embeddings.gaussians[l].log_var = log_var.row(l);
    }
    model.decoder.train_labels.resize(n_train);
    for (std::int64_t i = 0; i < n_train; ++i) {
      if (row_ptr[i] > row_ptr[i + 1]) throw ParseError("model label index is not monotone");
      for (std::int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        const std::int64_t l = col_idx[p];
        if (l < 0 || l >= model.c) throw ParseError("model label index out of range");
        model.decoder.train_labels[i].push_back(static_cast<int>(l));
      }
    }
    model.decoder.label_count = model.c;
    model.decoder.k_neighbors = k_neighbors;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model header: ") + e.what());
  }
  return model;
}

}  // namespace sldl
