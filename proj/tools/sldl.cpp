#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sldl/errors.hpp"
#include "sldl/model_io.hpp"
#include "sldl/pipeline.hpp"

namespace {

using namespace sldl;

constexpr int kExitOk = 0;
constexpr int kExitContract = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

void add_config_options(CLI::App* cmd, RunConfig& config, bool& no_gaussian, bool& symmetric,
                        std::string& config_path) {
  const auto opt = [&](const char* name, auto& target, const char* help = "") {
    return cmd->add_option(name, target, help)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  };
  opt("--embed-dim", config.embed_dim, "latent dimension c-hat")->check(CLI::PositiveNumber);
  opt("--tau", config.tau, "triplet margin threshold")->check(CLI::NonNegativeNumber);
  opt("--alpha", config.alpha, "ridge balancing factor")->check(CLI::NonNegativeNumber);
  opt("--walk-steps", config.walk_steps, "random-walk accumulation steps")
      ->check(CLI::NonNegativeNumber);
  opt("--rounds", config.rounds, "embedding optimization rounds")->check(CLI::NonNegativeNumber);
  opt("--pairs-per-anchor", config.pairs_per_anchor, "ranked (pos, neg) pairs per anchor label")
      ->check(CLI::NonNegativeNumber);
  opt("--learning-rate", config.learning_rate, "embedding step size")->check(CLI::PositiveNumber);
  opt("--k-neighbors", config.k_neighbors, "decoder neighbor count")->check(CLI::PositiveNumber);
  opt("--k-out", config.k_out, "number of labels emitted per prediction")
      ->check(CLI::PositiveNumber);
  opt("--seed", config.seed, "seed driving all randomness");
  cmd->add_flag("--no-gaussian", no_gaussian, "mean-only squared-Euclidean embedding objective");
  cmd->add_flag("--symmetric", symmetric, "symmetric JS divergence instead of KL");
  cmd->add_flag("--bias", config.bias, "append a constant-1 feature after normalization");
  opt("--ndcg-normalizer", config.ndcg_normalizer, "nDCG normalizer variant")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, NdcgNormalizer>{{"paper", NdcgNormalizer::Paper},
                                                {"standard", NdcgNormalizer::Standard}}));
  opt("--propensity-a", config.propensity_a, "propensity constant a");
  opt("--propensity-b", config.propensity_b, "propensity constant b");
  opt("--lbfgs-memory", config.lbfgs.memory)->check(CLI::PositiveNumber);
  opt("--lbfgs-max-iters", config.lbfgs.max_iters)->check(CLI::NonNegativeNumber);
  opt("--lbfgs-grad-tol", config.lbfgs.grad_tol)->check(CLI::NonNegativeNumber);
  opt("--lbfgs-c1", config.lbfgs.c1);
  opt("--lbfgs-c2", config.lbfgs.c2);
  opt("--config", config_path, "key=value config file (explicit flags win)");
}

// Expands `--config FILE` into --key=value tokens inserted right after the
// subcommand, so explicit command-line flags still take precedence under the
// TakeLast policy.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::vector<std::string> injected;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config file line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = line.substr(first, eq - first);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (key.empty() || key == "config") {
      throw ParseError("config file line " + std::to_string(line_no) + ": bad key");
    }
    injected.push_back("--" + key + (value.empty() ? "" : "=" + value));
  }

  std::vector<std::string> out;
  out.reserve(args.size() + injected.size());
  if (!args.empty()) out.push_back(args.front());  // subcommand name stays first
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + (args.empty() ? 0 : 1), args.end());
  return out;
}

void apply_ablation_flags(RunConfig& config, bool no_gaussian, bool symmetric) {
  if (no_gaussian) config.gaussian_mode = GaussianMode::Point;
  if (symmetric) config.divergence = Divergence::JS;
}

void dump_transfer(const std::string& path, const Eigen::MatrixXd& P_hat) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[40];
  for (Eigen::Index i = 0; i < P_hat.rows(); ++i) {
    for (Eigen::Index j = 0; j < P_hat.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%s%.17g", j == 0 ? "" : " ", P_hat(i, j));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failure on '" + path + "'");
}

void dump_embeddings(const std::string& path, const EmbeddingSet& set) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[40];
  for (std::size_t l = 0; l < set.gaussians.size(); ++l) {
    out << l;
    const auto& g = set.gaussians[l];
    for (Eigen::Index k = 0; k < g.mu.size(); ++k) {
      std::snprintf(buf, sizeof(buf), " %.17g", g.mu[k]);
      out << buf;
    }
    out << " |";
    for (Eigen::Index k = 0; k < g.log_var.size(); ++k) {
      std::snprintf(buf, sizeof(buf), " %.17g", std::exp(g.log_var[k]));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failure on '" + path + "'");
}

std::vector<PredictionScores> parse_predictions(const std::string& path, int label_count,
                                                int min_labels_per_line) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions file '" + path + "'");
  std::vector<PredictionScores> preds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    PredictionScores p;
    p.scores = Eigen::VectorXd::Zero(label_count);
    int tokens = 0;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos) {
        throw ParseError("predictions line " + std::to_string(line_no) +
                         ": expected 'label:score', got '" + tok + "'");
      }
      const int l = std::stoi(tok.substr(0, colon));
      if (l < 0 || l >= label_count) {
        throw ParseError("predictions line " + std::to_string(line_no) + ": label " +
                         std::to_string(l) + " out of range");
      }
      p.scores[l] = std::stod(tok.substr(colon + 1));
      ++tokens;
    }
    if (tokens < min_labels_per_line) {
      throw ParseError("predictions line " + std::to_string(line_no) + " lists " +
                       std::to_string(tokens) + " labels; evaluation needs at least " +
                       std::to_string(min_labels_per_line));
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write failure on '" + path + "'");
}

int run(int argc, char** argv) {
  CLI::App app{"Scalable label-distribution learning for multi-label classification"};
  app.require_subcommand(1);

  RunConfig config;
  bool no_gaussian = false;
  bool symmetric = false;
  bool one_based = false;
  bool drop_empty = false;
  bool verbose = false;
  std::string data_path, model_path, out_path, pred_path;
  std::string dump_transfer_path, dump_embeddings_path;

  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "fit a model and write it to disk");
  train_cmd->add_option("--data", data_path, "training dataset")->required();
  train_cmd->add_option("--model", model_path, "output model file")->required();
  train_cmd->add_flag("--one-based", one_based, "input indices start at 1");
  train_cmd->add_flag("--drop-empty", drop_empty, "exclude instances with empty label sets");
  train_cmd->add_flag("--verbose", verbose, "log optimizer iterations to stderr");
  train_cmd->add_option("--dump-transfer", dump_transfer_path, "write the transfer matrix");
  train_cmd->add_option("--dump-embeddings", dump_embeddings_path, "write label Gaussians");
  add_config_options(train_cmd, config, no_gaussian, symmetric, config_path);

  auto* predict_cmd = app.add_subcommand("predict", "rank labels for a test set");
  predict_cmd->add_option("--model", model_path, "trained model file")->required();
  predict_cmd->add_option("--data", data_path, "test dataset")->required();
  predict_cmd->add_option("--out", out_path, "output file (default: stdout)");
  int k_out_override = -1;
  predict_cmd->add_option("--k-out", k_out_override, "labels per output line");
  predict_cmd->add_flag("--one-based", one_based, "input indices start at 1");

  auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  eval_cmd->add_option("--pred", pred_path, "predictions file (output of predict)")->required();
  eval_cmd->add_option("--data", data_path, "ground-truth dataset")->required();
  eval_cmd->add_option("--out", out_path, "also write the report as JSON");
  eval_cmd->add_flag("--one-based", one_based, "input indices start at 1");
  std::vector<int> extra_ks;
  eval_cmd->add_option("--ks", extra_ks, "extra k values")->delimiter(',');
  eval_cmd->add_option("--ndcg-normalizer", config.ndcg_normalizer, "nDCG normalizer variant")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, NdcgNormalizer>{{"paper", NdcgNormalizer::Paper},
                                                {"standard", NdcgNormalizer::Standard}}));
  eval_cmd->add_option("--propensity-a", config.propensity_a);
  eval_cmd->add_option("--propensity-b", config.propensity_b);

  auto* cv_cmd = app.add_subcommand("cv", "cross-validated grid search");
  cv_cmd->add_option("--data", data_path, "dataset")->required();
  CvOptions cv_options;
  cv_cmd->add_option("--folds", cv_options.folds)->check(CLI::Range(2, 1000000));
  std::vector<int> grid_dims, grid_k;
  cv_cmd->add_option("--grid-dims", grid_dims, "embed-dim grid (default 16..128)")->delimiter(',');
  cv_cmd->add_option("--grid-k", grid_k, "k-neighbors grid (default 10..100)")->delimiter(',');
  cv_cmd->add_option("--select-metric", cv_options.select_metric, "grid selection metric");
  cv_cmd->add_option("--jobs", cv_options.jobs, "parallel fold/grid jobs")->check(CLI::PositiveNumber);
  cv_cmd->add_option("--ks", cv_options.extra_ks, "extra k values")->delimiter(',');
  cv_cmd->add_option("--out", out_path, "also write the report as JSON");
  cv_cmd->add_flag("--one-based", one_based, "input indices start at 1");
  cv_cmd->add_flag("--drop-empty", drop_empty, "exclude instances with empty label sets");
  cv_cmd->add_flag("--verbose", verbose, "log optimizer iterations to stderr");
  add_config_options(cv_cmd, config, no_gaussian, symmetric, config_path);

  try {
    std::vector<std::string> args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11 vector parse wants reversed args
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitContract;
  }

  apply_ablation_flags(config, no_gaussian, symmetric);
  config.lbfgs.verbose = verbose;
  ParseOptions parse_opts;
  parse_opts.one_based = one_based;

  if (*train_cmd) {
    Dataset data = load_dataset(data_path, parse_opts);
    if (drop_empty) data = drop_empty_label_instances(data);
    TransferMatrices transfer;
    const TrainedModel model = train_model(data, config, &transfer);
    if (!dump_transfer_path.empty()) dump_transfer(dump_transfer_path, transfer.P_hat);
    if (!dump_embeddings_path.empty()) dump_embeddings(dump_embeddings_path, model.embeddings);
    save_model(model_path, model);
  } else if (*predict_cmd) {
    const TrainedModel model = load_model(model_path);
    const Dataset test = load_dataset(data_path, parse_opts);
    const int k_out = k_out_override > 0 ? k_out_override : model.config.k_out;
    const auto preds = predict_scores(model, test);
    std::string lines;
    for (const auto& p : preds) {
      lines += format_prediction_line(p, k_out);
      lines += '\n';
    }
    if (out_path.empty()) {
      std::fputs(lines.c_str(), stdout);
    } else {
      write_text(out_path, lines);
    }
  } else if (*eval_cmd) {
    const Dataset truth = load_dataset(data_path, parse_opts);
    int needed_k = 0;
    for (int k : {1, 3, 5}) {
      if (k <= truth.c) needed_k = k;
    }
    for (int k : extra_ks) needed_k = std::max(needed_k, k);
    const auto preds = parse_predictions(pred_path, truth.c, needed_k);
    if (static_cast<int>(preds.size()) != truth.n) {
      throw std::invalid_argument("predictions have " + std::to_string(preds.size()) +
                                  " lines but the dataset has " + std::to_string(truth.n) +
                                  " instances");
    }
    const PropensityModel prop = propensity_scores(label_frequencies(truth), truth.n,
                                                   config.propensity_a, config.propensity_b);
    const FoldMetrics fm = evaluate(preds, truth.labels, prop.xi, extra_ks, config.ndcg_normalizer);
    const MetricReport report = aggregate_folds({fm}, config.ndcg_normalizer);
    std::fputs(format_report_table(report).c_str(), stdout);
    if (!out_path.empty()) write_text(out_path, report_to_json(report) + "\n");
  } else if (*cv_cmd) {
    Dataset data = load_dataset(data_path, parse_opts);
    if (drop_empty) data = drop_empty_label_instances(data);
    if (grid_dims.empty()) grid_dims = {16, 32, 48, 64, 80, 96, 112, 128};
    if (grid_k.empty()) grid_k = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    for (int dim : grid_dims) {
      for (int k : grid_k) cv_options.grid.push_back({dim, k});
    }
    const CvResult cv = cross_validate(data, config, cv_options);
    std::printf("selected grid point: embed_dim=%d k_neighbors=%d (%s=%.4f)\n", cv.best.embed_dim,
                cv.best.k_neighbors,
                cv.select_metric.c_str(),
                [&] {
                  for (const auto& [gp, score] : cv.grid_scores) {
                    if (gp.embed_dim == cv.best.embed_dim && gp.k_neighbors == cv.best.k_neighbors)
                      return score;
                  }
                  return 0.0;
                }());
    std::fputs(format_report_table(cv.report).c_str(), stdout);
    if (!out_path.empty()) {
      nlohmann::json j = nlohmann::json::parse(report_to_json(cv.report));
      j["best_grid"] = {{"embed_dim", cv.best.embed_dim}, {"k_neighbors", cv.best.k_neighbors}};
      j["select_metric"] = cv.select_metric;
      nlohmann::json grid = nlohmann::json::array();
      for (const auto& [gp, score] : cv.grid_scores) {
        grid.push_back({{"embed_dim", gp.embed_dim},
                        {"k_neighbors", gp.k_neighbors},
                        {"selection_mean", score}});
      }
      j["grid"] = grid;
      write_text(out_path, j.dump(2) + "\n");
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sldl::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const sldl::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const sldl::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitContract;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitContract;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
}
