#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "manifest.hpp"
#include "meandim/analysis.hpp"
#include "meandim/csv.hpp"
#include "meandim/data.hpp"
#include "meandim/estimator.hpp"
#include "meandim/model.hpp"
#include "meandim/parallel.hpp"
#include "meandim/pca.hpp"
#include "meandim/testfns.hpp"
#include "meandim/train.hpp"

namespace fs = std::filesystem;

namespace meandim::cli {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kCorrelationWarning = 0.1;

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(item, &pos);
      if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError(std::string("cannot parse ") + what + " '" + text + "': expected positive integers separated by commas");
    }
  }
  return out;
}

Activation activation_arg(const std::string& name) {
  try {
    return parse_activation(name);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

InitScheme init_arg(const std::string& name) {
  try {
    return parse_init_scheme(name);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

TestFunction function_arg(const std::string& name) {
  try {
    return lookup_test_function(name);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

double max_abs_correlation(const Dataset& data) {
  const Matrix cov = sample_covariance(data.features());
  double best = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = i + 1; j < cov.cols(); ++j) {
      const double denom = std::sqrt(cov(i, i) * cov(j, j));
      if (denom > 0.0) best = std::max(best, std::abs(cov(i, j) / denom));
    }
  return best;
}

std::string fmt(double v) { return csv::format_real(v); }

struct Common {
  std::size_t threads = 0;
  std::vector<std::string> args;
};

// ---------------------------------------------------------------- gen-data
struct GenDataArgs {
  std::string fn;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t dummies = 0;
  double dummy_low = -std::numbers::pi;
  double dummy_high = std::numbers::pi;
};

int cmd_gen_data(const GenDataArgs& a, const Common& c, std::ostream& out) {
  const TestFunction fn = function_arg(a.fn);
  Dataset data = gen_dataset(fn, a.n, a.seed);
  std::optional<std::uint64_t> dummy_seed;
  if (a.dummies > 0) {
    dummy_seed = a.seed + 0x9e3779b97f4a7c15ULL;
    data = augment_with_dummies(data, a.dummies, *dummy_seed, a.dummy_low, a.dummy_high);
  }
  const fs::path path(a.out);
  save_dataset(data, path);
  RunManifest manifest("gen-data", c.args, resolve_threads(c.threads));
  manifest.add_seed("data", a.seed);
  if (dummy_seed) manifest.add_seed("dummies", *dummy_seed);
  manifest.add_setting("function", fn.name);
  manifest.add_output(path);
  manifest.write(path.has_parent_path() ? path.parent_path() : fs::path("."));
  out << "wrote " << data.n_rows() << " rows x " << data.n_features() + 1 << " columns to " << path.string() << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- train
struct TrainArgs {
  std::string data;
  std::string target;
  std::string arch = "300,50";
  std::string activation = "relu";
  std::string init = "kaiming";
  std::size_t epochs = 100;
  double lr = 0.01;
  std::size_t batch_size = 128;
  std::string optimizer = "adam";
  std::string loss = "mse";
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  std::string out;
};

TrainConfig train_config(const TrainArgs& a, std::size_t n_train) {
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.batch_size = std::min(a.batch_size, n_train);
  cfg.seed = a.seed;
  if (a.optimizer == "adam") cfg.optimizer = Optimizer::Adam;
  else if (a.optimizer == "sgd") cfg.optimizer = Optimizer::SGD;
  else throw UsageError("unknown optimizer '" + a.optimizer + "' (expected adam, sgd)");
  if (a.loss == "mse") cfg.loss = Loss::MSE;
  else if (a.loss == "ce" || a.loss == "cross-entropy") cfg.loss = Loss::CrossEntropy;
  else throw UsageError("unknown loss '" + a.loss + "' (expected mse, ce)");
  return cfg;
}

std::size_t output_width(const Dataset& data, Loss loss) {
  if (loss == Loss::MSE) return static_cast<std::size_t>(data.targets().cols());
  return static_cast<std::size_t>(data.targets().maxCoeff()) + 1;
}

int cmd_train(const TrainArgs& a, const Common& c, std::ostream& out) {
  const auto hidden = parse_size_list(a.arch, "--arch");
  const Activation act = activation_arg(a.activation);
  const InitScheme init = init_arg(a.init);
  const Dataset data = load_dataset(a.data, {a.target});
  const TrainTestSplit split = split_dataset(data, a.test_fraction, a.seed);
  const TrainConfig cfg = train_config(a, split.train.n_rows());
  MLPModel model = build_mlp(data.n_features(), hidden, output_width(data, cfg.loss), act, a.seed, init);
  const TrainResult result = train(std::move(model), split.train, cfg);
  const double train_loss = evaluate_loss(result.model, split.train.features(), split.train.targets(), cfg.loss);
  const double test_loss = evaluate_loss(result.model, split.test.features(), split.test.targets(), cfg.loss);

  const fs::path path(a.out);
  save_model(result.model, path);
  RunManifest manifest("train", c.args, resolve_threads(c.threads));
  manifest.add_seed("train", a.seed);
  manifest.add_input(a.data);
  manifest.add_setting("batch_size", std::to_string(cfg.batch_size));
  manifest.add_setting("init", std::string(to_string(init)));
  manifest.add_setting("adam", "beta1=0.9 beta2=0.999 eps=1e-8");
  manifest.add_setting("split", "train=" + std::to_string(split.train.n_rows()) +
                                    " test=" + std::to_string(split.test.n_rows()));
  manifest.add_setting("final_train_loss", fmt(train_loss));
  manifest.add_setting("final_test_loss", fmt(test_loss));
  manifest.add_output(path);
  manifest.write(path.has_parent_path() ? path.parent_path() : fs::path("."));
  out << "train_loss " << fmt(train_loss) << "\n" << "test_loss " << fmt(test_loss) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- estimate
struct EstimateArgs {
  std::string data;
  std::vector<std::string> targets;
  std::string model;
  std::string fn;
  std::size_t r = 0;
  std::uint64_t seed = 0;
  bool pca = false;
  bool whiten = false;
  bool assume_independent = false;
  bool ustat = false;
  std::size_t replicates = 0;
  std::string out;
};

PredictorPtr load_predictor(const std::string& model_path, const std::string& fn_name, RunManifest* manifest) {
  if (!model_path.empty() && !fn_name.empty()) throw UsageError("give either --model or --fn, not both");
  if (model_path.empty() && fn_name.empty()) throw UsageError("one of --model or --fn is required");
  if (!fn_name.empty()) {
    if (manifest) manifest->add_setting("function", fn_name);
    return function_arg(fn_name).as_predictor();
  }
  if (manifest) manifest->add_input(model_path);
  return std::make_shared<MLPModel>(load_model(model_path));
}

void check_dims(const Predictor& model, const Dataset& data) {
  if (model.input_dim() != data.n_features()) {
    std::ostringstream os;
    os << "model expects " << model.input_dim() << " inputs but the data has " << data.n_features()
       << " feature columns (use --target to exclude target columns)";
    throw UsageError(os.str());
  }
  if (model.output_dim() != 1) throw InvalidArgument("model must have a single output");
}

int cmd_estimate(const EstimateArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  if (a.pca && a.assume_independent) throw UsageError("--pca and --assume-independent are mutually exclusive");
  RunManifest manifest("estimate", c.args, resolve_threads(c.threads));
  const Dataset raw = load_dataset(a.data, a.targets);
  manifest.add_input(a.data);
  PredictorPtr model = load_predictor(a.model, a.fn, &manifest);
  check_dims(*model, raw);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::optional<Dataset> pca_data;
  if (a.pca) {
    const PCAModel pca = fit_pca(raw, a.whiten);
    model = wrap_with_inverse_pca(model, pca);
    pca_data = transform_dataset(pca, raw);
    const auto pca_path = dir / "pca.json";
    save_pca(pca, pca_path);
    manifest.add_output(pca_path);
    manifest.add_setting("pca_fitted_on", a.data);
  } else if (!a.assume_independent) {
    const double corr = max_abs_correlation(raw);
    if (corr > kCorrelationWarning) {
      err << "warning: max |pairwise feature correlation| = " << fmt(corr)
          << " > 0.1; reported indices are tau' and the sum is not a mean dimension"
             " (use --pca to de-correlate)\n";
    }
  }
  const Dataset& data = pca_data ? *pca_data : raw;
  const bool independent = a.pca || a.assume_independent;
  const ExecOptions exec{c.threads};
  const std::size_t r = a.r > 0 ? a.r : (a.ustat ? std::min<std::size_t>(data.n_rows() - 1, 1000) : data.n_rows() - 1);

  auto run_once = [&](std::uint64_t seed) {
    if (a.ustat) {
      const auto rows = sample_base_rows(data.n_rows(), r, seed);
      SensitivityReport rep = estimate_mean_dimension_ustat(*model, data, rows, independent, exec);
      rep.seed = seed;
      return rep;
    }
    return estimate_mean_dimension(*model, data, r, seed, independent, exec);
  };

  const SensitivityReport report = run_once(a.seed);
  for (const auto& p : write_report(report, dir)) manifest.add_output(p);
  manifest.add_seed("pairs", a.seed);
  manifest.add_setting("r", std::to_string(r));
  manifest.add_setting("estimator", std::string(to_string(report.estimator_kind)));
  if (report.bases_with_replacement) manifest.add_setting("bases_with_replacement", "true");

  out << (independent ? "mean_dimension " : "generalized_sum ") << fmt(report.mean_dimension) << "\n";
  out << (independent ? "mean_dimension_se " : "generalized_sum_se ") << fmt(report.mean_dimension_se) << "\n";
  out << "sigma_y2 " << fmt(report.sigma_y2) << "\n";

  if (a.replicates > 0) {
    if (a.replicates < 2) throw UsageError("--replicates needs at least 2");
    const ReplicationSummary summary =
        replicate([&](std::uint64_t seed) { return report_quantities(run_once(seed)); }, a.replicates, a.seed);
    manifest.add_output(write_replication_summary(summary, dir));
    const auto& md = summary.get("mean_dimension");
    out << "replicates " << summary.m << " mean " << fmt(md.mean) << " std " << fmt(md.stddev) << "\n";
  }
  manifest.write(dir);
  return kExitOk;
}

// -------------------------------------------------------------------- lamd
struct LamdArgs {
  std::string data;
  std::vector<std::string> targets;
  std::string model;
  std::size_t r = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_lamd(const LamdArgs& a, const Common& c, std::ostream& out) {
  RunManifest manifest("lamd", c.args, resolve_threads(c.threads));
  const Dataset data = load_dataset(a.data, a.targets);
  manifest.add_input(a.data);
  manifest.add_input(a.model);
  const MLPModel model = load_model(a.model);
  if (model.input_dim() != data.n_features())
    throw InvalidArgument("model expects " + std::to_string(model.input_dim()) + " inputs but the data has " +
                          std::to_string(data.n_features()) + " feature columns");
  const std::size_t r = a.r > 0 ? a.r : data.n_rows() - 1;
  const LamdTable table = lamd(model, data, r, a.seed, ExecOptions{c.threads});
  const fs::path dir(a.out);
  fs::create_directories(dir);
  manifest.add_output(write_lamd_csv(table, dir / "lamd.csv"));
  manifest.add_seed("pairs", a.seed);
  manifest.add_setting("r", std::to_string(r));
  manifest.write(dir);
  for (const auto& row : table.rows) {
    out << "layer " << row.layer << " " << to_string(row.stage) << " "
        << (row.available() ? fmt(row.lamd) : std::string("unavailable")) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- md-curve
struct CurveArgs {
  TrainArgs train;
  std::size_t checkpoint_every = 10;
  std::size_t r = 0;
  bool include_initial = false;
};

int cmd_md_curve(const CurveArgs& a, const Common& c, std::ostream& out) {
  const auto hidden = parse_size_list(a.train.arch, "--arch");
  const Activation act = activation_arg(a.train.activation);
  const InitScheme init = init_arg(a.train.init);
  if (a.checkpoint_every == 0) throw UsageError("--checkpoint-every must be at least 1");
  RunManifest manifest("md-curve", c.args, resolve_threads(c.threads));
  const Dataset data = load_dataset(a.train.data, {a.train.target});
  manifest.add_input(a.train.data);
  const TrainTestSplit split = split_dataset(data, a.train.test_fraction, a.train.seed);
  const TrainConfig cfg = train_config(a.train, split.train.n_rows());
  MLPModel model = build_mlp(data.n_features(), hidden, output_width(data, cfg.loss), act, a.train.seed, init);
  CurveOptions opts;
  opts.checkpoint_every = a.checkpoint_every;
  opts.r = a.r;
  opts.seed = a.train.seed;
  opts.include_initial = a.include_initial;
  opts.exec.threads = c.threads;
  const TrainingCurve curve = md_during_training(std::move(model), split.train, &split.test, cfg, opts);
  const fs::path dir(a.train.out);
  fs::create_directories(dir);
  manifest.add_output(write_curve_csv(curve, dir / "curve.csv"));
  manifest.add_seed("train_and_pairs", a.train.seed);
  manifest.add_setting("batch_size", std::to_string(cfg.batch_size));
  manifest.add_setting("init", std::string(to_string(init)));
  manifest.write(dir);
  out << "checkpoints " << curve.epochs.size() << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- heatmap
struct HeatmapArgs {
  std::string data;
  std::vector<std::string> targets;
  std::string model;
  std::string fn;
  std::string shape;
  std::size_t r = 20000;
  std::uint64_t seed = 0;
  bool pgm = false;
  std::string out;
};

int cmd_heatmap(const HeatmapArgs& a, const Common& c, std::ostream& out) {
  const auto dims = parse_size_list(a.shape, "--shape");
  if (dims.size() != 3) throw UsageError("--shape must be H,W,C");
  const ImageShape shape{dims[0], dims[1], dims[2]};
  RunManifest manifest("heatmap", c.args, resolve_threads(c.threads));
  const Dataset data = load_dataset(a.data, a.targets);
  manifest.add_input(a.data);
  if (shape.size() != data.n_features()) {
    throw UsageError("--shape " + a.shape + " has " + std::to_string(shape.size()) + " cells but the data has " +
                     std::to_string(data.n_features()) + " features");
  }
  const PredictorPtr model = load_predictor(a.model, a.fn, &manifest);
  check_dims(*model, data);
  const Heatmap hm = tau_prime_heatmap(*model, data, shape, a.r, a.seed, ExecOptions{c.threads});
  const fs::path dir(a.out);
  fs::create_directories(dir);
  for (const auto& p : write_heatmap(hm, dir, a.pgm)) manifest.add_output(p);
  manifest.add_seed("pairs", a.seed);
  manifest.write(dir);
  out << "generalized_sum " << fmt(hm.report.mean_dimension) << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- pca
struct PcaArgs {
  std::string data;
  std::vector<std::string> targets;
  bool whiten = false;
  std::string out;
};

int cmd_pca(const PcaArgs& a, const Common& c, std::ostream& out) {
  RunManifest manifest("pca", c.args, resolve_threads(c.threads));
  const Dataset data = load_dataset(a.data, a.targets);
  manifest.add_input(a.data);
  const PCAModel pca = fit_pca(data, a.whiten);
  const fs::path path(a.out);
  save_pca(pca, path);
  manifest.add_output(path);
  manifest.write(path.has_parent_path() ? path.parent_path() : fs::path("."));
  out << "eigenvalues";
  for (Eigen::Index j = 0; j < pca.eigenvalues.size(); ++j) out << " " << fmt(pca.eigenvalues[j]);
  out << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- anova
struct AnovaArgs {
  std::string fn;
  std::size_t nodes = 32;
  std::string out;
};

int cmd_anova(const AnovaArgs& a, const Common& c, std::ostream& out) {
  const TestFunction fn = function_arg(a.fn);
  const AnovaTable table = brute_force_anova(fn, a.nodes);
  const fs::path path(a.out);
  csv::write_atomic(path, anova_to_csv(table));
  RunManifest manifest("anova", c.args, resolve_threads(c.threads));
  manifest.add_setting("function", fn.name);
  manifest.add_setting("nodes_per_dim", std::to_string(a.nodes));
  manifest.add_output(path);
  manifest.write(path.has_parent_path() ? path.parent_path() : fs::path("."));
  out << "variance " << fmt(table.variance) << "\nmean_dimension " << fmt(table.mean_dimension()) << "\n";
  return kExitOk;
}

void add_train_options(CLI::App* sub, TrainArgs& t) {
  sub->add_option("--data", t.data, "Training CSV")->required();
  sub->add_option("--target", t.target, "Target column")->required();
  sub->add_option("--arch", t.arch, "Hidden layer widths, comma separated")->capture_default_str();
  sub->add_option("--activation", t.activation, "relu, tanh or identity")->capture_default_str();
  sub->add_option("--init", t.init, "kaiming (activation gain) or framework (gain 1/sqrt(3))")
      ->capture_default_str();
  sub->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--lr", t.lr, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--batch-size", t.batch_size, "Mini-batch size (clamped to the training rows)")
      ->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--optimizer", t.optimizer, "adam or sgd")->capture_default_str();
  sub->add_option("--loss", t.loss, "mse or ce")->capture_default_str();
  sub->add_option("--test-fraction", t.test_fraction, "Held-out fraction")->capture_default_str();
  sub->add_option("--seed", t.seed, "Seed for initialization, split and batching")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean dimension and total-index estimation from given data"};
  app.name("meandim");
  app.require_subcommand(1);
  Common common;
  common.args = args;
  app.add_option("--threads", common.threads, "Worker threads (default: MEANDIM_THREADS or all cores)");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Sample a test function into a CSV dataset");
  gen_cmd->add_option("--fn", gen.fn, "Test function: ishigami, additive3, product2, constant")->required();
  gen_cmd->add_option("--n", gen.n, "Rows")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output CSV")->required();
  gen_cmd->add_option("--dummies", gen.dummies, "Append this many uniform dummy features");
  gen_cmd->add_option("--dummy-low", gen.dummy_low, "Dummy lower bound")->capture_default_str();
  gen_cmd->add_option("--dummy-high", gen.dummy_high, "Dummy upper bound")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a feed-forward network");
  add_train_options(train_cmd, tr);
  train_cmd->add_option("--out", tr.out, "Output model JSON")->required();

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate total indices and the mean dimension");
  est_cmd->add_option("--data", est.data, "Dataset CSV")->required();
  est_cmd->add_option("--target", est.targets, "Column(s) to exclude from the features");
  est_cmd->add_option("--model", est.model, "Model JSON");
  est_cmd->add_option("--fn", est.fn, "Evaluate a built-in test function instead of a model");
  est_cmd->add_option("--r", est.r, "Number of pairs (default N-1; 1000 with --ustat)");
  est_cmd->add_option("--seed", est.seed, "Pair sampling seed")->capture_default_str();
  est_cmd->add_flag("--pca", est.pca, "Estimate on PCA features through an inverse-PCA wrapper");
  est_cmd->add_flag("--whiten", est.whiten, "Whiten the PCA features");
  est_cmd->add_flag("--assume-independent", est.assume_independent, "Label results as total indices");
  est_cmd->add_flag("--ustat", est.ustat, "Use the U-statistic estimator");
  est_cmd->add_option("--replicates", est.replicates, "Repeat with seeds seed..seed+m-1");
  est_cmd->add_option("--out", est.out, "Output directory")->required();

  LamdArgs la;
  auto* lamd_cmd = app.add_subcommand("lamd", "Layer-average mean dimension of a network");
  lamd_cmd->add_option("--data", la.data, "Dataset CSV")->required();
  lamd_cmd->add_option("--target", la.targets, "Column(s) to exclude from the features");
  lamd_cmd->add_option("--model", la.model, "Model JSON")->required();
  lamd_cmd->add_option("--r", la.r, "Number of pairs (default N-1)");
  lamd_cmd->add_option("--seed", la.seed, "Pair sampling seed")->capture_default_str();
  lamd_cmd->add_option("--out", la.out, "Output directory")->required();

  CurveArgs cu;
  auto* curve_cmd = app.add_subcommand("md-curve", "Mean dimension across training epochs");
  add_train_options(curve_cmd, cu.train);
  curve_cmd->add_option("--checkpoint-every", cu.checkpoint_every, "Epochs between estimates")->capture_default_str();
  curve_cmd->add_option("--r", cu.r, "Number of pairs (default N-1 of the training split)");
  curve_cmd->add_flag("--include-initial", cu.include_initial, "Also estimate before training");
  curve_cmd->add_option("--out", cu.train.out, "Output directory")->required();

  HeatmapArgs hm;
  auto* heat_cmd = app.add_subcommand("heatmap", "tau' heatmaps for image-shaped inputs");
  heat_cmd->add_option("--data", hm.data, "Dataset CSV")->required();
  heat_cmd->add_option("--target", hm.targets, "Column(s) to exclude from the features");
  heat_cmd->add_option("--model", hm.model, "Model JSON");
  heat_cmd->add_option("--fn", hm.fn, "Built-in test function");
  heat_cmd->add_option("--shape", hm.shape, "H,W,C (features ordered channel, row, column)")->required();
  heat_cmd->add_option("--r", hm.r, "Number of pairs")->capture_default_str();
  heat_cmd->add_option("--seed", hm.seed, "Pair sampling seed")->capture_default_str();
  heat_cmd->add_flag("--pgm", hm.pgm, "Also write 16-bit PGM images");
  heat_cmd->add_option("--out", hm.out, "Output directory")->required();

  PcaArgs pc;
  auto* pca_cmd = app.add_subcommand("pca", "Fit a PCA rotation to a dataset");
  pca_cmd->add_option("--data", pc.data, "Dataset CSV")->required();
  pca_cmd->add_option("--target", pc.targets, "Column(s) to exclude from the features");
  pca_cmd->add_flag("--whiten", pc.whiten, "Whiten");
  pca_cmd->add_option("--out", pc.out, "Output PCA JSON")->required();

  AnovaArgs an;
  auto* anova_cmd = app.add_subcommand("anova", "Quadrature ANOVA oracle for a test function");
  anova_cmd->add_option("--fn", an.fn, "Test function")->required();
  anova_cmd->add_option("--nodes", an.nodes, "Quadrature nodes per dimension")->capture_default_str();
  anova_cmd->add_option("--out", an.out, "Output CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    if (auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) err << sub->help();
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, common, out);
    if (*train_cmd) return cmd_train(tr, common, out);
    if (*est_cmd) return cmd_estimate(est, common, out, err);
    if (*lamd_cmd) return cmd_lamd(la, common, out);
    if (*curve_cmd) return cmd_md_curve(cu, common, out);
    if (*heat_cmd) return cmd_heatmap(hm, common, out);
    if (*pca_cmd) return cmd_pca(pc, common, out);
    if (*anova_cmd) return cmd_anova(an, common, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << "usage error: no command\n";
  return kExitUsage;
}

}  // namespace meandim::cli
