#include "meandim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "meandim/csv.hpp"
#include "meandim/rng.hpp"

namespace meandim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_or_nan(double v) { return std::isnan(v) ? "nan" : csv::format_real(v); }

struct StageColumns {
  std::size_t layer;
  Stage stage;
  Eigen::Index first;
  Eigen::Index count;
};

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::PreActivation: return "pre_activation";
    case Stage::PostActivation: return "post_activation";
    case Stage::Output: return "output";
  }
  return "unknown";
}

const LamdRow& LamdTable::at(std::size_t layer, Stage stage) const {
  for (const auto& row : rows)
    if (row.layer == layer && row.stage == stage) return row;
  throw InvalidArgument("LamdTable: no row for layer " + std::to_string(layer) + " stage " +
                        std::string(to_string(stage)));
}

LamdTable lamd(const MLPModel& model, const Dataset& data, std::size_t r, std::uint64_t seed,
               const ExecOptions& exec) {
  if (r < 2) throw InvalidArgument("lamd: r must be at least 2");
  if (model.input_dim() != data.n_features()) throw InvalidArgument("lamd: model/data dimension mismatch");

  const auto& layers = model.layers();
  std::vector<StageColumns> stages;
  Eigen::Index total = 0;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const auto width = static_cast<Eigen::Index>(layers[j].out_dim());
    if (j + 1 < layers.size()) {
      stages.push_back({j, Stage::PreActivation, total, width});
      total += width;
      stages.push_back({j, Stage::PostActivation, total, width});
      total += width;
    } else {
      stages.push_back({j, Stage::Output, total, width});
      total += width;
    }
  }

  const BatchFn traced = [&model, total, n_layers = layers.size()](const Matrix& x) {
    const BatchTrace t = model.forward_traced_batch(x);
    Matrix out(x.rows(), total);
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < n_layers; ++j) {
      out.middleCols(col, t.pre[j].cols()) = t.pre[j];
      col += t.pre[j].cols();
      if (j + 1 < n_layers) {
        out.middleCols(col, t.post[j].cols()) = t.post[j];
        col += t.post[j].cols();
      }
    }
    return out;
  };

  const auto n_outputs = static_cast<std::size_t>(total);
  const OutputMoments mom = output_moments(traced, n_outputs, data, exec);
  const PairIndexList pairs = sample_pairs(data, r, seed);
  const Matrix sums = sum_squared_changes(traced, n_outputs, data, pairs, exec);
  const double divisor = 2.0 * static_cast<double>(r - 1);
  const auto d = static_cast<Eigen::Index>(data.n_features());

  LamdTable table;
  table.r = r;
  table.seed = seed;
  for (const auto& st : stages) {
    LamdRow row;
    row.layer = st.layer;
    row.stage = st.stage;
    row.neuron_count = static_cast<std::size_t>(st.count);
    double acc = 0.0;
    std::size_t used = 0;
    for (Eigen::Index o = st.first; o < st.first + st.count; ++o) {
      if (is_degenerate_variance(mom.variance[o], mom.mean[o])) {
        ++row.degenerate_count;
        continue;
      }
      // Same arithmetic as estimate_mean_dimension on a scalar output.
      const Vector tau = sums.col(o) / divisor;
      double tau_sum = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) tau_sum += tau[i];
      acc += tau_sum / mom.variance[o];
      ++used;
    }
    row.lamd = used > 0 ? acc / static_cast<double>(used) : kNaN;
    table.rows.push_back(row);
  }
  return table;
}

TrainingCurve md_during_training(MLPModel initial, const Dataset& train_data, const Dataset* test_data,
                                 const TrainConfig& cfg, const CurveOptions& options) {
  if (options.checkpoint_every == 0) throw InvalidArgument("checkpoint_every must be at least 1");
  const std::size_t r = options.r == 0 ? train_data.n_rows() - 1 : options.r;
  Trainer trainer(std::move(initial), train_data, cfg);
  TrainingCurve curve;

  auto checkpoint = [&](std::size_t epoch) {
    const MLPModel& m = trainer.model();
    double md = kNaN;
    try {
      md = estimate_mean_dimension(m, train_data, r, options.seed, true, options.exec).mean_dimension;
    } catch (const DegenerateOutputError&) {
      // recorded as a missing point
    } catch (const Error& e) {
      throw NumericalError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    curve.epochs.push_back(epoch);
    curve.mean_dimension.push_back(md);
    curve.train_loss.push_back(evaluate_loss(m, train_data.features(), train_data.targets(), cfg.loss));
    curve.test_loss.push_back(test_data ? evaluate_loss(m, test_data->features(), test_data->targets(), cfg.loss)
                                        : kNaN);
  };

  if (options.include_initial) checkpoint(0);
  for (std::size_t e = 1; e <= cfg.epochs; ++e) {
    try {
      trainer.run_epoch();
    } catch (const Error& err) {
      throw NumericalError("epoch " + std::to_string(e) + ": " + err.what());
    }
    if (e % options.checkpoint_every == 0 || e == cfg.epochs) checkpoint(e);
  }
  return curve;
}

Heatmap tau_prime_heatmap(const Predictor& model, const Dataset& data, const ImageShape& shape,
                          std::size_t r, std::uint64_t seed, const ExecOptions& exec) {
  if (shape.size() == 0 || shape.size() != data.n_features()) {
    std::ostringstream os;
    os << "heatmap shape " << shape.height << "x" << shape.width << "x" << shape.channels << " = "
       << shape.size() << " does not match " << data.n_features() << " features";
    throw InvalidArgument(os.str());
  }
  Heatmap hm;
  hm.shape = shape;
  hm.report = estimate_mean_dimension(model, data, r, seed, /*assume_independent=*/false, exec);
  const auto h = static_cast<Eigen::Index>(shape.height);
  const auto w = static_cast<Eigen::Index>(shape.width);
  for (std::size_t c = 0; c < shape.channels; ++c) {
    Matrix m(h, w);
    for (std::size_t y = 0; y < shape.height; ++y)
      for (std::size_t x = 0; x < shape.width; ++x)
        m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) =
            hm.report.tau_hat[static_cast<Eigen::Index>(shape.index(c, y, x))];
    hm.channel_maps.push_back(std::move(m));
  }
  hm.aggregated = Matrix::Zero(h, w);
  for (const auto& m : hm.channel_maps) hm.aggregated += m;
  hm.aggregated /= static_cast<double>(shape.channels);
  return hm;
}

Dataset augment_with_dummies(const Dataset& data, std::size_t n_dummies, std::uint64_t seed, double low,
                             double high) {
  if (n_dummies < 1) throw InvalidArgument("augment_with_dummies: n_dummies must be at least 1");
  if (!(low < high)) throw InvalidArgument("augment_with_dummies: need low < high");
  const auto n = static_cast<Eigen::Index>(data.n_rows());
  const auto d = static_cast<Eigen::Index>(data.n_features());
  Matrix features(n, d + static_cast<Eigen::Index>(n_dummies));
  features.leftCols(d) = data.features();
  Rng rng(seed);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n_dummies); ++j) features(r, d + j) = rng.uniform(low, high);
  auto names = data.feature_names();
  for (std::size_t j = 0; j < n_dummies; ++j) names.push_back("dummy_" + std::to_string(j));
  std::optional<Matrix> targets;
  if (data.has_targets()) targets = data.targets();
  return Dataset(std::move(features), std::move(names), std::move(targets),
                 data.has_targets() ? data.target_names() : std::vector<std::string>{});
}

std::filesystem::path write_lamd_csv(const LamdTable& table, const std::filesystem::path& path) {
  std::string body = csv::join_row({"layer", "stage", "lamd", "neuron_count", "degenerate_count"});
  for (const auto& row : table.rows) {
    body += csv::join_row({std::to_string(row.layer), std::string(to_string(row.stage)), format_or_nan(row.lamd),
                           std::to_string(row.neuron_count), std::to_string(row.degenerate_count)});
  }
  csv::write_atomic(path, body);
  return path;
}

std::filesystem::path write_curve_csv(const TrainingCurve& curve, const std::filesystem::path& path) {
  std::string body = csv::join_row({"epoch", "mean_dimension", "train_loss", "test_loss"});
  for (std::size_t i = 0; i < curve.epochs.size(); ++i) {
    body += csv::join_row({std::to_string(curve.epochs[i]), format_or_nan(curve.mean_dimension[i]),
                           format_or_nan(curve.train_loss[i]), format_or_nan(curve.test_loss[i])});
  }
  csv::write_atomic(path, body);
  return path;
}

namespace {

std::string grid_csv(const Matrix& m) {
  std::vector<std::string> header;
  for (Eigen::Index x = 0; x < m.cols(); ++x) header.push_back("col" + std::to_string(x));
  std::string body = csv::join_row(header);
  std::vector<std::string> cells;
  for (Eigen::Index y = 0; y < m.rows(); ++y) {
    cells.clear();
    for (Eigen::Index x = 0; x < m.cols(); ++x) cells.push_back(csv::format_real(m(y, x)));
    body += csv::join_row(cells);
  }
  return body;
}

// Binary P5 with maxval 65535 (big-endian samples), min-max scaled.
std::string pgm16(const Matrix& m, double lo, double hi) {
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n65535\n";
  const double span = hi - lo;
  for (Eigen::Index y = 0; y < m.rows(); ++y) {
    for (Eigen::Index x = 0; x < m.cols(); ++x) {
      const double t = span > 0.0 ? (m(y, x) - lo) / span : 0.0;
      const auto v = static_cast<unsigned>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
      out.push_back(static_cast<char>((v >> 8) & 0xFF));
      out.push_back(static_cast<char>(v & 0xFF));
    }
  }
  return out;
}

}  // namespace

std::vector<std::filesystem::path> write_heatmap(const Heatmap& heatmap, const std::filesystem::path& dir,
                                                 bool write_pgm) {
  std::vector<std::filesystem::path> files;
  nlohmann::json meta;
  meta["height"] = heatmap.shape.height;
  meta["width"] = heatmap.shape.width;
  meta["channels"] = heatmap.shape.channels;
  meta["feature_layout"] = "channel,row,column";
  meta["r"] = heatmap.report.r;
  meta["seed"] = heatmap.report.seed;
  meta["index_kind"] = "tau_prime";
  meta["generalized_sum"] = heatmap.report.mean_dimension;
  meta["sigma_y2"] = heatmap.report.sigma_y2;
  meta["rng"] = Rng::kAlgorithm;
  meta["version"] = version();
  meta["maps"] = nlohmann::json::array();

  auto emit = [&](const std::string& stem, const Matrix& m) {
    const auto csv_path = dir / (stem + ".csv");
    csv::write_atomic(csv_path, grid_csv(m));
    files.push_back(csv_path);
    nlohmann::json entry;
    entry["name"] = stem;
    entry["csv"] = csv_path.filename().string();
    entry["min"] = m.minCoeff();
    entry["max"] = m.maxCoeff();
    if (write_pgm) {
      const auto pgm_path = dir / (stem + ".pgm");
      csv::write_atomic(pgm_path, pgm16(m, m.minCoeff(), m.maxCoeff()));
      files.push_back(pgm_path);
      entry["pgm"] = pgm_path.filename().string();
      entry["pgm_scale"] = {{"offset", m.minCoeff()},
                            {"scale", m.maxCoeff() > m.minCoeff() ? (m.maxCoeff() - m.minCoeff()) / 65535.0 : 0.0}};
    }
    meta["maps"].push_back(std::move(entry));
  };

  for (std::size_t c = 0; c < heatmap.channel_maps.size(); ++c)
    emit("channel_" + std::to_string(c), heatmap.channel_maps[c]);
  emit("aggregated", heatmap.aggregated);

  const auto meta_path = dir / "heatmap_meta.json";
  csv::write_atomic(meta_path, meta.dump(2) + "\n");
  files.push_back(meta_path);
  return files;
}

}  // namespace meandim
