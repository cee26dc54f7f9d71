#include "meandim/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "meandim/csv.hpp"
#include "meandim/parallel.hpp"
#include "meandim/rng.hpp"

namespace meandim {
namespace {

// Rows per evaluation batch of the pair design; pairs per block depend only
// on d, never on the worker count.
constexpr std::size_t kTargetBatchRows = 2048;

std::size_t pairs_per_block(std::size_t d) {
  return std::max<std::size_t>(1, kTargetBatchRows / (d + 1));
}

BatchFn batch_fn_of(const Predictor& model) {
  if (model.output_dim() != 1)
    throw InvalidArgument("estimator needs a scalar predictor; wrap it with OutputSelector");
  return [&model](const Matrix& x) { return model.evaluate_batch(x); };
}

void check_pairs(const Dataset& data, const PairIndexList& pairs) {
  for (const auto& p : pairs.pairs) {
    if (p.base >= data.n_rows() || p.donor >= data.n_rows() || p.base == p.donor)
      throw InvalidArgument("pair list does not fit the dataset");
  }
}

// Evaluates base and one-feature-replaced points for each block of pairs and
// hands the n_pairs * (d + 1) x s output matrix to on_block. Row layout per
// pair: base, then feature 0..d-1 replaced.
template <typename OnBlock>
void evaluate_pair_blocks(const BatchFn& fn, std::size_t n_outputs, const Dataset& data,
                          const PairIndexList& pairs, const ExecOptions& exec,
                          OnBlock&& on_block) {
  const std::size_t d = data.n_features();
  const std::size_t r = pairs.size();
  const std::size_t ppb = pairs_per_block(d);
  const Matrix& x = data.features();
  parallel_for_chunks(block_count(r, ppb), exec.threads, [&](std::size_t b) {
    const std::size_t first = b * ppb;
    const std::size_t n = std::min(ppb, r - first);
    Matrix batch(static_cast<Eigen::Index>(n * (d + 1)), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < n; ++k) {
      const auto& p = pairs.pairs[first + k];
      const auto base = static_cast<Eigen::Index>(p.base);
      const auto donor = static_cast<Eigen::Index>(p.donor);
      const auto row0 = static_cast<Eigen::Index>(k * (d + 1));
      batch.row(row0) = x.row(base);
      for (std::size_t i = 0; i < d; ++i) {
        const auto row = row0 + 1 + static_cast<Eigen::Index>(i);
        const auto col = static_cast<Eigen::Index>(i);
        batch.row(row) = x.row(base);
        batch(row, col) = x(donor, col);
      }
    }
    auto fail_at = [&](Eigen::Index row, const std::string& what) {
      const std::size_t k = first + static_cast<std::size_t>(row) / (d + 1);
      const std::size_t slot = static_cast<std::size_t>(row) % (d + 1);
      std::ostringstream os;
      os << what << " at pair " << k;
      if (slot == 0) os << " (base point)";
      else os << ", feature " << slot - 1;
      throw NumericalError(os.str());
    };
    Matrix out;
    try {
      out = fn(batch);
    } catch (const NumericalError&) {
      // Rare path: find the offending point one row at a time.
      for (Eigen::Index row = 0; row < batch.rows(); ++row) {
        std::string what;
        try {
          if (!fn(batch.middleRows(row, 1)).allFinite()) what = "non-finite model output";
        } catch (const NumericalError& inner) {
          what = inner.what();
        }
        if (!what.empty()) fail_at(row, what);
      }
      throw;
    }
    if (static_cast<std::size_t>(out.rows()) != n * (d + 1) ||
        static_cast<std::size_t>(out.cols()) != n_outputs)
      throw InvalidArgument("batch function returned an unexpected shape");
    if (!out.allFinite()) {
      for (Eigen::Index row = 0; row < out.rows(); ++row)
        if (!out.row(row).allFinite()) fail_at(row, "non-finite model output");
    }
    on_block(b, first, n, out);
  });
}

// Sum over rows of a block, in row order.
double sequential_sum(const Vector& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += v[i];
  return s;
}

double variance_standard_error(double variance, double fourth_moment, std::size_t n) {
  const double excess = std::max(fourth_moment - variance * variance, 0.0);
  return std::sqrt(excess / static_cast<double>(n));
}

double ratio_standard_error(double numerator_se, double ratio, double variance, double variance_se) {
  const double a = numerator_se / variance;
  const double b = ratio * variance_se / variance;
  return std::sqrt(a * a + b * b);
}

void fill_report_common(SensitivityReport& rep, const Dataset& data, const OutputMoments& mom,
                        bool assume_independent) {
  rep.feature_names = data.feature_names();
  rep.sigma_y2 = mom.variance[0];
  rep.tau_normalized = rep.tau_hat / rep.sigma_y2;
  double total = 0.0;
  for (Eigen::Index i = 0; i < rep.tau_hat.size(); ++i) total += rep.tau_hat[i];
  rep.mean_dimension = total / rep.sigma_y2;
  rep.dependent_features = !assume_independent;
  rep.variance_rows = data.n_rows();
}

OutputMoments checked_moments(const Predictor& model, const Dataset& data, const ExecOptions& exec) {
  OutputMoments mom = output_moments(batch_fn_of(model), 1, data, exec);
  if (is_degenerate_variance(mom.variance[0], mom.mean[0])) {
    std::ostringstream os;
    os << "degenerate output: variance " << mom.variance[0] << " over " << data.n_rows()
       << " rows; mean dimension undefined";
    throw DegenerateOutputError(os.str());
  }
  return mom;
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  return kind == EstimatorKind::PlugIn ? "plug_in" : "u_statistic";
}

double finite_change(const Predictor& model, std::span<const double> base,
                     std::span<const double> donor, std::size_t i) {
  if (model.output_dim() != 1) throw InvalidArgument("finite_change: predictor must be scalar");
  if (base.size() != model.input_dim()) throw InvalidArgument("finite_change: dimension mismatch");
  const auto replaced = make_replacement(base, donor, i);
  Matrix batch(2, static_cast<Eigen::Index>(base.size()));
  std::copy(base.begin(), base.end(), batch.row(0).data());
  std::copy(replaced.begin(), replaced.end(), batch.row(1).data());
  const Matrix out = model.evaluate_batch(batch);
  if (!out.allFinite()) throw NumericalError("finite_change: non-finite model output");
  return out(1, 0) - out(0, 0);
}

FiniteChangeMatrix compute_finite_changes(const Predictor& model, const Dataset& data,
                                          const PairIndexList& pairs, const ExecOptions& exec) {
  if (model.input_dim() != data.n_features())
    throw InvalidArgument("model input_dim " + std::to_string(model.input_dim()) +
                          " does not match dataset features " + std::to_string(data.n_features()));
  check_pairs(data, pairs);
  const std::size_t d = data.n_features();
  FiniteChangeMatrix fc;
  fc.pairs = pairs;
  fc.values.resize(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(d));
  evaluate_pair_blocks(batch_fn_of(model), 1, data, pairs, exec,
                       [&](std::size_t, std::size_t first, std::size_t n, const Matrix& out) {
                         for (std::size_t k = 0; k < n; ++k) {
                           const auto row0 = static_cast<Eigen::Index>(k * (d + 1));
                           const double base = out(row0, 0);
                           for (std::size_t i = 0; i < d; ++i) {
                             fc.values(static_cast<Eigen::Index>(first + k), static_cast<Eigen::Index>(i)) =
                                 out(row0 + 1 + static_cast<Eigen::Index>(i), 0) - base;
                           }
                         }
                       });
  return fc;
}

Vector estimate_total_indices(const FiniteChangeMatrix& changes) {
  const std::size_t r = changes.r();
  const std::size_t d = changes.d();
  if (r < 2) throw InvalidArgument("estimate_total_indices: need r >= 2 pairs");
  const std::size_t ppb = pairs_per_block(d);
  Vector total = Vector::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t b = 0; b < block_count(r, ppb); ++b) {
    const std::size_t first = b * ppb;
    const std::size_t n = std::min(ppb, r - first);
    Vector partial = Vector::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < d; ++i) {
        const double phi = changes.values(static_cast<Eigen::Index>(first + k), static_cast<Eigen::Index>(i));
        partial[static_cast<Eigen::Index>(i)] += phi * phi;
      }
    }
    total += partial;
  }
  return total / (2.0 * static_cast<double>(r - 1));
}

Matrix sum_squared_changes(const BatchFn& fn, std::size_t n_outputs, const Dataset& data,
                           const PairIndexList& pairs, const ExecOptions& exec) {
  check_pairs(data, pairs);
  const std::size_t d = data.n_features();
  const std::size_t ppb = pairs_per_block(d);
  const std::size_t n_blocks = block_count(pairs.size(), ppb);
  const auto s = static_cast<Eigen::Index>(n_outputs);
  std::vector<Matrix> partials(n_blocks);
  evaluate_pair_blocks(fn, n_outputs, data, pairs, exec,
                       [&](std::size_t b, std::size_t, std::size_t n, const Matrix& out) {
                         Matrix partial = Matrix::Zero(static_cast<Eigen::Index>(d), s);
                         for (std::size_t k = 0; k < n; ++k) {
                           const auto row0 = static_cast<Eigen::Index>(k * (d + 1));
                           for (std::size_t i = 0; i < d; ++i) {
                             const auto row = row0 + 1 + static_cast<Eigen::Index>(i);
                             for (Eigen::Index o = 0; o < s; ++o) {
                               const double phi = out(row, o) - out(row0, o);
                               partial(static_cast<Eigen::Index>(i), o) += phi * phi;
                             }
                           }
                         }
                         partials[b] = std::move(partial);
                       });
  Matrix total = Matrix::Zero(static_cast<Eigen::Index>(d), s);
  for (const auto& p : partials) total += p;
  return total;
}

OutputMoments output_moments(const BatchFn& fn, std::size_t n_outputs, const Dataset& data,
                             const ExecOptions& exec) {
  const std::size_t n = data.n_rows();
  const auto s = static_cast<Eigen::Index>(n_outputs);
  const std::size_t n_blocks = block_count(n);
  const Matrix& x = data.features();

  auto eval_block = [&](std::size_t b) {
    const auto start = static_cast<Eigen::Index>(b * kRowBlock);
    const auto len = static_cast<Eigen::Index>(std::min(kRowBlock, n - b * kRowBlock));
    Matrix out = fn(x.middleRows(start, len));
    if (out.cols() != s || out.rows() != len) throw InvalidArgument("batch function returned an unexpected shape");
    if (!out.allFinite()) throw NumericalError("non-finite model output on dataset rows");
    return out;
  };

  std::vector<Vector> sums(n_blocks);
  parallel_for_chunks(n_blocks, exec.threads, [&](std::size_t b) {
    const Matrix out = eval_block(b);
    Vector acc = Vector::Zero(s);
    for (Eigen::Index r = 0; r < out.rows(); ++r) acc += out.row(r).transpose();
    sums[b] = std::move(acc);
  });
  Vector mean = Vector::Zero(s);
  for (const auto& v : sums) mean += v;
  mean /= static_cast<double>(n);

  std::vector<std::pair<Vector, Vector>> central(n_blocks);
  parallel_for_chunks(n_blocks, exec.threads, [&](std::size_t b) {
    const Matrix out = eval_block(b);
    Vector m2 = Vector::Zero(s);
    Vector m4 = Vector::Zero(s);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      for (Eigen::Index o = 0; o < s; ++o) {
        const double dev = out(r, o) - mean[o];
        const double sq = dev * dev;
        m2[o] += sq;
        m4[o] += sq * sq;
      }
    }
    central[b] = {std::move(m2), std::move(m4)};
  });
  Vector m2 = Vector::Zero(s);
  Vector m4 = Vector::Zero(s);
  for (const auto& [a, b] : central) {
    m2 += a;
    m4 += b;
  }
  OutputMoments mom;
  mom.mean = mean;
  mom.variance = m2 / static_cast<double>(n - 1);
  mom.fourth_moment = m4 / static_cast<double>(n);
  return mom;
}

bool is_degenerate_variance(double variance, double mean) {
  return !(variance > 1e-12 * mean * mean + 1e-300);
}

double estimate_output_variance(const Predictor& model, const Dataset& data, const ExecOptions& exec) {
  if (model.input_dim() != data.n_features()) throw InvalidArgument("model/data dimension mismatch");
  return checked_moments(model, data, exec).variance[0];
}

SensitivityReport estimate_mean_dimension(const Predictor& model, const Dataset& data, std::size_t r,
                                          std::uint64_t seed, bool assume_independent,
                                          const ExecOptions& exec) {
  if (r < 2) throw InvalidArgument("estimate_mean_dimension: r must be at least 2");
  if (model.input_dim() != data.n_features())
    throw InvalidArgument("model input_dim " + std::to_string(model.input_dim()) +
                          " does not match dataset features " + std::to_string(data.n_features()));
  const OutputMoments mom = checked_moments(model, data, exec);
  const PairIndexList pairs = sample_pairs(data, r, seed);
  const FiniteChangeMatrix fc = compute_finite_changes(model, data, pairs, exec);

  SensitivityReport rep;
  rep.tau_hat = estimate_total_indices(fc);
  fill_report_common(rep, data, mom, assume_independent);
  rep.r = r;
  rep.seed = seed;
  rep.estimator_kind = EstimatorKind::PlugIn;
  rep.bases_with_replacement = pairs.bases_with_replacement;
  rep.model_evaluations = r * (data.n_features() + 1) + 2 * data.n_rows();

  // Per-pair contributions a_k = sum_i phi_ki^2 give the numerator's spread.
  const Vector per_pair = fc.values.cwiseProduct(fc.values).rowwise().sum();
  const double a_mean = sequential_sum(per_pair) / static_cast<double>(r);
  const double a_var = (per_pair.array() - a_mean).square().sum() / static_cast<double>(r - 1);
  const double num_se = std::sqrt(a_var / static_cast<double>(r)) * static_cast<double>(r) /
                        (2.0 * static_cast<double>(r - 1));
  rep.mean_dimension_se =
      ratio_standard_error(num_se, rep.mean_dimension, rep.sigma_y2,
                           variance_standard_error(rep.sigma_y2, mom.fourth_moment[0], data.n_rows()));
  return rep;
}

std::vector<std::size_t> sample_base_rows(std::size_t n_rows, std::size_t r, std::uint64_t seed) {
  if (r > n_rows) throw InvalidArgument("sample_base_rows: r exceeds the number of rows");
  const PairIndexList pairs = sample_pairs(n_rows, r, seed);
  std::vector<std::size_t> rows;
  rows.reserve(r);
  for (const auto& p : pairs.pairs) rows.push_back(p.base);
  return rows;
}

namespace {

struct UStatSums {
  Vector tau;             // per feature, already divided by 2 r (r - 1)
  Vector row_projection;  // h1(k) for the standard error
  std::size_t evaluations = 0;
};

UStatSums ustat_sums(const Predictor& model, const Dataset& data,
                     std::span<const std::size_t> base_rows, const ExecOptions& exec) {
  const std::size_t r = base_rows.size();
  if (r < 2) throw InvalidArgument("U-statistic estimator needs at least 2 base rows");
  if (model.input_dim() != data.n_features()) throw InvalidArgument("model/data dimension mismatch");
  {
    std::unordered_set<std::size_t> seen;
    for (auto k : base_rows) {
      if (k >= data.n_rows()) throw InvalidArgument("base row index out of range");
      if (!seen.insert(k).second) throw InvalidArgument("base rows must be distinct");
    }
  }
  const BatchFn fn = batch_fn_of(model);
  const std::size_t d = data.n_features();
  const Matrix& x = data.features();

  // Square tiles of (base, donor) positions; side depends only on d.
  const std::size_t side = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::sqrt(8192.0 / static_cast<double>(d))), 1, 64);
  const std::size_t tiles_per_axis = block_count(r, side);

  struct Tile {
    Vector feature_sums;
    Vector base_sums;   // c(k, .) over the tile's donors
    Vector donor_sums;  // c(., l) over the tile's bases
  };
  std::vector<Tile> tiles(tiles_per_axis * tiles_per_axis);

  parallel_for_chunks(tiles.size(), exec.threads, [&](std::size_t t) {
    const std::size_t kb = (t / tiles_per_axis) * side;
    const std::size_t lb = (t % tiles_per_axis) * side;
    const std::size_t nk = std::min(side, r - kb);
    const std::size_t nl = std::min(side, r - lb);

    std::size_t n_rows = nk;
    for (std::size_t a = 0; a < nk; ++a)
      for (std::size_t b = 0; b < nl; ++b)
        if (kb + a != lb + b) n_rows += d;

    Matrix batch(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < nk; ++a) batch.row(static_cast<Eigen::Index>(a)) = x.row(static_cast<Eigen::Index>(base_rows[kb + a]));
    Eigen::Index row = static_cast<Eigen::Index>(nk);
    for (std::size_t a = 0; a < nk; ++a) {
      const auto base = static_cast<Eigen::Index>(base_rows[kb + a]);
      for (std::size_t b = 0; b < nl; ++b) {
        if (kb + a == lb + b) continue;
        const auto donor = static_cast<Eigen::Index>(base_rows[lb + b]);
        for (std::size_t i = 0; i < d; ++i, ++row) {
          const auto col = static_cast<Eigen::Index>(i);
          batch.row(row) = x.row(base);
          batch(row, col) = x(donor, col);
        }
      }
    }
    const Matrix out = fn(batch);
    if (!out.allFinite()) throw NumericalError("non-finite model output in U-statistic design");

    Tile tile{Vector::Zero(static_cast<Eigen::Index>(d)), Vector::Zero(static_cast<Eigen::Index>(nk)),
              Vector::Zero(static_cast<Eigen::Index>(nl))};
    row = static_cast<Eigen::Index>(nk);
    for (std::size_t a = 0; a < nk; ++a) {
      const double g_base = out(static_cast<Eigen::Index>(a), 0);
      for (std::size_t b = 0; b < nl; ++b) {
        if (kb + a == lb + b) continue;
        double c = 0.0;
        for (std::size_t i = 0; i < d; ++i, ++row) {
          const double phi = out(row, 0) - g_base;
          tile.feature_sums[static_cast<Eigen::Index>(i)] += phi * phi;
          c += phi * phi;
        }
        tile.base_sums[static_cast<Eigen::Index>(a)] += c;
        tile.donor_sums[static_cast<Eigen::Index>(b)] += c;
      }
    }
    tiles[t] = std::move(tile);
  });

  UStatSums result;
  Vector feature_total = Vector::Zero(static_cast<Eigen::Index>(d));
  Vector as_base = Vector::Zero(static_cast<Eigen::Index>(r));
  Vector as_donor = Vector::Zero(static_cast<Eigen::Index>(r));
  for (std::size_t t = 0; t < tiles.size(); ++t) {
    const std::size_t kb = (t / tiles_per_axis) * side;
    const std::size_t lb = (t % tiles_per_axis) * side;
    feature_total += tiles[t].feature_sums;
    as_base.segment(static_cast<Eigen::Index>(kb), tiles[t].base_sums.size()) += tiles[t].base_sums;
    as_donor.segment(static_cast<Eigen::Index>(lb), tiles[t].donor_sums.size()) += tiles[t].donor_sums;
  }
  const double rr = static_cast<double>(r);
  result.tau = feature_total / (2.0 * rr * (rr - 1.0));
  result.row_projection = (as_base + as_donor) / (4.0 * (rr - 1.0));
  result.evaluations = r * (r - 1) * d + tiles_per_axis * r;
  return result;
}

}  // namespace

Vector estimate_total_indices_ustat(const Predictor& model, const Dataset& data,
                                    std::span<const std::size_t> base_rows, const ExecOptions& exec) {
  return ustat_sums(model, data, base_rows, exec).tau;
}

SensitivityReport estimate_mean_dimension_ustat(const Predictor& model, const Dataset& data,
                                                std::span<const std::size_t> base_rows,
                                                bool assume_independent, const ExecOptions& exec) {
  const OutputMoments mom = checked_moments(model, data, exec);
  const UStatSums sums = ustat_sums(model, data, base_rows, exec);
  SensitivityReport rep;
  rep.tau_hat = sums.tau;
  fill_report_common(rep, data, mom, assume_independent);
  rep.r = base_rows.size();
  rep.estimator_kind = EstimatorKind::UStatistic;
  rep.model_evaluations = sums.evaluations + 2 * data.n_rows();

  const auto& h1 = sums.row_projection;
  const double rr = static_cast<double>(h1.size());
  const double h_mean = sequential_sum(h1) / rr;
  const double h_var = (h1.array() - h_mean).square().sum() / (rr - 1.0);
  const double num_se = 2.0 * std::sqrt(h_var / rr);
  rep.mean_dimension_se =
      ratio_standard_error(num_se, rep.mean_dimension, rep.sigma_y2,
                           variance_standard_error(rep.sigma_y2, mom.fourth_moment[0], data.n_rows()));
  return rep;
}

const QuantityStats& ReplicationSummary::get(std::string_view name) const {
  for (const auto& q : quantities)
    if (q.name == name) return q;
  throw InvalidArgument("replication summary has no quantity '" + std::string(name) + "'");
}

ReplicationSummary replicate(const std::function<NamedValues(std::uint64_t)>& fn, std::size_t m,
                             std::uint64_t seed_base) {
  if (m < 2) throw InvalidArgument("replicate: need m >= 2 for a standard deviation");
  ReplicationSummary summary;
  summary.m = m;
  for (std::size_t rep = 0; rep < m; ++rep) {
    const std::uint64_t seed = seed_base + rep;
    summary.seeds.push_back(seed);
    const NamedValues values = fn(seed);
    if (rep == 0) {
      for (const auto& [name, v] : values) summary.quantities.push_back({name, {}, 0, 0, 0, 0});
    }
    if (values.size() != summary.quantities.size())
      throw InvalidArgument("replicate: closure returned a different set of quantities");
    for (std::size_t q = 0; q < values.size(); ++q) {
      if (values[q].first != summary.quantities[q].name)
        throw InvalidArgument("replicate: closure returned quantities in a different order");
      summary.quantities[q].values.push_back(values[q].second);
    }
  }
  for (auto& q : summary.quantities) {
    double sum = 0.0;
    for (double v : q.values) sum += v;
    q.mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (double v : q.values) ss += (v - q.mean) * (v - q.mean);
    q.stddev = std::sqrt(ss / static_cast<double>(m - 1));
    q.min = *std::min_element(q.values.begin(), q.values.end());
    q.max = *std::max_element(q.values.begin(), q.values.end());
    // Rounding in the mean can step outside [min, max] when all values agree.
    q.mean = std::clamp(q.mean, q.min, q.max);
  }
  return summary;
}

NamedValues report_quantities(const SensitivityReport& report) {
  NamedValues out;
  out.emplace_back("mean_dimension", report.mean_dimension);
  out.emplace_back("sigma_y2", report.sigma_y2);
  for (std::size_t i = 0; i < report.feature_names.size(); ++i)
    out.emplace_back("tau_hat:" + report.feature_names[i], report.tau_hat[static_cast<Eigen::Index>(i)]);
  for (std::size_t i = 0; i < report.feature_names.size(); ++i)
    out.emplace_back("tau_normalized:" + report.feature_names[i],
                     report.tau_normalized[static_cast<Eigen::Index>(i)]);
  return out;
}

std::vector<std::filesystem::path> write_report(const SensitivityReport& report,
                                                const std::filesystem::path& dir) {
  std::string body = csv::join_row({"feature_name", "tau_hat", "tau_normalized"});
  for (std::size_t i = 0; i < report.feature_names.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    body += csv::join_row({report.feature_names[i], csv::format_real(report.tau_hat[idx]),
                           csv::format_real(report.tau_normalized[idx])});
  }
  const auto csv_path = dir / "report.csv";
  csv::write_atomic(csv_path, body);

  nlohmann::json meta;
  meta["quantity"] = report.dependent_features ? "generalized_sum_of_tau_prime" : "mean_dimension";
  meta["index_kind"] = report.dependent_features ? "tau_prime" : "total";
  meta["mean_dimension"] = report.mean_dimension;
  meta["mean_dimension_se"] = report.mean_dimension_se;
  meta["sigma_y2"] = report.sigma_y2;
  meta["sigma_y2_rows"] = report.variance_rows;
  meta["r"] = report.r;
  meta["seed"] = report.seed;
  meta["estimator_kind"] = std::string(to_string(report.estimator_kind));
  meta["dependent_features"] = report.dependent_features;
  meta["bases_with_replacement"] = report.bases_with_replacement;
  meta["plug_in_divisor"] = "2(r-1)";
  meta["u_statistic_divisor"] = "2r(r-1)";
  meta["model_evaluations"] = report.model_evaluations;
  meta["rng"] = Rng::kAlgorithm;
  meta["version"] = version();
  const auto meta_path = dir / "report_meta.json";
  csv::write_atomic(meta_path, meta.dump(2) + "\n");
  return {csv_path, meta_path};
}

std::filesystem::path write_replication_summary(const ReplicationSummary& summary,
                                                const std::filesystem::path& dir) {
  std::string body = csv::join_row({"quantity", "mean", "std", "min", "max", "m"});
  for (const auto& q : summary.quantities) {
    body += csv::join_row({q.name, csv::format_real(q.mean), csv::format_real(q.stddev),
                           csv::format_real(q.min), csv::format_real(q.max), std::to_string(summary.m)});
  }
  const auto path = dir / "replicates.csv";
  csv::write_atomic(path, body);
  return path;
}

}  // namespace meandim
