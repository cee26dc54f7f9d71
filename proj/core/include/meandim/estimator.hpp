#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/data.hpp"
#include "meandim/model.hpp"

namespace meandim {

struct ExecOptions {
  /// 0 selects default_thread_count().
  std::size_t threads = 0;
};

/// r x d matrix of finite changes phi_i^{kl} = g(x_i^l; x_~i^k) - g(x^k).
struct FiniteChangeMatrix {
  Matrix values;
  PairIndexList pairs;
  std::string model_id;
  std::string dataset_id;

  std::size_t r() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(values.cols()); }
};

enum class EstimatorKind { PlugIn, UStatistic };
std::string_view to_string(EstimatorKind kind);

struct SensitivityReport {
  std::vector<std::string> feature_names;
  /// Total indices (tau' when dependent_features is set), squared output units.
  Vector tau_hat;
  /// tau_hat / sigma_y2.
  Vector tau_normalized;
  /// Sum of tau_hat (in feature order) over sigma_y2. A mean dimension only for independent
  /// features; otherwise the generalized sum of tau' indices.
  double mean_dimension = 0.0;
  /// Delta-method standard error of mean_dimension.
  double mean_dimension_se = 0.0;
  double sigma_y2 = 0.0;
  std::size_t r = 0;
  std::uint64_t seed = 0;
  EstimatorKind estimator_kind = EstimatorKind::PlugIn;
  bool dependent_features = false;
  bool bases_with_replacement = false;
  /// Rows used for sigma_y2 (always the whole dataset).
  std::size_t variance_rows = 0;
  std::size_t model_evaluations = 0;
};

/// g(make_replacement(base, donor, i)) - g(base) for a scalar predictor.
double finite_change(const Predictor& model, std::span<const double> base,
                     std::span<const double> donor, std::size_t i);

/// Evaluates r (d + 1) points: one base and d replacements per pair.
FiniteChangeMatrix compute_finite_changes(const Predictor& model, const Dataset& data,
                                          const PairIndexList& pairs,
                                          const ExecOptions& exec = {});

/// Plug-in totals: sum_k phi_ki^2 / (2 (r - 1)).
Vector estimate_total_indices(const FiniteChangeMatrix& changes);

/// Unbiased sample variance of model outputs over all dataset rows. Throws
/// DegenerateOutputError when variance <= 1e-12 mean^2 + 1e-300.
double estimate_output_variance(const Predictor& model, const Dataset& data,
                                const ExecOptions& exec = {});

SensitivityReport estimate_mean_dimension(const Predictor& model, const Dataset& data,
                                          std::size_t r, std::uint64_t seed,
                                          bool assume_independent,
                                          const ExecOptions& exec = {});

/// Degree-2 U-statistic totals over all ordered pairs of base_rows:
/// sum_{l} sum_{k != l} (g(x_i^l; x_~i^k) - g(x^k))^2 / (2 r (r - 1)).
/// Costs r (r - 1) d replaced evaluations.
Vector estimate_total_indices_ustat(const Predictor& model, const Dataset& data,
                                    std::span<const std::size_t> base_rows,
                                    const ExecOptions& exec = {});

SensitivityReport estimate_mean_dimension_ustat(const Predictor& model, const Dataset& data,
                                                std::span<const std::size_t> base_rows,
                                                bool assume_independent = true,
                                                const ExecOptions& exec = {});

/// r distinct rows (r <= N) drawn by seed; the base rows of sample_pairs.
std::vector<std::size_t> sample_base_rows(std::size_t n_rows, std::size_t r, std::uint64_t seed);

// Multi-output building blocks shared with the layer analysis. A batch
// function maps n x d inputs to n x s outputs.
using BatchFn = std::function<Matrix(const Matrix&)>;

/// d x s matrix of sum_k phi^2 per (feature, output), reduced in fixed pair
/// blocks. estimate_total_indices uses the identical reduction.
Matrix sum_squared_changes(const BatchFn& fn, std::size_t n_outputs, const Dataset& data,
                           const PairIndexList& pairs, const ExecOptions& exec = {});

struct OutputMoments {
  Vector mean;
  Vector variance;       // divisor N - 1
  Vector fourth_moment;  // central, divisor N
};

OutputMoments output_moments(const BatchFn& fn, std::size_t n_outputs, const Dataset& data,
                             const ExecOptions& exec = {});

bool is_degenerate_variance(double variance, double mean);

struct QuantityStats {
  std::string name;
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct ReplicationSummary {
  std::size_t m = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<QuantityStats> quantities;

  const QuantityStats& get(std::string_view name) const;
};

using NamedValues = std::vector<std::pair<std::string, double>>;

/// Runs fn with seeds seed_base .. seed_base + m - 1 and summarizes every
/// named quantity (mean, sample std with divisor m - 1, min, max). m >= 2.
ReplicationSummary replicate(const std::function<NamedValues(std::uint64_t)>& fn, std::size_t m,
                             std::uint64_t seed_base);

/// Quantities: mean_dimension, sigma_y2, tau_hat:<name>, tau_normalized:<name>.
NamedValues report_quantities(const SensitivityReport& report);

/// report.csv (feature_name,tau_hat,tau_normalized) and report_meta.json.
std::vector<std::filesystem::path> write_report(const SensitivityReport& report,
                                                const std::filesystem::path& dir);

/// replicates.csv: one row per quantity with mean, std, min, max, m.
std::filesystem::path write_replication_summary(const ReplicationSummary& summary,
                                                const std::filesystem::path& dir);

}  // namespace meandim
