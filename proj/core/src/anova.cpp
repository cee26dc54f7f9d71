#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "meandim/csv.hpp"
#include "meandim/testfns.hpp"

namespace meandim {
namespace {

// Neumaier-compensated accumulator; variance components span many orders of
// magnitude.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) carry += (sum - t) + v;
    else carry += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

std::vector<std::size_t> subset_dims(unsigned mask, std::size_t d) {
  std::vector<std::size_t> dims;
  for (std::size_t j = 0; j < d; ++j)
    if (mask & (1u << j)) dims.push_back(j);
  return dims;
}

// Index into a subset tensor from full-grid digits.
std::size_t sub_index(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& digits,
                      std::size_t n) {
  std::size_t idx = 0;
  for (auto j : dims) idx = idx * n + digits[j];
  return idx;
}

}  // namespace

Vector AnovaTable::first_order() const {
  Vector s = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& e : entries)
    if (e.subset.size() == 1) s[static_cast<Eigen::Index>(e.subset[0])] = e.sigma2;
  return s;
}

Vector AnovaTable::totals() const {
  Vector t = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& e : entries)
    for (auto j : e.subset) t[static_cast<Eigen::Index>(j)] += e.sigma2;
  return t;
}

double AnovaTable::mean_dimension() const {
  if (!(variance > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  CompensatedSum acc;
  for (const auto& e : entries) acc.add(static_cast<double>(e.subset.size()) * e.sigma2);
  return acc.value() / variance;
}

double AnovaTable::decomposition_residual() const {
  CompensatedSum acc;
  for (const auto& e : entries) acc.add(e.sigma2);
  const double diff = std::abs(acc.value() - variance);
  if (variance > 0.0) return diff / variance;
  return diff;
}

AnovaTable brute_force_anova(const TestFunction& fn, std::size_t nodes_per_dim) {
  const std::size_t d = fn.dim;
  if (d == 0 || d > 4) throw InvalidArgument("brute_force_anova supports 1 <= d <= 4");
  if (nodes_per_dim < 2) throw InvalidArgument("brute_force_anova: need at least 2 nodes per dimension");
  const std::size_t n = nodes_per_dim;

  // Per-dimension nodes and probability weights.
  std::vector<QuadratureRule> rules;
  const QuadratureRule legendre = gauss_legendre(n);
  const QuadratureRule hermite = gauss_hermite_normal(n);
  for (const auto& dist : fn.inputs) {
    if (dist.kind == InputDistribution::Kind::Normal) {
      rules.push_back(hermite);
      continue;
    }
    QuadratureRule r;
    const double mid = 0.5 * (dist.low + dist.high);
    const double half = 0.5 * (dist.high - dist.low);
    for (std::size_t i = 0; i < n; ++i) {
      r.nodes.push_back(mid + half * legendre.nodes[i]);
      r.weights.push_back(0.5 * legendre.weights[i]);
    }
    rules.push_back(std::move(r));
  }

  std::size_t grid = 1;
  for (std::size_t j = 0; j < d; ++j) grid *= n;
  const unsigned n_masks = 1u << d;

  // Conditional expectations E[g | x_u] on u's sub-grid, for every u
  // (mask 0 is the overall mean).
  std::vector<std::vector<CompensatedSum>> cond(n_masks);
  std::vector<std::vector<std::size_t>> dims(n_masks);
  for (unsigned mask = 0; mask < n_masks; ++mask) {
    dims[mask] = subset_dims(mask, d);
    std::size_t size = 1;
    for (std::size_t k = 0; k < dims[mask].size(); ++k) size *= n;
    cond[mask].resize(size);
  }

  CompensatedSum second_moment;
  std::vector<std::size_t> digits(d, 0);
  std::vector<double> x(d);
  for (std::size_t flat = 0; flat < grid; ++flat) {
    std::size_t rem = flat;
    for (std::size_t j = d; j-- > 0;) {
      digits[j] = rem % n;
      rem /= n;
    }
    for (std::size_t j = 0; j < d; ++j) x[j] = rules[j].nodes[digits[j]];
    const double g = fn(x);
    if (!std::isfinite(g)) throw NumericalError("brute_force_anova: non-finite function value");
    double w_all = 1.0;
    for (std::size_t j = 0; j < d; ++j) w_all *= rules[j].weights[digits[j]];
    second_moment.add(w_all * g * g);
    for (unsigned mask = 0; mask < n_masks; ++mask) {
      // Weight of the integrated-out coordinates only.
      double w = 1.0;
      for (std::size_t j = 0; j < d; ++j)
        if (!(mask & (1u << j))) w *= rules[j].weights[digits[j]];
      cond[mask][sub_index(dims[mask], digits, n)].add(w * g);
    }
  }

  // g_u = E[g | x_u] - sum over proper subsets v of g_v, built by increasing |u|.
  std::vector<std::vector<double>> effect(n_masks);
  for (unsigned mask = 0; mask < n_masks; ++mask) {
    effect[mask].resize(cond[mask].size());
    for (std::size_t k = 0; k < cond[mask].size(); ++k) effect[mask][k] = cond[mask][k].value();
  }
  std::vector<unsigned> order;
  for (int pc = 1; pc <= static_cast<int>(d); ++pc)
    for (unsigned mask = 1; mask < n_masks; ++mask)
      if (std::popcount(mask) == pc) order.push_back(mask);

  AnovaTable table;
  table.dim = d;
  table.mean = effect[0][0];
  table.variance = second_moment.value() - table.mean * table.mean;

  for (unsigned mask : order) {
    const auto& du = dims[mask];
    const std::size_t size = effect[mask].size();
    std::vector<std::size_t> sub_digits(d, 0);
    CompensatedSum var;
    for (std::size_t k = 0; k < size; ++k) {
      std::size_t rem = k;
      for (std::size_t p = du.size(); p-- > 0;) {
        sub_digits[du[p]] = rem % n;
        rem /= n;
      }
      double v = effect[mask][k];
      for (unsigned sub = (mask - 1) & mask;; sub = (sub - 1) & mask) {
        v -= effect[sub][sub_index(dims[sub], sub_digits, n)];
        if (sub == 0) break;
      }
      effect[mask][k] = v;
      double w = 1.0;
      for (auto j : du) w *= rules[j].weights[sub_digits[j]];
      var.add(w * v * v);
    }
    table.entries.push_back({du, var.value()});
  }

  if (table.variance > 0.0 && table.decomposition_residual() > 1e-6) {
    std::ostringstream os;
    os << "brute_force_anova: variance decomposition residual " << table.decomposition_residual()
       << " exceeds 1e-6; increase nodes_per_dim";
    throw NumericalError(os.str());
  }
  return table;
}

std::string anova_to_csv(const AnovaTable& table) {
  std::string body = csv::join_row({"subset", "sigma2_u", "S_u"});
  for (std::size_t e = 0; e < table.entries.size(); ++e) {
    std::string subset;
    for (auto j : table.entries[e].subset) subset += (subset.empty() ? "" : " ") + std::to_string(j + 1);
    const double s = table.variance > 0.0 ? table.sobol(e) : std::numeric_limits<double>::quiet_NaN();
    body += csv::join_row({subset, csv::format_real(table.entries[e].sigma2),
                           std::isnan(s) ? "nan" : csv::format_real(s)});
  }
  return body;
}

}  // namespace meandim
