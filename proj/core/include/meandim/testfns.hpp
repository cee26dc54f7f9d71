#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/data.hpp"
#include "meandim/model.hpp"

namespace meandim {

struct InputDistribution {
  enum class Kind { Uniform, Normal };
  Kind kind = Kind::Uniform;
  double low = 0.0;   // uniform support [low, high)
  double high = 1.0;

  static InputDistribution uniform(double low, double high) { return {Kind::Uniform, low, high}; }
  static InputDistribution standard_normal() { return {Kind::Normal, 0.0, 0.0}; }
};

struct TestFunction {
  std::string name;
  std::size_t dim = 0;
  std::function<double(std::span<const double>)> fn;
  std::vector<InputDistribution> inputs;

  double operator()(std::span<const double> x) const { return fn(x); }
  PredictorPtr as_predictor() const;
};

inline constexpr double kIshigamiA = 7.0;
inline constexpr double kIshigamiB = 0.1;

/// sin x1 + 7 sin^2 x2 + 0.1 x3^4 sin x1.
double ishigami(std::span<const double> x);
double additive3(std::span<const double> x);
double product2(std::span<const double> x);
double constant_one(std::span<const double> x);

/// Closed-form Ishigami variance and mean dimension for a = 7, b = 0.1.
double ishigami_variance();
double ishigami_mean_dimension();

TestFunction ishigami_function();     // uniform [-pi, pi)^3
TestFunction additive3_function();    // uniform [-1, 1)^3
TestFunction product2_function();     // uniform [-1, 1)^2
TestFunction constant_function();     // uniform [-1, 1)^3

/// "ishigami", "additive3", "product2", "constant".
std::vector<std::string> test_function_names();
TestFunction lookup_test_function(std::string_view name);

/// n x len(inputs) independent draws.
Matrix sample_inputs(const std::vector<InputDistribution>& inputs, std::size_t n,
                     std::uint64_t seed);

/// Features x1..xd plus target column y = fn(x).
Dataset gen_dataset(const TestFunction& fn, std::size_t n, std::uint64_t seed);

/// n x d i.i.d. standard normal features named x1..xd, no targets.
Dataset gen_normal_dataset(std::size_t n, std::size_t d, std::uint64_t seed);

struct AnovaEntry {
  std::vector<std::size_t> subset;  // sorted 0-based feature indices
  double sigma2 = 0.0;
};

/// Functional ANOVA variance components of a test function.
struct AnovaTable {
  std::size_t dim = 0;
  double mean = 0.0;
  double variance = 0.0;
  std::vector<AnovaEntry> entries;  // every nonempty subset

  double sobol(std::size_t entry) const { return entries[entry].sigma2 / variance; }
  Vector first_order() const;
  Vector totals() const;
  double mean_dimension() const;
  /// |sum sigma2_u - variance| / variance.
  double decomposition_residual() const;
};

/// Tensor-product quadrature of every effect function g_u = E[g | x_u] minus
/// lower-order effects. Gauss-Legendre for uniform inputs, Gauss-Hermite for
/// normal ones. d <= 4.
AnovaTable brute_force_anova(const TestFunction& fn, std::size_t nodes_per_dim = 32);

std::string anova_to_csv(const AnovaTable& table);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (weights sum to 2).
QuadratureRule gauss_legendre(std::size_t n);
/// n-point Gauss-Hermite rule for the standard normal density (weights sum to 1).
QuadratureRule gauss_hermite_normal(std::size_t n);

}  // namespace meandim
