#include "meandim/testfns.hpp"

#include <cmath>
#include <numbers>

#include "meandim/rng.hpp"

namespace meandim {

double ishigami(std::span<const double> x) {
  const double s1 = std::sin(x[0]);
  const double s2 = std::sin(x[1]);
  const double x3 = x[2];
  return s1 + kIshigamiA * s2 * s2 + kIshigamiB * x3 * x3 * x3 * x3 * s1;
}

double additive3(std::span<const double> x) { return x[0] + x[1] + x[2]; }
double product2(std::span<const double> x) { return x[0] * x[1]; }
double constant_one(std::span<const double>) { return 1.0; }

namespace {

struct IshigamiParts {
  double v1, v2, v13;
};

IshigamiParts ishigami_parts() {
  constexpr double pi = std::numbers::pi;
  const double pi4 = std::pow(pi, 4);
  const double pi8 = std::pow(pi, 8);
  const double a = kIshigamiA;
  const double b = kIshigamiB;
  const double c = 1.0 + b * pi4 / 5.0;
  return {0.5 * c * c, a * a / 8.0, 8.0 * b * b * pi8 / 225.0};
}

TestFunction make(std::string name, std::size_t dim, double (*fn)(std::span<const double>),
                  InputDistribution dist) {
  return TestFunction{std::move(name), dim, fn, std::vector<InputDistribution>(dim, dist)};
}

}  // namespace

double ishigami_variance() {
  const auto p = ishigami_parts();
  return p.v1 + p.v2 + p.v13;
}

double ishigami_mean_dimension() {
  const auto p = ishigami_parts();
  return (p.v1 + p.v2 + 2.0 * p.v13) / ishigami_variance();
}

PredictorPtr TestFunction::as_predictor() const {
  if (!fn) throw InvalidArgument("test function has no implementation");
  return std::make_shared<FunctionPredictor>(dim, fn);
}

TestFunction ishigami_function() {
  return make("ishigami", 3, ishigami, InputDistribution::uniform(-std::numbers::pi, std::numbers::pi));
}
TestFunction additive3_function() { return make("additive3", 3, additive3, InputDistribution::uniform(-1, 1)); }
TestFunction product2_function() { return make("product2", 2, product2, InputDistribution::uniform(-1, 1)); }
TestFunction constant_function() { return make("constant", 3, constant_one, InputDistribution::uniform(-1, 1)); }

std::vector<std::string> test_function_names() { return {"ishigami", "additive3", "product2", "constant"}; }

TestFunction lookup_test_function(std::string_view name) {
  if (name == "ishigami") return ishigami_function();
  if (name == "additive3") return additive3_function();
  if (name == "product2") return product2_function();
  if (name == "constant") return constant_function();
  std::string valid;
  for (const auto& n : test_function_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw InvalidArgument("unknown function '" + std::string(name) + "' (valid: " + valid + ")");
}

Matrix sample_inputs(const std::vector<InputDistribution>& inputs, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(inputs.size()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const auto& dist = inputs[static_cast<std::size_t>(j)];
      x(r, j) = dist.kind == InputDistribution::Kind::Uniform ? rng.uniform(dist.low, dist.high) : rng.normal();
    }
  }
  return x;
}

namespace {

std::vector<std::string> x_names(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t j = 1; j <= d; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

}  // namespace

Dataset gen_dataset(const TestFunction& fn, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("gen_dataset: n must be at least 1");
  if (n < 2) throw InvalidArgument("gen_dataset: a dataset needs at least 2 rows");
  Matrix x = sample_inputs(fn.inputs, n, seed);
  Matrix y(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    y(r, 0) = fn(std::span<const double>(x.data() + r * x.cols(), fn.dim));
  return Dataset(std::move(x), x_names(fn.dim), std::move(y), {"y"});
}

Dataset gen_normal_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  Matrix x = sample_inputs(std::vector<InputDistribution>(d, InputDistribution::standard_normal()), n, seed);
  return Dataset(std::move(x), x_names(d));
}

}  // namespace meandim
