#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "meandim/train.hpp"

using namespace meandim;

namespace {

Dataset line_data(std::size_t n) {
  Matrix x(static_cast<Eigen::Index>(n), 1);
  Matrix y(static_cast<Eigen::Index>(n), 1);
  Rng rng(17);
  for (std::size_t k = 0; k < n; ++k) {
    x(k, 0) = rng.uniform(-1.0, 1.0);
    y(k, 0) = 2.0 * x(k, 0);
  }
  return Dataset(x, {"x"}, y, {"y"});
}

// Exact copy of the parameters into one flat vector.
std::vector<double*> parameters(MLPModel& m) {
  std::vector<double*> out;
  for (auto& l : m.mutable_layers()) {
    for (Eigen::Index i = 0; i < l.weights.size(); ++i) out.push_back(l.weights.data() + i);
    for (Eigen::Index i = 0; i < l.biases.size(); ++i) out.push_back(l.biases.data() + i);
  }
  return out;
}

std::vector<double> flat_gradients(const Gradients& g) {
  std::vector<double> out;
  for (std::size_t j = 0; j < g.weights.size(); ++j) {
    for (Eigen::Index i = 0; i < g.weights[j].size(); ++i) out.push_back(g.weights[j].data()[i]);
    for (Eigen::Index i = 0; i < g.biases[j].size(); ++i) out.push_back(g.biases[j][i]);
  }
  return out;
}

void gradient_check(Loss loss, const Matrix& x, const Matrix& y) {
  MLPModel m = build_mlp(3, {4}, 2, Activation::TanH, 21);
  Gradients g;
  loss_and_gradients(m, x, y, loss, g);
  const auto analytic = flat_gradients(g);
  auto params = parameters(m);
  REQUIRE(params.size() == analytic.size());
  const double h = 1e-5;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = *params[p];
    *params[p] = saved + h;
    const double up = evaluate_loss(m, x, y, loss);
    *params[p] = saved - h;
    const double down = evaluate_loss(m, x, y, loss);
    *params[p] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[p]), 1e-6});
    INFO("parameter " << p << " analytic " << analytic[p] << " numeric " << numeric);
    CHECK(std::abs(numeric - analytic[p]) / scale < 1e-4);
  }
}

}  // namespace

TEST_CASE("gradient check on a 3-4-2 TanH network") {
  const Matrix x = test::uniform_matrix(6, 3, -2.0, 2.0, 3);
  SUBCASE("MSE") { gradient_check(Loss::MSE, x, test::uniform_matrix(6, 2, -1.0, 1.0, 4)); }
  SUBCASE("cross entropy") {
    Matrix labels(6, 1);
    labels << 0, 1, 1, 0, 1, 0;
    gradient_check(Loss::CrossEntropy, x, labels);
  }
}

TEST_CASE("train fits y = 2x with a single linear layer") {
  const Dataset data = line_data(1000);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 50;
  cfg.optimizer = Optimizer::SGD;
  const auto result = train(build_mlp(1, {}, 1, Activation::Identity, 1), data, cfg);
  CHECK(result.loss_history.size() == 200);
  CHECK(evaluate_loss(result.model, data.features(), data.targets(), Loss::MSE) < 1e-6);
  CHECK(std::abs(result.model.layers()[0].weights(0, 0) - 2.0) < 1e-3);
}

TEST_CASE("zero epochs leaves the model unchanged") {
  const Dataset data = line_data(20);
  const MLPModel init = build_mlp(1, {5}, 1, Activation::ReLU, 8);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.batch_size = 8;
  const auto result = train(init, data, cfg);
  CHECK(result.loss_history.empty());
  CHECK(model_to_json(result.model) == model_to_json(init));
}

TEST_CASE("training is deterministic in the seed") {
  const Dataset data = line_data(200);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.seed = 5;
  const MLPModel init = build_mlp(1, {8}, 1, Activation::TanH, 2);
  const auto a = train(init, data, cfg);
  const auto b = train(init, data, cfg);
  CHECK(model_to_json(a.model) == model_to_json(b.model));
  CHECK(a.loss_history == b.loss_history);

  // Pausing between epochs does not change the trajectory.
  Trainer t(init, data, cfg);
  for (int e = 0; e < 3; ++e) t.run_epoch();
  CHECK(model_to_json(t.model()) == model_to_json(a.model));
}

TEST_CASE("training rejects invalid configurations") {
  const Dataset data = line_data(20);
  const MLPModel init = build_mlp(1, {}, 1, Activation::Identity, 1);
  TrainConfig cfg;
  cfg.batch_size = 50;
  CHECK_THROWS_AS(train(init, data, cfg), InvalidArgument);
  cfg.batch_size = 10;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(init, data, cfg), InvalidArgument);
  cfg.learning_rate = 1e200;
  cfg.optimizer = Optimizer::SGD;
  CHECK_THROWS_AS(train(init, data, cfg), NumericalError);
}

TEST_CASE("split_dataset") {
  const Dataset data = line_data(10);
  const auto s = split_dataset(data, 0.2, 3);
  CHECK(s.train.n_rows() == 8);
  CHECK(s.test.n_rows() == 2);
  const auto again = split_dataset(data, 0.2, 3);
  CHECK(s.train.features() == again.train.features());
}
