#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "meandim/analysis.hpp"
#include "meandim/testfns.hpp"

using namespace meandim;

namespace {

double correlation(const Matrix& a, Eigen::Index ca, const Matrix& b, Eigen::Index cb) {
  const double ma = a.col(ca).mean(), mb = b.col(cb).mean();
  const auto da = a.col(ca).array() - ma;
  const auto db = b.col(cb).array() - mb;
  return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

}  // namespace

TEST_CASE("LAMD of a purely linear network is 1 at every stage") {
  const Dataset data = gen_dataset(ishigami_function(), 10001, 1);
  const MLPModel m = build_mlp(3, {20, 10}, 1, Activation::Identity, 4);
  const LamdTable t = lamd(m, data, 10000, 2);
  REQUIRE(t.rows.size() == 5);
  for (const auto& row : t.rows) {
    INFO("layer " << row.layer << " " << to_string(row.stage));
    CHECK(std::abs(row.lamd - 1.0) < 0.02);
  }
}

TEST_CASE("LAMD structure and consistency with the estimator") {
  const auto f = ishigami_function();
  const Dataset data = gen_dataset(f, 3000, 2);
  const auto model = std::make_shared<MLPModel>(build_mlp(3, {12, 6}, 1, Activation::ReLU, 9));
  const LamdTable t = lamd(*model, data, 2000, 5);
  CHECK(t.at(0, Stage::PreActivation).neuron_count == 12);
  CHECK(t.at(0, Stage::PostActivation).neuron_count == 12);
  CHECK(t.at(1, Stage::PreActivation).neuron_count == 6);
  CHECK(t.at(2, Stage::Output).neuron_count == 1);
  CHECK_THROWS_AS(t.at(2, Stage::PreActivation), InvalidArgument);
  for (const auto& row : t.rows)
    if (row.available()) CHECK(row.lamd >= 0.0);
  const auto rep = estimate_mean_dimension(*model, data, 2000, 5, true);
  CHECK(t.at(2, Stage::Output).lamd == rep.mean_dimension);
  CHECK(t.r == 2000);
  CHECK(t.seed == 5);
}

TEST_CASE("LAMD skips degenerate neurons") {
  const Dataset data = gen_dataset(additive3_function(), 500, 3);
  MLPModel m = build_mlp(3, {4}, 1, Activation::ReLU, 1);
  auto& l0 = m.mutable_layers()[0];
  // Neuron 0 is dead after ReLU (always negative); neuron 1 is constant everywhere.
  l0.weights.row(0).setZero();
  l0.biases[0] = -1.0;
  l0.weights.row(1).setZero();
  const LamdTable t = lamd(m, data, 400, 1);
  CHECK(t.at(0, Stage::PreActivation).degenerate_count == 2);
  CHECK(t.at(0, Stage::PostActivation).degenerate_count >= 2);

  for (Eigen::Index j = 0; j < 4; ++j) {
    l0.weights.row(j).setZero();
    l0.biases[j] = -1.0;
  }
  const LamdTable dead = lamd(m, data, 400, 1);
  CHECK_FALSE(dead.at(0, Stage::PostActivation).available());
  CHECK(std::isnan(dead.at(0, Stage::PostActivation).lamd));
  CHECK_FALSE(dead.at(1, Stage::Output).available());
}

TEST_CASE("md_during_training") {
  const Dataset data = gen_dataset(additive3_function(), 1000, 4);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 64;
  cfg.seed = 2;
  CurveOptions opts;
  opts.checkpoint_every = 10;
  opts.r = 999;
  opts.seed = 3;
  const auto curve = md_during_training(build_mlp(3, {16}, 1, Activation::TanH, 1), data, &data, cfg, opts);
  REQUIRE(curve.epochs == std::vector<std::size_t>{10, 20, 30});
  CHECK(curve.mean_dimension.size() == 3);
  CHECK(curve.train_loss.size() == 3);
  CHECK(curve.test_loss.size() == 3);
  for (double md : curve.mean_dimension) CHECK(std::abs(md - 1.0) < 0.05);

  SUBCASE("final epoch is always a checkpoint") {
    cfg.epochs = 25;
    const auto c = md_during_training(build_mlp(3, {4}, 1, Activation::TanH, 1), data, nullptr, cfg, opts);
    CHECK(c.epochs == std::vector<std::size_t>{10, 20, 25});
    for (double v : c.test_loss) CHECK(std::isnan(v));
  }
  SUBCASE("degenerate initial checkpoint is recorded as missing") {
    MLPModel zero = build_mlp(3, {4}, 1, Activation::ReLU, 1);
    for (auto& l : zero.mutable_layers()) {
      l.weights.setZero();
      l.biases.setZero();
    }
    cfg.epochs = 10;
    opts.include_initial = true;
    const auto c = md_during_training(zero, data, nullptr, cfg, opts);
    CHECK(c.epochs.front() == 0);
    CHECK(std::isnan(c.mean_dimension.front()));
  }
  SUBCASE("checkpoint_every must be positive") {
    opts.checkpoint_every = 0;
    CHECK_THROWS_AS(md_during_training(build_mlp(3, {4}, 1, Activation::TanH, 1), data, nullptr, cfg, opts),
                    InvalidArgument);
  }
}

TEST_CASE("tau_prime_heatmap") {
  const ImageShape shape{5, 5, 3};
  const Dataset data = Dataset::from_matrix(test::uniform_matrix(3000, shape.size(), 0.0, 1.0, 6));

  SUBCASE("single pixel model") {
    const std::size_t centre = shape.index(0, 2, 2);
    auto g = std::make_shared<FunctionPredictor>(shape.size(), [centre](std::span<const double> x) {
      return x[centre];
    });
    const Heatmap hm = tau_prime_heatmap(*g, data, shape, 2000, 1);
    REQUIRE(hm.channel_maps.size() == 3);
    for (std::size_t c = 0; c < 3; ++c)
      for (Eigen::Index h = 0; h < 5; ++h)
        for (Eigen::Index w = 0; w < 5; ++w) {
          const bool hot = c == 0 && h == 2 && w == 2;
          if (hot) CHECK(hm.channel_maps[c](h, w) > 0.0);
          else CHECK(hm.channel_maps[c](h, w) == 0.0);
        }
    CHECK(hm.report.dependent_features);
  }
  SUBCASE("mean of all pixels is near-uniform and aggregation is exact") {
    auto g = std::make_shared<FunctionPredictor>(shape.size(), [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v;
      return s / static_cast<double>(x.size());
    });
    const Heatmap hm = tau_prime_heatmap(*g, data, shape, 20000, 2);
    double lo = INFINITY, hi = 0.0;
    for (const auto& m : hm.channel_maps) {
      lo = std::min(lo, m.minCoeff());
      hi = std::max(hi, m.maxCoeff());
    }
    CHECK(hi / lo < 1.5);
    for (Eigen::Index h = 0; h < 5; ++h)
      for (Eigen::Index w = 0; w < 5; ++w) {
        const double mean = (hm.channel_maps[0](h, w) + hm.channel_maps[1](h, w) + hm.channel_maps[2](h, w)) / 3.0;
        CHECK(hm.aggregated(h, w) == mean);
      }
    const auto dir = test::temp_dir("heatmap");
    write_heatmap(hm, dir, true);
    for (const char* name : {"channel_0.csv", "channel_2.csv", "aggregated.csv", "heatmap_meta.json",
                             "channel_1.pgm", "aggregated.pgm"})
      CHECK(std::filesystem::exists(dir / name));
    const std::string pgm = test::slurp(dir / "aggregated.pgm");
    CHECK(pgm.rfind("P5\n5 5\n65535\n", 0) == 0);
    CHECK(pgm.size() == std::string("P5\n5 5\n65535\n").size() + 2 * 25);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(tau_prime_heatmap(*constant_function().as_predictor(),
                                      Dataset::from_matrix(test::uniform_matrix(50, 3, 0, 1, 1)),
                                      ImageShape{1, 3, 1}, 40, 1),
                    DegenerateOutputError);
    auto g = std::make_shared<FunctionPredictor>(shape.size(), [](std::span<const double> x) { return x[0]; });
    CHECK_THROWS_AS(tau_prime_heatmap(*g, data, ImageShape{4, 5, 3}, 100, 1), InvalidArgument);
  }
}

TEST_CASE("augment_with_dummies") {
  const Dataset data = gen_dataset(ishigami_function(), 60000, 1);
  const Dataset aug = augment_with_dummies(data, 7, 3, -M_PI, M_PI);
  CHECK(aug.n_features() == 10);
  CHECK(aug.feature_names()[3] == "dummy_0");
  CHECK(aug.feature_names()[9] == "dummy_6");
  CHECK(aug.features().leftCols(3) == data.features());
  CHECK(aug.targets() == data.targets());
  for (Eigen::Index j = 3; j < 10; ++j) {
    CHECK(aug.features().col(j).minCoeff() >= -M_PI);
    CHECK(aug.features().col(j).maxCoeff() < M_PI);
    CHECK(std::abs(correlation(aug.features(), j, aug.targets(), 0)) < 0.02);
  }
  CHECK(augment_with_dummies(data, 7, 3, -M_PI, M_PI).features() == aug.features());
  CHECK_THROWS_AS(augment_with_dummies(data, 0, 3, -1, 1), InvalidArgument);
}

TEST_CASE("analysis CSV writers") {
  const auto dir = test::temp_dir("analysis_csv");
  const Dataset data = gen_dataset(additive3_function(), 200, 1);
  const LamdTable t = lamd(build_mlp(3, {4}, 1, Activation::TanH, 1), data, 100, 1);
  write_lamd_csv(t, dir / "lamd.csv");
  const std::string lamd_csv = test::slurp(dir / "lamd.csv");
  CHECK(lamd_csv.rfind("layer,stage,lamd,neuron_count,degenerate_count\n0,pre_activation,", 0) == 0);

  TrainingCurve c;
  c.epochs = {0, 10};
  c.mean_dimension = {NAN, 1.5};
  c.train_loss = {2.0, 1.0};
  c.test_loss = {NAN, NAN};
  write_curve_csv(c, dir / "curve.csv");
  CHECK(test::slurp(dir / "curve.csv") == "epoch,mean_dimension,train_loss,test_loss\n0,nan,2,nan\n10,1.5,1,nan\n");
}
