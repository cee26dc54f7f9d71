#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "helpers.hpp"
#include "meandim/analysis.hpp"
#include "meandim/estimator.hpp"
#include "meandim/pca.hpp"
#include "meandim/testfns.hpp"
#include "meandim/train.hpp"

using namespace meandim;

namespace {

constexpr int kCases = 25;

// Scalar predictor a * g + b.
class Affine final : public Predictor {
 public:
  Affine(PredictorPtr g, double a, double b) : g_(std::move(g)), a_(a), b_(b) {}
  std::size_t input_dim() const override { return g_->input_dim(); }
  std::size_t output_dim() const override { return 1; }
  Matrix evaluate_batch(const Matrix& x) const override {
    return ((a_ * g_->evaluate_batch(x).array()) + b_).matrix();
  }

 private:
  PredictorPtr g_;
  double a_, b_;
};

// Reorders inputs before calling g: evaluates g(x[perm]).
class Permuted final : public Predictor {
 public:
  Permuted(PredictorPtr g, std::vector<std::size_t> perm) : g_(std::move(g)), perm_(std::move(perm)) {}
  std::size_t input_dim() const override { return g_->input_dim(); }
  std::size_t output_dim() const override { return 1; }
  Matrix evaluate_batch(const Matrix& x) const override {
    Matrix y(x.rows(), x.cols());
    for (std::size_t j = 0; j < perm_.size(); ++j)
      y.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(perm_[j]));
    return g_->evaluate_batch(y);
  }

 private:
  PredictorPtr g_;
  std::vector<std::size_t> perm_;
};

// Left-to-right sum, the order the report uses.
double ordered_sum(const Vector& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += v[i];
  return s;
}

std::shared_ptr<MLPModel> ignoring(MLPModel m, std::size_t feature) {
  m.mutable_layers().front().weights.col(static_cast<Eigen::Index>(feature)).setZero();
  return std::make_shared<MLPModel>(std::move(m));
}

}  // namespace

TEST_CASE("property: sample_pairs") {
  test::Gen gen(1);
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = gen.size(2, 60);
    const std::size_t r = gen.size(1, 2 * n);
    const auto p = sample_pairs(n, r, gen.seed());
    REQUIRE(p.size() == r);
    CHECK(p.bases_with_replacement == (r > n));
    std::vector<int> base_count(n, 0);
    for (const auto& pr : p.pairs) {
      CHECK(pr.base < n);
      CHECK(pr.donor < n);
      CHECK(pr.base != pr.donor);
      ++base_count[pr.base];
    }
    if (r <= n)
      for (int k : base_count) CHECK(k <= 1);
  }
}

TEST_CASE("property: make_replacement changes exactly one coordinate") {
  test::Gen gen(2);
  for (int c = 0; c < 100; ++c) {
    const std::size_t d = gen.size(1, 8);
    std::vector<double> a(d), b(d);
    for (std::size_t j = 0; j < d; ++j) {
      a[j] = gen.real(-5, 5);
      b[j] = gen.real(-5, 5);
    }
    const std::size_t i = gen.size(0, d - 1);
    const auto x = make_replacement(a, b, i);
    for (std::size_t j = 0; j < d; ++j) CHECK(x[j] == (j == i ? b[j] : a[j]));
  }
}

TEST_CASE("property: non-negativity and internal consistency") {
  test::Gen gen(3);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t d = gen.size(1, 6);
    const Dataset data = gen.dataset(gen.size(20, 120), d);
    const auto m = std::make_shared<MLPModel>(gen.mlp(d));
    const std::size_t r = gen.size(2, 2 * data.n_rows());
    SensitivityReport rep;
    try {
      rep = estimate_mean_dimension(*m, data, r, gen.seed(), true);
    } catch (const DegenerateOutputError&) {
      continue;
    }
    CHECK(rep.tau_hat.minCoeff() >= 0.0);
    CHECK(rep.mean_dimension == ordered_sum(rep.tau_hat) / rep.sigma_y2);
    CHECK(rep.sigma_y2 > 0.0);
    for (Eigen::Index i = 0; i < rep.tau_hat.size(); ++i)
      CHECK(rep.tau_normalized[i] == rep.tau_hat[i] / rep.sigma_y2);

    const auto rows = sample_base_rows(data.n_rows(), gen.size(2, std::min<std::size_t>(40, data.n_rows())), gen.seed());
    const auto u = estimate_mean_dimension_ustat(*m, data, rows);
    CHECK(u.tau_hat.minCoeff() >= 0.0);
    CHECK(u.mean_dimension == ordered_sum(u.tau_hat) / u.sigma_y2);
  }
}

TEST_CASE("property: zero-independence is exact for both estimators") {
  test::Gen gen(4);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t d = gen.size(2, 6);
    const Dataset data = gen.dataset(gen.size(20, 100), d);
    const std::size_t ignored = gen.size(0, d - 1);
    const auto m = ignoring(gen.mlp(d), ignored);
    const auto fc = compute_finite_changes(*m, data, sample_pairs(data, gen.size(2, 150), gen.seed()));
    CHECK(fc.values.col(static_cast<Eigen::Index>(ignored)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(estimate_total_indices(fc)[static_cast<Eigen::Index>(ignored)] == 0.0);
    const auto rows = sample_base_rows(data.n_rows(), gen.size(2, 20), gen.seed());
    CHECK(estimate_total_indices_ustat(*m, data, rows)[static_cast<Eigen::Index>(ignored)] == 0.0);
  }
}

TEST_CASE("property: affine output transformations leave D unchanged") {
  test::Gen gen(5);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t d = gen.size(1, 5);
    const Dataset data = gen.dataset(gen.size(30, 150), d);
    const PredictorPtr m = std::make_shared<MLPModel>(build_mlp(d, gen.hidden(), 1, Activation::TanH, gen.seed()));
    const double a = (gen.real(0, 1) < 0.5 ? -1.0 : 1.0) * std::pow(2.0, gen.real(-4, 4));
    const double b = gen.real(-3, 3);
    const Affine g(m, a, b);
    const std::size_t r = gen.size(2, 200);
    const std::uint64_t seed = gen.seed();
    const auto base = estimate_mean_dimension(*m, data, r, seed, true);
    const auto moved = estimate_mean_dimension(g, data, r, seed, true);
    CHECK(test::rel_diff(base.mean_dimension, moved.mean_dimension) <= 1e-12);
    CHECK(test::rel_diff(moved.sigma_y2, a * a * base.sigma_y2) <= 1e-12);
    for (Eigen::Index i = 0; i < base.tau_hat.size(); ++i)
      CHECK(std::abs(moved.tau_hat[i] - a * a * base.tau_hat[i]) <= 1e-12 * a * a * base.tau_hat.sum());
  }
}

TEST_CASE("property: feature permutation permutes the totals") {
  test::Gen gen(6);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t d = gen.size(2, 5);
    const Dataset data = gen.dataset(gen.size(30, 100), d);
    const PredictorPtr m = std::make_shared<MLPModel>(gen.mlp(d));
    const auto perm = gen.permutation(d);
    // Column j of the permuted data is column perm[j] of the original; the
    // model reads it back through the inverse permutation.
    std::vector<std::size_t> inv(d);
    for (std::size_t j = 0; j < d; ++j) inv[perm[j]] = j;
    Matrix pf(data.features().rows(), data.features().cols());
    for (std::size_t j = 0; j < d; ++j)
      pf.col(static_cast<Eigen::Index>(j)) = data.features().col(static_cast<Eigen::Index>(perm[j]));
    const Dataset pdata = Dataset::from_matrix(pf);
    const Permuted pm(m, inv);
    const auto pairs = sample_pairs(data, gen.size(2, 100), gen.seed());
    Vector a, b;
    try {
      a = estimate_total_indices(compute_finite_changes(*m, data, pairs));
      b = estimate_total_indices(compute_finite_changes(pm, pdata, pairs));
    } catch (const DegenerateOutputError&) {
      continue;
    }
    for (std::size_t j = 0; j < d; ++j)
      CHECK(b[static_cast<Eigen::Index>(j)] == a[static_cast<Eigen::Index>(perm[j])]);
  }
}

TEST_CASE("property: U-statistic is invariant to base row order") {
  test::Gen gen(7);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t d = gen.size(1, 4);
    const Dataset data = gen.dataset(gen.size(10, 80), d);
    const auto m = std::make_shared<MLPModel>(gen.mlp(d));
    auto rows = sample_base_rows(data.n_rows(), gen.size(2, std::min<std::size_t>(30, data.n_rows())), gen.seed());
    const Vector a = estimate_total_indices_ustat(*m, data, rows);
    const auto perm = gen.permutation(rows.size());
    std::vector<std::size_t> shuffled(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) shuffled[k] = rows[perm[k]];
    const Vector b = estimate_total_indices_ustat(*m, data, shuffled);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(a[i])));
  }
}

TEST_CASE("property: results do not depend on the thread count") {
  test::Gen gen(8);
  for (int c = 0; c < 8; ++c) {
    const std::size_t d = gen.size(1, 6);
    const Dataset data = gen.dataset(gen.size(300, 1500), d);
    const auto m = std::make_shared<MLPModel>(gen.mlp(d));
    const std::size_t r = gen.size(500, 3000);
    const std::uint64_t seed = gen.seed();
    SensitivityReport one, many;
    try {
      one = estimate_mean_dimension(*m, data, r, seed, true, ExecOptions{1});
    } catch (const DegenerateOutputError&) {
      continue;
    }
    many = estimate_mean_dimension(*m, data, r, seed, true, ExecOptions{7});
    CHECK(one.tau_hat == many.tau_hat);
    CHECK(one.sigma_y2 == many.sigma_y2);
    CHECK(one.mean_dimension_se == many.mean_dimension_se);

    const LamdTable l1 = lamd(*m, data, 400, seed, ExecOptions{1});
    const LamdTable l4 = lamd(*m, data, 400, seed, ExecOptions{4});
    for (std::size_t k = 0; k < l1.rows.size(); ++k)
      CHECK(std::bit_cast<std::uint64_t>(l1.rows[k].lamd) == std::bit_cast<std::uint64_t>(l4.rows[k].lamd));

    const auto rows = sample_base_rows(data.n_rows(), 60, seed);
    CHECK(estimate_total_indices_ustat(*m, data, rows, ExecOptions{1}) ==
          estimate_total_indices_ustat(*m, data, rows, ExecOptions{5}));
  }
}

TEST_CASE("property: output-stage LAMD equals the estimator and averages are non-negative") {
  test::Gen gen(9);
  for (int c = 0; c < 10; ++c) {
    const std::size_t d = gen.size(1, 5);
    const Dataset data = gen.dataset(gen.size(50, 300), d);
    const MLPModel m = gen.mlp(d);
    const std::size_t r = gen.size(2, 300);
    const std::uint64_t seed = gen.seed();
    const LamdTable t = lamd(m, data, r, seed);
    std::size_t expected_rows = 0;
    for (std::size_t j = 0; j < m.layers().size(); ++j) {
      const bool last = j + 1 == m.layers().size();
      expected_rows += last ? 1 : 2;
      if (!last) CHECK(t.at(j, Stage::PreActivation).neuron_count == m.layers()[j].out_dim());
    }
    CHECK(t.rows.size() == expected_rows);
    for (const auto& row : t.rows)
      if (row.available()) CHECK(row.lamd >= 0.0);
    const auto& out = t.at(m.layers().size() - 1, Stage::Output);
    if (out.available()) CHECK(out.lamd == estimate_mean_dimension(m, data, r, seed, true).mean_dimension);
  }
}

TEST_CASE("property: heatmap aggregation identity and bijective reshape") {
  test::Gen gen(10);
  for (int c = 0; c < 15; ++c) {
    const ImageShape shape{gen.size(1, 4), gen.size(1, 4), gen.size(1, 3)};
    const Dataset data = gen.dataset(gen.size(30, 100), shape.size());
    const auto m = std::make_shared<MLPModel>(build_mlp(shape.size(), {6}, 1, Activation::TanH, gen.seed()));
    const Heatmap hm = tau_prime_heatmap(*m, data, shape, gen.size(2, 200), gen.seed());
    std::size_t cells = 0;
    for (std::size_t ch = 0; ch < shape.channels; ++ch) {
      cells += static_cast<std::size_t>(hm.channel_maps[ch].size());
      for (std::size_t h = 0; h < shape.height; ++h)
        for (std::size_t w = 0; w < shape.width; ++w)
          CHECK(hm.channel_maps[ch](static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w)) ==
                hm.report.tau_hat[static_cast<Eigen::Index>(shape.index(ch, h, w))]);
    }
    CHECK(cells == shape.size());
    for (std::size_t h = 0; h < shape.height; ++h)
      for (std::size_t w = 0; w < shape.width; ++w) {
        double s = 0.0;
        for (std::size_t ch = 0; ch < shape.channels; ++ch)
          s += hm.channel_maps[ch](static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w));
        CHECK(hm.aggregated(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w)) ==
              s / static_cast<double>(shape.channels));
        CHECK(hm.aggregated(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w)) >= 0.0);
      }
  }
}

TEST_CASE("property: PCA round trip and wrapped-model equality") {
  test::Gen gen(11);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t d = gen.size(1, 6);
    Dataset raw = gen.dataset(gen.size(d + 5, 200), d);
    // Mix the columns so the covariance is not diagonal.
    Matrix mix = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (Eigen::Index a = 0; a < mix.rows(); ++a)
      for (Eigen::Index b = 0; b < a; ++b) mix(a, b) = gen.real(-1, 1);
    const Dataset data = Dataset::from_matrix(raw.features() * mix.transpose());
    const bool whiten = gen.real(0, 1) < 0.5;
    const PCAModel p = fit_pca(data, whiten);
    CHECK((p.rotation.transpose() * p.rotation - Matrix::Identity(p.rotation.rows(), p.rotation.cols()))
              .cwiseAbs()
              .maxCoeff() < 1e-8);
    for (Eigen::Index j = 1; j < p.eigenvalues.size(); ++j) CHECK(p.eigenvalues[j] <= p.eigenvalues[j - 1]);
    const double xscale = data.features().cwiseAbs().maxCoeff();
    for (std::size_t k = 0; k < data.n_rows(); ++k) {
      const auto x = data.row(k);
      const auto back = inverse_transform(p, transform(p, x));
      for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(back[j] - x[j]) <= 1e-10 * std::max(1.0, xscale));
    }
    const auto m = std::make_shared<MLPModel>(gen.mlp(d));
    const auto wrapped = wrap_with_inverse_pca(m, p);
    const Matrix direct = m->evaluate_batch(data.features());
    const Matrix via = wrapped->evaluate_batch(transform_rows(p, data.features()));
    for (Eigen::Index k = 0; k < direct.rows(); ++k) CHECK(test::rel_diff(direct(k, 0), via(k, 0)) <= 1e-9);
  }
}

TEST_CASE("property: backpropagation matches central differences") {
  test::Gen gen(12);
  for (int c = 0; c < 5; ++c) {
    MLPModel m = build_mlp(3, {4}, 2, Activation::TanH, gen.seed());
    Matrix x(5, 3), y(5, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gen.real(-2, 2);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = gen.real(-1, 1);
    Gradients g;
    loss_and_gradients(m, x, y, Loss::MSE, g);
    const double h = 1e-5;
    for (std::size_t l = 0; l < m.layers().size(); ++l) {
      auto& W = m.mutable_layers()[l].weights;
      for (Eigen::Index i = 0; i < W.size(); ++i) {
        const double saved = W.data()[i];
        W.data()[i] = saved + h;
        const double up = evaluate_loss(m, x, y, Loss::MSE);
        W.data()[i] = saved - h;
        const double down = evaluate_loss(m, x, y, Loss::MSE);
        W.data()[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double analytic = g.weights[l].data()[i];
        CHECK(std::abs(numeric - analytic) <= 1e-4 * std::max({std::abs(numeric), std::abs(analytic), 1e-6}));
      }
    }
  }
}

TEST_CASE("property: replication summaries are ordered") {
  test::Gen gen(13);
  for (int c = 0; c < 50; ++c) {
    const std::size_t m = gen.size(2, 10);
    std::vector<double> vals(m);
    for (auto& v : vals) v = gen.real(-100, 100);
    const auto s = replicate([&](std::uint64_t seed) { return NamedValues{{"v", vals[seed]}}; }, m, 0);
    const auto& q = s.get("v");
    CHECK(q.stddev >= 0.0);
    CHECK(q.mean >= q.min);
    CHECK(q.mean <= q.max);
    CHECK(q.values == vals);
  }
}
