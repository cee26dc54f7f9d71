#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "meandim/pca.hpp"
#include "meandim/testfns.hpp"

using namespace meandim;

namespace {

// Four points whose sample covariance is exactly [[2, 1], [1, 2]].
Dataset covariance_21() {
  const double t = std::sqrt(0.75);
  Matrix f(4, 2);
  f << 1.5, 1.5, -1.5, -1.5, t, -t, -t, t;
  return Dataset::from_matrix(f);
}

Dataset correlated(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix f(static_cast<Eigen::Index>(n), 3);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = rng.normal(), b = rng.normal(), c = rng.normal();
    f(k, 0) = 2.0 + a;
    f(k, 1) = -1.0 + 0.8 * a + 0.3 * b;
    f(k, 2) = 0.5 * a - 0.2 * b + 2.0 * c;
  }
  return Dataset::from_matrix(f);
}

}  // namespace

TEST_CASE("fit_pca closed-form 2x2 case") {
  const PCAModel p = fit_pca(covariance_21());
  CHECK(p.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(p.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(p.rotation(0, 0)) - s) < 1e-12);
  CHECK(std::abs(p.rotation(0, 0) - p.rotation(1, 0)) < 1e-12);
  CHECK(std::abs(p.rotation(0, 1) + p.rotation(1, 1)) < 1e-12);
  CHECK(p.rotation(0, 0) > 0.0);
}

TEST_CASE("fit_pca on uncorrelated data") {
  Matrix f(4, 2);
  f << 3, 1, -3, 1, 3, -1, -3, -1;
  const PCAModel p = fit_pca(Dataset::from_matrix(f));
  CHECK(p.eigenvalues[0] == doctest::Approx(12.0));
  CHECK(p.eigenvalues[1] == doctest::Approx(4.0 / 3.0));
  CHECK((p.rotation.cwiseAbs() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("constant column gives a zero eigenvalue") {
  Matrix f(5, 2);
  f << 1, 7, 2, 7, 3, 7, 4, 7, 5, 7;
  const PCAModel p = fit_pca(Dataset::from_matrix(f), true);
  CHECK(p.eigenvalues[1] == 0.0);
  const auto z = transform(p, std::vector<double>{3, 7});
  CHECK(z[1] == 0.0);
}

TEST_CASE("PCAModel invariants on fitted data") {
  for (bool whiten : {false, true}) {
    const Dataset d = correlated(2000, 4);
    const PCAModel p = fit_pca(d, whiten);
    const Matrix vtv = p.rotation.transpose() * p.rotation;
    CHECK((vtv - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
    for (Eigen::Index j = 1; j < 3; ++j) CHECK(p.eigenvalues[j] <= p.eigenvalues[j - 1]);
    CHECK(p.eigenvalues.minCoeff() >= 0.0);

    Vector mean;
    const Matrix cov = sample_covariance(transform_rows(p, d.features()), &mean);
    CHECK(mean.cwiseAbs().maxCoeff() < 1e-8);
    for (Eigen::Index a = 0; a < 3; ++a)
      for (Eigen::Index b = 0; b < 3; ++b)
        if (a != b) CHECK(std::abs(cov(a, b)) < 1e-6 * p.eigenvalues[0]);

    // Eigen-residual.
    const Matrix c = sample_covariance(d.features());
    for (Eigen::Index j = 0; j < 3; ++j) {
      const Vector v = p.rotation.col(j);
      CHECK((c * v - p.eigenvalues[j] * v).norm() / c.norm() < 1e-10);
    }
  }
}

TEST_CASE("transform and inverse_transform") {
  const Dataset d = correlated(500, 9);
  for (bool whiten : {false, true}) {
    const PCAModel p = fit_pca(d, whiten);
    std::vector<double> mu(p.mean.data(), p.mean.data() + 3);
    const auto z0 = transform(p, mu);
    for (double v : z0) CHECK(std::abs(v) < 1e-12);
    const auto back = inverse_transform(p, std::vector<double>{0, 0, 0});
    for (std::size_t j = 0; j < 3; ++j) CHECK(back[j] == doctest::Approx(mu[j]));
    for (std::size_t k = 0; k < d.n_rows(); ++k) {
      const auto x = d.row(k);
      const auto rt = inverse_transform(p, transform(p, x));
      for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(rt[j] - x[j]) < 1e-10);
    }
    // Basis vector maps to mean plus (scaled) column.
    const auto e1 = inverse_transform(p, std::vector<double>{0, 1, 0});
    const double scale = whiten ? std::sqrt(p.eigenvalues[1]) : 1.0;
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(e1[j] == doctest::Approx(mu[j] + scale * p.rotation(j, 1)).epsilon(1e-12));
  }
  const PCAModel p = fit_pca(d);
  CHECK_THROWS_AS(transform(p, std::vector<double>{1, 2}), InvalidArgument);
  CHECK_THROWS_AS(inverse_transform(p, std::vector<double>{1, 2, 3, 4}), InvalidArgument);
}

TEST_CASE("identity PCA leaves x - mu") {
  PCAModel p;
  p.mean = Vector::Zero(2);
  p.rotation = Matrix::Identity(2, 2);
  p.eigenvalues = Vector::Ones(2);
  const auto z = transform(p, std::vector<double>{4, -5});
  CHECK(z == std::vector<double>{4, -5});
  auto fn = std::make_shared<FunctionPredictor>(2, [](std::span<const double> x) { return x[0] * x[1] + x[0]; });
  const auto wrapped = wrap_with_inverse_pca(fn, p);
  CHECK(wrapped->evaluate(std::vector<double>{2, 3})[0] == 8.0);
}

TEST_CASE("wrapped linear model has coefficients V^T w") {
  const Dataset d = correlated(300, 2);
  const PCAModel p = fit_pca(d);
  const std::vector<double> w{1.5, -2.0, 0.25};
  auto lin = std::make_shared<FunctionPredictor>(3, [w](std::span<const double> x) {
    return w[0] * x[0] + w[1] * x[1] + w[2] * x[2];
  });
  const auto wrapped = wrap_with_inverse_pca(lin, p);
  Vector wv(3);
  wv << w[0], w[1], w[2];
  const Vector coef = p.rotation.transpose() * wv;
  const double offset = wv.dot(p.mean);
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> z{rng.normal(), rng.normal(), rng.normal()};
    const double expect = offset + coef[0] * z[0] + coef[1] * z[1] + coef[2] * z[2];
    CHECK(wrapped->evaluate(z)[0] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("wrapped model reproduces outputs on every dataset row") {
  const Dataset d = correlated(400, 6);
  auto model = std::make_shared<MLPModel>(build_mlp(3, {16, 8}, 1, Activation::TanH, 3));
  for (bool whiten : {false, true}) {
    const PCAModel p = fit_pca(d, whiten);
    const auto wrapped = wrap_with_inverse_pca(model, p);
    const Matrix direct = model->evaluate_batch(d.features());
    const Matrix via = wrapped->evaluate_batch(transform_rows(p, d.features()));
    for (Eigen::Index k = 0; k < direct.rows(); ++k)
      CHECK(test::rel_diff(direct(k, 0), via(k, 0)) <= 1e-9);
  }
  CHECK_THROWS_AS(wrap_with_inverse_pca(model, fit_pca(covariance_21())), InvalidArgument);
}

TEST_CASE("pca persistence") {
  const auto dir = test::temp_dir("pca_io");
  const PCAModel p = fit_pca(correlated(100, 1), true);
  save_pca(p, dir / "p.json");
  const PCAModel q = load_pca(dir / "p.json");
  CHECK(q.mean == p.mean);
  CHECK(q.rotation == p.rotation);
  CHECK(q.eigenvalues == p.eigenvalues);
  CHECK(q.whiten);
  CHECK_THROWS_AS(pca_from_json("{\"format_version\":1}"), InvalidArgument);
}

TEST_CASE("symmetric_eigen on a random symmetric matrix") {
  Matrix a = test::uniform_matrix(6, 6, -1, 1, 12);
  a = (a + a.transpose()).eval();
  Vector vals;
  Matrix vecs;
  symmetric_eigen(a, vals, vecs);
  CHECK((a * vecs - vecs * vals.asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(vals.sum() - a.trace()) < 1e-12);
}
