#include <cmath>
#include <numbers>

#include "meandim/pca.hpp"
#include "meandim/testfns.hpp"

namespace meandim {
namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric tridiagonal Jacobi
// matrix, weights are mu0 times the squared first eigenvector components.
QuadratureRule golub_welsch(std::size_t n, double mu0, double (*off_diagonal)(std::size_t)) {
  if (n == 0) throw InvalidArgument("quadrature rule needs at least one node");
  const auto m = static_cast<Eigen::Index>(n);
  Matrix jacobi = Matrix::Zero(m, m);
  for (Eigen::Index k = 1; k < m; ++k) {
    const double b = off_diagonal(static_cast<std::size_t>(k));
    jacobi(k - 1, k) = b;
    jacobi(k, k - 1) = b;
  }
  Vector values;
  Matrix vectors;
  symmetric_eigen(jacobi, values, vectors);
  QuadratureRule rule;
  // symmetric_eigen sorts descending; store ascending.
  for (Eigen::Index j = m - 1; j >= 0; --j) {
    rule.nodes.push_back(values[j]);
    rule.weights.push_back(mu0 * vectors(0, j) * vectors(0, j));
  }
  return rule;
}

double legendre_beta(std::size_t k) {
  const double kk = static_cast<double>(k);
  return kk / std::sqrt(4.0 * kk * kk - 1.0);
}

double hermite_prob_beta(std::size_t k) { return std::sqrt(static_cast<double>(k)); }

}  // namespace

QuadratureRule gauss_legendre(std::size_t n) {
  QuadratureRule rule = golub_welsch(n, 2.0, legendre_beta);
  // Exact symmetry about 0.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule gauss_hermite_normal(std::size_t n) {
  QuadratureRule rule = golub_welsch(n, 1.0, hermite_prob_beta);
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace meandim
