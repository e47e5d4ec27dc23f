#include "cep/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cep {

namespace {

// Orthonormal probabilists' Hermite polynomials p_k = He_k / sqrt(k!) at x.
// Returns p_n and fills p_{n-1}; accumulates sum_{k<n} p_k^2.
long double orthonormal_hermite(int n, long double x, long double& prev,
                                long double& christoffel) {
  long double p_km1 = 0.0L;
  long double p_k = 1.0L;
  christoffel = 0.0L;
  for (int k = 0; k < n; ++k) {
    christoffel += p_k * p_k;
    const long double next =
        (x * p_k - std::sqrt(static_cast<long double>(k)) * p_km1) /
        std::sqrt(static_cast<long double>(k + 1));
    p_km1 = p_k;
    p_k = next;
  }
  prev = p_km1;
  return p_k;
}

}  // namespace

QuadratureRule gauss_hermite(int order) {
  if (order < 1 || order > kMaxQuadratureOrder) {
    std::ostringstream msg;
    msg << "gauss_hermite: order " << order << " outside [1, "
        << kMaxQuadratureOrder << "]";
    throw std::invalid_argument(msg.str());
  }
  const int n = order;

  // Jacobi matrix of the probabilists' Hermite recurrence.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);

  std::vector<long double> nodes(n);
  std::vector<long double> weights(n);
  for (int j = 0; j < n; ++j) {
    // Newton polish in extended precision; p_n' = sqrt(n) p_{n-1}.
    long double x = eig.eigenvalues()(j);
    long double prev = 0.0L;
    long double christoffel = 0.0L;
    for (int it = 0; it < 4 && n > 1; ++it) {
      const long double p = orthonormal_hermite(n, x, prev, christoffel);
      x -= p / (std::sqrt(static_cast<long double>(n)) * prev);
    }
    orthonormal_hermite(n, x, prev, christoffel);
    nodes[j] = x;
    weights[j] = 1.0L / christoffel;
  }

  // Enforce exact symmetry.
  for (int j = 0; j < n / 2; ++j) {
    const int k = n - 1 - j;
    const long double x = 0.5L * (nodes[k] - nodes[j]);
    const long double w = 0.5L * (weights[j] + weights[k]);
    nodes[j] = -x;
    nodes[k] = x;
    weights[j] = weights[k] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0L;

  long double total = 0.0L;
  for (long double w : weights) total += w;

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int j = 0; j < n; ++j) {
    rule.nodes[j] = static_cast<double>(nodes[j]);
    rule.weights[j] = static_cast<double>(weights[j] / total);
  }
  return rule;
}

double expect_1d(const QuadratureRule& rule, double mean, double var,
                 const std::function<double(double)>& g) {
  if (!(var > 0.0)) {
    throw std::invalid_argument("expect_1d: variance must be positive");
  }
  const double sd = std::sqrt(var);
  double sum = 0.0;
  for (int j = 0; j < rule.order(); ++j) {
    sum += rule.weights[j] * g(mean + sd * rule.nodes[j]);
  }
  return sum;
}

double expect_2d(const QuadratureRule& rule, const Eigen::Vector2d& mean,
                 const Eigen::Vector2d& var,
                 const std::function<double(double, double)>& g) {
  if (!(var(0) > 0.0) || !(var(1) > 0.0)) {
    throw std::invalid_argument("expect_2d: variances must be positive");
  }
  const double sd0 = std::sqrt(var(0));
  const double sd1 = std::sqrt(var(1));
  double sum = 0.0;
  for (int i = 0; i < rule.order(); ++i) {
    const double a = mean(0) + sd0 * rule.nodes[i];
    for (int j = 0; j < rule.order(); ++j) {
      sum += rule.weights[i] * rule.weights[j] *
             g(a, mean(1) + sd1 * rule.nodes[j]);
    }
  }
  return sum;
}

}  // namespace cep
