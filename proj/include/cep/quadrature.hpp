#ifndef CEP_QUADRATURE_HPP
#define CEP_QUADRATURE_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace cep {

/**
 * Gauss-Hermite rule for the standard normal weight:
 * sum_j weights[j] * g(nodes[j]) approximates E_{N(0,1)}[g].  The weights sum
 * to one and the nodes are symmetric about zero.
 */
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  int order() const { return static_cast<int>(nodes.size()); }
};

inline constexpr int kDefaultQuadratureOrder = 9;
inline constexpr int kMaxQuadratureOrder = 64;

/// Golub-Welsch rule of the given order (1..64), exact for polynomials of
/// degree up to 2 * order - 1.
QuadratureRule gauss_hermite(int order);

/// sum_j a_j g(mean + sqrt(var) * x_j).  Throws if var <= 0.
double expect_1d(const QuadratureRule& rule, double mean, double var,
                 const std::function<double(double)>& g);

/// Tensor-product rule for two independent Gaussian axes.
double expect_2d(const QuadratureRule& rule, const Eigen::Vector2d& mean,
                 const Eigen::Vector2d& var,
                 const std::function<double(double, double)>& g);

}  // namespace cep

#endif  // CEP_QUADRATURE_HPP
