#ifndef CEP_PROBIT_HPP
#define CEP_PROBIT_HPP

#include <optional>

#include <Eigen/Dense>

#include "cep/regression.hpp"

namespace cep {

/// Per-coordinate moments of a tilted distribution.
struct TiltedMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

/**
 * Analytic moments of Phi((2y-1) x^T w) N(w | mean, diag(var)), projected on
 * each coordinate.  Returns nullopt if any variance is not positive.
 */
std::optional<TiltedMoments> probit_ep_project(const Eigen::VectorXd& cavity_mean,
                                               const Eigen::VectorXd& cavity_var,
                                               const Eigen::VectorXd& x, double y);

/**
 * Moments of w_m under Phi((2y-1)(x_m w_m + offset)) N(w_m | cavity), with
 * offset = x_{\m}^T w_{\m}, together with their second derivatives in the
 * offset.  The Hessian of either moment w.r.t. w_{\m} is the corresponding
 * curvature times x_{\m} x_{\m}^T.
 */
struct ConditionalMoments {
  double mean = 0.0;
  double var = 0.0;
  double mean_curvature = 0.0;
  double var_curvature = 0.0;
};

ConditionalMoments probit_conditional(const Gaussian1d& cavity, double x_m,
                                      double offset, double y);

/**
 * CEP-1/CEP-2 proposal for w_m.  `other_*` describe the posterior of w_{\m}
 * with features `x_other`.  CEP-2 adds half the trace of the diagonal
 * posterior covariance times the Hessian.  Returns nullopt for a non-positive
 * resulting variance.
 */
std::optional<Gaussian1d> probit_cep_project(Method method, const Gaussian1d& cavity,
                                             const Eigen::VectorXd& other_mean,
                                             const Eigen::VectorXd& other_var,
                                             const Eigen::VectorXd& x_other,
                                             double x_m, double y);

/// Phi(m / sqrt(1 + v)) for the predictive distribution N(m, v) of w^T x.
double probit_predict(const DiagonalPosterior& posterior, const Eigen::VectorXd& x);

class ProbitModel : public FactorizedRegression {
 public:
  /// Throws std::invalid_argument for invalid data or prior variance.
  ProbitModel(const RegressionDataset& data, Method method,
              double prior_variance = 1.0);

 protected:
  std::optional<Gaussian1d> ep_update(std::size_t i, Eigen::Index m,
                                      const Eigen::VectorXd& cavity_mean,
                                      const Eigen::VectorXd& cavity_var) const override;
  std::optional<Gaussian1d> cep_update(std::size_t i, Eigen::Index m,
                                       const Gaussian1d& cavity,
                                       const Eigen::VectorXd& posterior_mean,
                                       const Eigen::VectorXd& posterior_var) const override;
};

}  // namespace cep

#endif  // CEP_PROBIT_HPP
