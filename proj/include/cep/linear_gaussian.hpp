#ifndef CEP_LINEAR_GAUSSIAN_HPP
#define CEP_LINEAR_GAUSSIAN_HPP

#include "cep/regression.hpp"

namespace cep {

/**
 * Bayesian linear regression y_i ~ N(w^T x_i, noise_variance) with a
 * factorized Gaussian posterior.  The conditional moments of w_m are
 * expressed through the statistics (w_l, w_l^2) of the other weights; under
 * the factorized posterior their expectation is then available exactly, so
 * CEP-1 and CEP-2 coincide.
 */
class LinearGaussianModel : public FactorizedRegression {
 public:
  LinearGaussianModel(const RegressionDataset& data, Method method,
                      double noise_variance = 1.0, double prior_variance = 1.0);

 protected:
  std::optional<Gaussian1d> ep_update(std::size_t i, Eigen::Index m,
                                      const Eigen::VectorXd& cavity_mean,
                                      const Eigen::VectorXd& cavity_var) const override;
  std::optional<Gaussian1d> cep_update(std::size_t i, Eigen::Index m,
                                       const Gaussian1d& cavity,
                                       const Eigen::VectorXd& posterior_mean,
                                       const Eigen::VectorXd& posterior_var) const override;

 private:
  double noise_variance_;
};

}  // namespace cep

#endif  // CEP_LINEAR_GAUSSIAN_HPP
