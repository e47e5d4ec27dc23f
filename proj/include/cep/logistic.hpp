#ifndef CEP_LOGISTIC_HPP
#define CEP_LOGISTIC_HPP

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "cep/probit.hpp"
#include "cep/quadrature.hpp"
#include "cep/regression.hpp"

namespace cep {

/// log of the likelihood as a function of the signed activation (2y-1) x^T w.
using LogLink = std::function<double(double)>;

/// The logistic log-likelihood, log sigmoid(a).
double logistic_log_link(double a);

/**
 * Factorized EP update of w_m.  The cavity over w is collapsed onto the axes
 * (x_m w_m, sum_{l != m} x_l w_l), which are independent under the factorized
 * cavity; the tilted moments on that plane come from a tensor-product
 * Gauss-Hermite rule.  The returned proposal is the tilted marginal of w_m.
 * When the second axis has no variance the rule collapses to one dimension.
 *
 * Returns nullopt if x_m == 0 (no information about w_m), a cavity variance
 * is not positive, or the tilted variance degenerates.
 */
std::optional<Gaussian1d> logistic_ep_project_2d(
    const QuadratureRule& rule, const Eigen::VectorXd& cavity_mean,
    const Eigen::VectorXd& cavity_var, const Eigen::VectorXd& x, double y,
    Eigen::Index m, const LogLink& log_link = logistic_log_link);

/// E(w_m | .) and E(w_m^2 | .) under sigmoid((2y-1)(x_m w_m + offset)) N(w_m | cavity).
struct LogisticMoments {
  double mean = 0.0;
  double second = 0.0;
};

LogisticMoments logistic_cep_moments(const QuadratureRule& rule,
                                     const Gaussian1d& cavity, double offset,
                                     double x_m, double y);

/// Conditional moments with their first and second offset derivatives.
struct LogisticConditional {
  double mean = 0.0;
  double second = 0.0;
  double var = 0.0;
  double d_mean = 0.0;
  double d2_mean = 0.0;
  double d2_second = 0.0;
  double d2_var = 0.0;
};

LogisticConditional logistic_conditional(const QuadratureRule& rule,
                                         const Gaussian1d& cavity, double offset,
                                         double x_m, double y);

/// CEP-1/CEP-2 proposal for w_m; see probit_cep_project.
std::optional<Gaussian1d> logistic_cep_project(Method method,
                                               const QuadratureRule& rule,
                                               const Gaussian1d& cavity,
                                               const Eigen::VectorXd& other_mean,
                                               const Eigen::VectorXd& other_var,
                                               const Eigen::VectorXd& x_other,
                                               double x_m, double y);

/// E[sigmoid(w^T x)] under the posterior, by quadrature.
double logistic_predict(const DiagonalPosterior& posterior,
                        const Eigen::VectorXd& x, const QuadratureRule& rule);

class LogisticModel : public FactorizedRegression {
 public:
  LogisticModel(const RegressionDataset& data, Method method,
                double prior_variance = 1.0,
                int quadrature_order = kDefaultQuadratureOrder);

  const QuadratureRule& rule() const { return rule_; }

 protected:
  std::optional<Gaussian1d> ep_update(std::size_t i, Eigen::Index m,
                                      const Eigen::VectorXd& cavity_mean,
                                      const Eigen::VectorXd& cavity_var) const override;
  std::optional<Gaussian1d> cep_update(std::size_t i, Eigen::Index m,
                                       const Gaussian1d& cavity,
                                       const Eigen::VectorXd& posterior_mean,
                                       const Eigen::VectorXd& posterior_var) const override;

 private:
  QuadratureRule rule_;
};

}  // namespace cep

#endif  // CEP_LOGISTIC_HPP
