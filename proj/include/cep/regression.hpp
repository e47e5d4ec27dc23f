#ifndef CEP_REGRESSION_HPP
#define CEP_REGRESSION_HPP

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cep/engine.hpp"

namespace cep {

enum class Method { kEp, kCep1, kCep2 };

/// Scalar Gaussian in moment form.
struct Gaussian1d {
  double mean = 0.0;
  double var = 1.0;
};

/// Moments of a one-dimensional Gaussian term; throws if not normalizable.
Gaussian1d scalar_moments(const Term& term);

/// n x d design matrix with one target per row.  For the probit and logistic
/// models targets are labels in {0, 1}.
struct RegressionDataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

/// Throws std::invalid_argument unless the dataset is non-empty, finite,
/// has d >= 1 and (when `binary`) labels in {0, 1}.
void validate(const RegressionDataset& data, bool binary);

/// Per-coordinate posterior of a fully factorized regression model.
struct DiagonalPosterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;

  GaussianFactor as_factor() const {
    return GaussianFactor::from_moments(mean, var);
  }
};

/**
 * Base for fully factorized regression models.  Each weight w_m is its own
 * one-dimensional block with prior N(0, prior_variance); data point i sends a
 * message to every w_m with x_im != 0.
 *
 * For EP, the projection for (i, m) sees the cavity of every coordinate
 * (factor i's messages removed).  For CEP, it sees the cavity of w_m and the
 * current posterior of the remaining weights.
 */
class FactorizedRegression : public ProjectionModel {
 public:
  FactorizedRegression(const RegressionDataset& data, Method method,
                       double prior_variance);

  std::size_t num_factors() const override;
  std::vector<std::size_t> factor_blocks(std::size_t factor) const override;
  std::optional<Term> project(const ProjectionRequest& request) const override;

  std::vector<Term> priors() const;
  FactorGraphState make_state(MessageInit init = MessageInit::kFlatGaussian) const;

  Method method() const { return method_; }
  const RegressionDataset& data() const { return data_; }

 protected:
  /// Proposed posterior of w_m under EP.  `cavity_*` hold every coordinate's
  /// cavity for data point i.
  virtual std::optional<Gaussian1d> ep_update(
      std::size_t i, Eigen::Index m, const Eigen::VectorXd& cavity_mean,
      const Eigen::VectorXd& cavity_var) const = 0;

  /// Proposed posterior of w_m under CEP-1/CEP-2.  `posterior_*` hold the
  /// current posterior of every coordinate (entry m is not used).
  virtual std::optional<Gaussian1d> cep_update(
      std::size_t i, Eigen::Index m, const Gaussian1d& cavity,
      const Eigen::VectorXd& posterior_mean,
      const Eigen::VectorXd& posterior_var) const = 0;

  const RegressionDataset& data_;
  Method method_;
  double prior_variance_;
};

DiagonalPosterior regression_posterior(const FactorGraphState& state);

/// Splits x into (x_m, x without coordinate m) and (means, vars) likewise.
struct LeaveOneOut {
  Eigen::VectorXd x;
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};
LeaveOneOut leave_one_out(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& var, Eigen::Index m);

}  // namespace cep

#endif  // CEP_REGRESSION_HPP
