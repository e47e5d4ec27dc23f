#include "cep/linear_gaussian.hpp"

#include <stdexcept>

namespace cep {

LinearGaussianModel::LinearGaussianModel(const RegressionDataset& data,
                                         Method method, double noise_variance,
                                         double prior_variance)
    : FactorizedRegression(data, method, prior_variance),
      noise_variance_(noise_variance) {
  validate(data, false);
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("LinearGaussianModel: noise variance must be positive");
  }
}

std::optional<Gaussian1d> LinearGaussianModel::ep_update(
    std::size_t i, Eigen::Index m, const Eigen::VectorXd& cavity_mean,
    const Eigen::VectorXd& cavity_var) const {
  const auto row = static_cast<Eigen::Index>(i);
  const Eigen::VectorXd x = data_.features.row(row).transpose();
  const double s2 = noise_variance_ + x.cwiseAbs2().dot(cavity_var);
  const double residual = data_.targets(row) - x.dot(cavity_mean);
  const double vx = cavity_var(m) * x(m);
  return Gaussian1d{cavity_mean(m) + vx * residual / s2,
                    cavity_var(m) - vx * vx / s2};
}

std::optional<Gaussian1d> LinearGaussianModel::cep_update(
    std::size_t i, Eigen::Index m, const Gaussian1d& cavity,
    const Eigen::VectorXd& posterior_mean,
    const Eigen::VectorXd& posterior_var) const {
  const auto row = static_cast<Eigen::Index>(i);
  const Eigen::VectorXd x = data_.features.row(row).transpose();
  const double offset = x.dot(posterior_mean) - x(m) * posterior_mean(m);
  const double spread =
      x.cwiseAbs2().dot(posterior_var) - x(m) * x(m) * posterior_var(m);
  const double precision = 1.0 / cavity.var + x(m) * x(m) / noise_variance_;
  const double shift =
      cavity.mean / cavity.var + x(m) * (data_.targets(row) - offset) / noise_variance_;
  const double cond_var = 1.0 / precision;
  // E(w_m^2 | w_{\m}) is linear in the statistics (w_l, w_l^2) of the other
  // blocks, so its expansion around their expected values is exact.
  const double gain = cond_var * x(m) / noise_variance_;
  return Gaussian1d{shift * cond_var, cond_var + gain * gain * spread};
}

}  // namespace cep
