#include "cep/reference.hpp"

#include <cmath>
#include <stdexcept>

#include "cep/oracle.hpp"
#include "cep/special.hpp"

namespace cep {

Eigen::VectorXd regression_log_posterior(const RegressionDataset& data, RegressionLink link,
                                         double prior_variance,
                                         const Eigen::MatrixXd& weights) {
  if (weights.rows() != data.dim()) {
    throw std::invalid_argument("regression_log_posterior: weight dimension mismatch");
  }
  const Eigen::ArrayXd sign = 2.0 * data.targets.array() - 1.0;
  Eigen::VectorXd out = -0.5 * weights.colwise().squaredNorm().transpose() / prior_variance;
  Eigen::ArrayXd a(data.size());
  for (Eigen::Index j = 0; j < weights.cols(); ++j) {
    a = sign * (data.features * weights.col(j)).array();
    if (link == RegressionLink::kProbit) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < a.size(); ++i) acc += log_normal_cdf(a(i));
      out(j) += acc;
    } else {
      // log sigmoid(a) = min(a, 0) - log(1 + exp(-|a|))
      out(j) += (a.min(0.0) - (-a.abs()).exp().log1p()).sum();
    }
  }
  return out;
}

ReferencePosterior reference_posterior(const RegressionDataset& data, RegressionLink link,
                                       double prior_variance, const DiagonalPosterior& guide,
                                       const ReferenceOptions& options) {
  validate(data, true);
  if (!(prior_variance > 0.0)) {
    throw std::invalid_argument("reference_posterior: prior variance must be positive");
  }
  if (guide.mean.size() != data.dim() || guide.var.size() != data.dim() ||
      !(guide.var.array() > 0.0).all()) {
    throw std::invalid_argument("reference_posterior: guide must match d and have positive variances");
  }
  if (!(options.guide_inflation > 0.0)) {
    throw std::invalid_argument("reference_posterior: guide inflation must be positive");
  }
  const Eigen::VectorXd var = guide.var * options.guide_inflation;
  const Eigen::Index d = data.dim();
  ReferencePosterior out;

  if (d <= 3) {
    int resolution = options.grid_resolution;
    if (resolution == 0) resolution = d == 1 ? 2001 : d == 2 ? 201 : 61;
    const GridResult g = grid_posterior(
        [&](const Eigen::VectorXd& w) {
          return regression_log_posterior(data, link, prior_variance, w)(0);
        },
        box_around(guide.mean, var, 8.0), resolution);
    out.marginals = {g.mean, g.var};
    out.method = "grid";
    out.ess = std::pow(static_cast<double>(resolution), static_cast<double>(d));
    return out;
  }

  const IsResult r = is_moments(
      [&](const Eigen::MatrixXd& w) {
        return regression_log_posterior(data, link, prior_variance, w);
      },
      GaussianFactor::from_moments(guide.mean, var), options.is_samples, options.seed);
  out.marginals = {r.mean, r.var};
  out.method = "is";
  out.ess = r.ess;
  out.reliable = r.reliable;
  return out;
}

double factorized_kl(const DiagonalPosterior& p, const DiagonalPosterior& q) {
  if (p.mean.size() != q.mean.size() || p.var.size() != p.mean.size() ||
      q.var.size() != q.mean.size()) {
    throw std::invalid_argument("factorized_kl: dimension mismatch");
  }
  if (!(p.var.array() > 0.0).all() || !(q.var.array() > 0.0).all()) {
    throw std::invalid_argument("factorized_kl: variances must be positive");
  }
  double kl = 0.0;
  for (Eigen::Index m = 0; m < p.mean.size(); ++m) {
    const double ratio = p.var(m) / q.var(m);
    const double diff = p.mean(m) - q.mean(m);
    kl += 0.5 * (ratio + diff * diff / q.var(m) - 1.0 - std::log(ratio));
  }
  return kl;
}

}  // namespace cep
