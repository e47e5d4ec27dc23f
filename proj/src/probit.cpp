#include "cep/probit.hpp"

#include <cmath>
#include <stdexcept>

#include "cep/special.hpp"

namespace cep {

std::optional<TiltedMoments> probit_ep_project(const Eigen::VectorXd& cavity_mean,
                                               const Eigen::VectorXd& cavity_var,
                                               const Eigen::VectorXd& x, double y) {
  if (cavity_mean.size() != x.size() || cavity_var.size() != x.size()) {
    throw std::invalid_argument("probit_ep_project: size mismatch");
  }
  if (!(cavity_var.array() > 0.0).all()) return std::nullopt;
  const double sign = 2.0 * y - 1.0;
  const double s2 = 1.0 + x.cwiseAbs2().dot(cavity_var);
  const double s = std::sqrt(s2);
  const double t = sign * x.dot(cavity_mean) / s;
  const double r = pdf_over_cdf(t);

  TiltedMoments out;
  const Eigen::ArrayXd vx = cavity_var.array() * x.array();
  out.mean = cavity_mean.array() + vx * (sign * r / s);
  out.var = cavity_var.array() - vx.square() * (r * (r + t) / s2);
  return out;
}

ConditionalMoments probit_conditional(const Gaussian1d& cavity, double x_m,
                                      double offset, double y) {
  const double sign = 2.0 * y - 1.0;
  const double v = cavity.var;
  const double c1 = sign / std::sqrt(1.0 + x_m * x_m * v);
  const double c2 = x_m * cavity.mean + offset;
  const double u = c1 * c2;
  const double r = pdf_over_cdf(u);
  const double r2 = r * r;

  // d^2 r / du^2 and -d^2 (r^2 + u r) / du^2, expressed through r itself.
  const double t1 = (u * u - 1.0) * r + 3.0 * u * r2 + 2.0 * r2 * r;
  const double t2 = u * (3.0 - u * u) * r + (4.0 - 7.0 * u * u) * r2 -
                    12.0 * u * r2 * r - 6.0 * r2 * r2;

  ConditionalMoments out;
  out.mean = cavity.mean + v * x_m * c1 * r;
  out.var = v - v * v * x_m * x_m * c1 * c1 * r * (r + u);
  const double c1_sq = c1 * c1;
  out.mean_curvature = t1 * c1_sq * c1 * v * x_m;
  out.var_curvature = t2 * c1_sq * c1_sq * v * v * x_m * x_m;
  return out;
}

std::optional<Gaussian1d> probit_cep_project(Method method, const Gaussian1d& cavity,
                                             const Eigen::VectorXd& other_mean,
                                             const Eigen::VectorXd& other_var,
                                             const Eigen::VectorXd& x_other,
                                             double x_m, double y) {
  if (method == Method::kEp) {
    throw std::invalid_argument("probit_cep_project: method must be CEP-1 or CEP-2");
  }
  if (!(cavity.var > 0.0)) return std::nullopt;
  const double offset = x_other.dot(other_mean);
  const ConditionalMoments c = probit_conditional(cavity, x_m, offset, y);
  Gaussian1d out{c.mean, c.var};
  if (method == Method::kCep2) {
    const double spread = x_other.cwiseAbs2().dot(other_var);
    out.mean += 0.5 * c.mean_curvature * spread;
    out.var += 0.5 * c.var_curvature * spread;
  }
  if (!(out.var > 0.0) || !std::isfinite(out.mean)) return std::nullopt;
  return out;
}

double probit_predict(const DiagonalPosterior& posterior, const Eigen::VectorXd& x) {
  if (x.size() != posterior.mean.size()) {
    throw std::invalid_argument("probit_predict: size mismatch");
  }
  const double m = x.dot(posterior.mean);
  const double v = x.cwiseAbs2().dot(posterior.var);
  return normal_cdf(m / std::sqrt(1.0 + v));
}

ProbitModel::ProbitModel(const RegressionDataset& data, Method method,
                         double prior_variance)
    : FactorizedRegression(data, method, prior_variance) {
  validate(data, true);
}

std::optional<Gaussian1d> ProbitModel::ep_update(
    std::size_t i, Eigen::Index m, const Eigen::VectorXd& cavity_mean,
    const Eigen::VectorXd& cavity_var) const {
  const auto row = static_cast<Eigen::Index>(i);
  const auto tilted = probit_ep_project(
      cavity_mean, cavity_var, data_.features.row(row).transpose(),
      data_.targets(row));
  if (!tilted) return std::nullopt;
  return Gaussian1d{tilted->mean(m), tilted->var(m)};
}

std::optional<Gaussian1d> ProbitModel::cep_update(
    std::size_t i, Eigen::Index m, const Gaussian1d& cavity,
    const Eigen::VectorXd& posterior_mean,
    const Eigen::VectorXd& posterior_var) const {
  const auto row = static_cast<Eigen::Index>(i);
  const Eigen::VectorXd x = data_.features.row(row).transpose();
  const LeaveOneOut rest = leave_one_out(x, posterior_mean, posterior_var, m);
  return probit_cep_project(method_, cavity, rest.mean, rest.var, rest.x, x(m),
                            data_.targets(row));
}

}  // namespace cep
