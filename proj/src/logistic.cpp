#include "cep/logistic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cep/special.hpp"

namespace cep {

double logistic_log_link(double a) { return log_sigmoid(a); }

std::optional<Gaussian1d> logistic_ep_project_2d(
    const QuadratureRule& rule, const Eigen::VectorXd& cavity_mean,
    const Eigen::VectorXd& cavity_var, const Eigen::VectorXd& x, double y,
    Eigen::Index m, const LogLink& log_link) {
  if (cavity_mean.size() != x.size() || cavity_var.size() != x.size() || m < 0 ||
      m >= x.size()) {
    throw std::invalid_argument("logistic_ep_project_2d: size mismatch");
  }
  const double x_m = x(m);
  if (x_m == 0.0) return std::nullopt;
  if (!(cavity_var.array() > 0.0).all()) return std::nullopt;

  const double sign = 2.0 * y - 1.0;
  const double mean1 = x_m * cavity_mean(m);
  const double var1 = x_m * x_m * cavity_var(m);
  double mean2 = x.dot(cavity_mean) - mean1;
  double var2 = x.cwiseAbs2().dot(cavity_var) - var1;
  if (var2 < 0.0) var2 = 0.0;

  const int order = rule.order();
  const double sd1 = std::sqrt(var1);
  const double sd2 = std::sqrt(var2);
  const bool planar = var2 > 1e-12 * var1;
  const int inner = planar ? order : 1;

  // Log weights over the (possibly collapsed) tensor grid.
  std::vector<double> logw(static_cast<std::size_t>(order * inner));
  std::vector<double> eta1(logw.size());
  double top = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < order; ++j) {
    const double a = mean1 + sd1 * rule.nodes[j];
    for (int k = 0; k < inner; ++k) {
      const double b = planar ? mean2 + sd2 * rule.nodes[k] : mean2;
      double lw = std::log(rule.weights[j]) + log_link(sign * (a + b));
      if (planar) lw += std::log(rule.weights[k]);
      const std::size_t idx = static_cast<std::size_t>(j * inner + k);
      logw[idx] = lw;
      eta1[idx] = a;
      top = std::max(top, lw);
    }
  }
  if (!std::isfinite(top)) return std::nullopt;
  double z0 = 0.0;
  double z1 = 0.0;
  double z2 = 0.0;
  for (std::size_t idx = 0; idx < logw.size(); ++idx) {
    const double e = std::exp(logw[idx] - top);
    z0 += e;
    z1 += e * eta1[idx];
    z2 += e * eta1[idx] * eta1[idx];
  }
  const double tilted_mean = z1 / z0;
  const double tilted_var = z2 / z0 - tilted_mean * tilted_mean;
  if (!(tilted_var > 0.0) || !std::isfinite(tilted_mean)) return std::nullopt;
  return Gaussian1d{tilted_mean / x_m, tilted_var / (x_m * x_m)};
}

namespace {

// Quadrature node values and scaled tilted weights e_j = a_j g_j / max.
struct NodeSums {
  int order = 0;
  std::array<double, kMaxQuadratureOrder> w{};
  std::array<double, kMaxQuadratureOrder> e{};
  std::array<double, kMaxQuadratureOrder> g{};
};

NodeSums node_sums(const QuadratureRule& rule, const Gaussian1d& cavity,
                   double offset, double x_m, double y) {
  if (!(cavity.var > 0.0)) {
    throw std::domain_error("logistic conditional: cavity variance must be positive");
  }
  const double sign = 2.0 * y - 1.0;
  const double sd = std::sqrt(cavity.var);
  NodeSums s;
  s.order = rule.order();
  double top = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < s.order; ++j) {
    s.w[j] = cavity.mean + sd * rule.nodes[j];
    const double a = sign * (x_m * s.w[j] + offset);
    s.g[j] = sigmoid(a);
    s.e[j] = std::log(rule.weights[j]) + log_sigmoid(a);
    top = std::max(top, s.e[j]);
  }
  for (int j = 0; j < s.order; ++j) s.e[j] = std::exp(s.e[j] - top);
  return s;
}

}  // namespace

LogisticMoments logistic_cep_moments(const QuadratureRule& rule,
                                     const Gaussian1d& cavity, double offset,
                                     double x_m, double y) {
  const NodeSums s = node_sums(rule, cavity, offset, x_m, y);
  double e0 = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
  for (int j = 0; j < s.order; ++j) {
    e0 += s.e[j];
    e1 += s.e[j] * s.w[j];
    e2 += s.e[j] * s.w[j] * s.w[j];
  }
  return {e1 / e0, e2 / e0};
}

LogisticConditional logistic_conditional(const QuadratureRule& rule,
                                         const Gaussian1d& cavity, double offset,
                                         double x_m, double y) {
  const NodeSums s = node_sums(rule, cavity, offset, x_m, y);
  const double sign = 2.0 * y - 1.0;
  double e0 = 0.0, e1 = 0.0, e2 = 0.0;
  double s0 = 0.0, s1 = 0.0;
  for (int j = 0; j < s.order; ++j) {
    const double wj = s.w[j];
    e0 += s.e[j];
    e1 += s.e[j] * wj;
    e2 += s.e[j] * wj * wj;
    const double tj = s.e[j] * s.g[j];
    s0 += tj;
    s1 += tj * wj;
  }
  double tc = 0.0, tcw = 0.0, tcw2 = 0.0;
  for (int j = 0; j < s.order; ++j) {
    const double tj = s.e[j] * s.g[j];
    const double cj = e0 * (1.0 - 2.0 * s.g[j]) + 2.0 * s0;
    const double wj = s.w[j];
    tc += tj * cj;
    tcw += tj * cj * wj;
    tcw2 += tj * cj * wj * wj;
  }

  LogisticConditional out;
  out.mean = e1 / e0;
  out.second = e2 / e0;
  out.var = out.second - out.mean * out.mean;
  const double e0_sq = e0 * e0;
  const double e0_cube = e0_sq * e0;
  // Derivatives in the offset; the chain rule through x_m w_m + offset
  // contributes sign once per derivative, so it cancels at second order.
  out.d_mean = sign * (e1 * s0 - e0 * s1) / e0_sq;
  out.d2_mean = (e1 * tc - e0 * tcw) / e0_cube;
  out.d2_second = (e2 * tc - e0 * tcw2) / e0_cube;
  out.d2_var = out.d2_second - 2.0 * out.d_mean * out.d_mean -
               2.0 * out.mean * out.d2_mean;
  return out;
}

std::optional<Gaussian1d> logistic_cep_project(Method method,
                                               const QuadratureRule& rule,
                                               const Gaussian1d& cavity,
                                               const Eigen::VectorXd& other_mean,
                                               const Eigen::VectorXd& other_var,
                                               const Eigen::VectorXd& x_other,
                                               double x_m, double y) {
  if (method == Method::kEp) {
    throw std::invalid_argument("logistic_cep_project: method must be CEP-1 or CEP-2");
  }
  if (!(cavity.var > 0.0)) return std::nullopt;
  const double offset = x_other.dot(other_mean);
  Gaussian1d out;
  if (method == Method::kCep1) {
    const LogisticMoments c = logistic_cep_moments(rule, cavity, offset, x_m, y);
    out = {c.mean, c.second - c.mean * c.mean};
  } else {
    const LogisticConditional c = logistic_conditional(rule, cavity, offset, x_m, y);
    const double spread = x_other.cwiseAbs2().dot(other_var);
    out = {c.mean + 0.5 * c.d2_mean * spread, c.var + 0.5 * c.d2_var * spread};
  }
  if (!(out.var > 0.0) || !std::isfinite(out.mean)) return std::nullopt;
  return out;
}

double logistic_predict(const DiagonalPosterior& posterior,
                        const Eigen::VectorXd& x, const QuadratureRule& rule) {
  if (x.size() != posterior.mean.size()) {
    throw std::invalid_argument("logistic_predict: size mismatch");
  }
  const double m = x.dot(posterior.mean);
  const double v = x.cwiseAbs2().dot(posterior.var);
  if (!(v > 0.0)) return sigmoid(m);
  return expect_1d(rule, m, v, [](double a) { return sigmoid(a); });
}

LogisticModel::LogisticModel(const RegressionDataset& data, Method method,
                             double prior_variance, int quadrature_order)
    : FactorizedRegression(data, method, prior_variance),
      rule_(gauss_hermite(quadrature_order)) {
  validate(data, true);
}

std::optional<Gaussian1d> LogisticModel::ep_update(
    std::size_t i, Eigen::Index m, const Eigen::VectorXd& cavity_mean,
    const Eigen::VectorXd& cavity_var) const {
  const auto row = static_cast<Eigen::Index>(i);
  return logistic_ep_project_2d(rule_, cavity_mean, cavity_var,
                                data_.features.row(row).transpose(),
                                data_.targets(row), m);
}

std::optional<Gaussian1d> LogisticModel::cep_update(
    std::size_t i, Eigen::Index m, const Gaussian1d& cavity,
    const Eigen::VectorXd& posterior_mean,
    const Eigen::VectorXd& posterior_var) const {
  const auto row = static_cast<Eigen::Index>(i);
  const Eigen::VectorXd x = data_.features.row(row).transpose();
  const LeaveOneOut rest = leave_one_out(x, posterior_mean, posterior_var, m);
  return logistic_cep_project(method_, rule_, cavity, rest.mean, rest.var, rest.x,
                              x(m), data_.targets(row));
}

}  // namespace cep
