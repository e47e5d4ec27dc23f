#include "cep/oracle.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace cep {

Box box_around(const Eigen::VectorXd& mean, const Eigen::VectorXd& var, double width) {
  if (mean.size() != var.size() || !(var.array() > 0.0).all()) {
    throw std::invalid_argument("box_around: need matching sizes and positive variances");
  }
  const Eigen::VectorXd half = width * var.cwiseSqrt();
  return {mean - half, mean + half};
}

namespace {

GridResult grid_once(const LogDensity& log_density, const Box& box, int resolution) {
  const auto d = static_cast<int>(box.lower.size());
  std::vector<Eigen::VectorXd> axes(static_cast<std::size_t>(d));
  Eigen::VectorXd step(d);
  for (int k = 0; k < d; ++k) {
    axes[k] = Eigen::VectorXd::LinSpaced(resolution, box.lower(k), box.upper(k));
    step(k) = (box.upper(k) - box.lower(k)) / (resolution - 1);
  }

  std::size_t cells = 1;
  for (int k = 0; k < d; ++k) cells *= static_cast<std::size_t>(resolution);
  std::vector<double> logw(cells);
  std::vector<int> counter(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd point(d);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cells; ++c) {
    double log_trap = 0.0;
    for (int k = 0; k < d; ++k) {
      point(k) = axes[k](counter[k]);
      if (counter[k] == 0 || counter[k] == resolution - 1) log_trap += std::log(0.5);
    }
    const double lp = log_density(point);
    if (std::isnan(lp)) throw std::domain_error("grid_posterior: density is NaN");
    logw[c] = lp + log_trap;
    if (logw[c] > top) top = logw[c];
    for (int k = d - 1; k >= 0; --k) {
      if (++counter[k] < resolution) break;
      counter[k] = 0;
    }
  }
  if (!std::isfinite(top)) {
    throw std::domain_error("grid_posterior: density vanishes on the box");
  }

  double z = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(d);
  std::fill(counter.begin(), counter.end(), 0);
  for (std::size_t c = 0; c < cells; ++c) {
    const double w = std::exp(logw[c] - top);
    z += w;
    for (int k = 0; k < d; ++k) {
      const double x = axes[k](counter[k]);
      s1(k) += w * x;
      s2(k) += w * x * x;
    }
    for (int k = d - 1; k >= 0; --k) {
      if (++counter[k] < resolution) break;
      counter[k] = 0;
    }
  }
  GridResult out;
  out.mean = s1 / z;
  out.var = s2 / z - out.mean.cwiseAbs2();
  const double log_volume = step.array().log().sum();
  out.log_normalizer = top + std::log(z) + log_volume;
  out.normalizer = std::exp(out.log_normalizer);
  return out;
}

}  // namespace

GridResult grid_posterior(const LogDensity& log_density, const Box& box,
                          int resolution, bool self_check) {
  const Eigen::Index d = box.lower.size();
  if (d < 1 || d > 3 || box.upper.size() != d) {
    throw std::invalid_argument("grid_posterior: supports 1 to 3 dimensions");
  }
  if (!(box.upper.array() > box.lower.array()).all()) {
    throw std::invalid_argument("grid_posterior: empty box");
  }
  if (resolution < 3) {
    throw std::invalid_argument("grid_posterior: resolution must be at least 3");
  }
  GridResult out = grid_once(log_density, box, resolution);
  if (self_check) {
    const GridResult fine = grid_once(log_density, box, 2 * resolution - 1);
    out.refinement_change = (fine.mean - out.mean).cwiseAbs().maxCoeff();
  }
  return out;
}

IsResult is_moments(const BatchLogDensity& log_target, const GaussianFactor& proposal,
                    std::size_t n, std::uint64_t seed, std::size_t batch) {
  if (n == 0) throw std::invalid_argument("is_moments: need at least one sample");
  if (batch == 0) throw std::invalid_argument("is_moments: batch size must be > 0");
  if (!proposal.is_normalizable()) {
    throw std::invalid_argument("is_moments: proposal is not normalizable");
  }
  const GaussianMoments q = moments(proposal);
  const Eigen::Index d = q.mean.size();
  const Eigen::LLT<Eigen::MatrixXd> llt(q.covariance);
  const Eigen::MatrixXd chol = llt.matrixL();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd samples(d, static_cast<Eigen::Index>(n));
  Eigen::VectorXd logw(static_cast<Eigen::Index>(n));
  for (std::size_t start = 0; start < n; start += batch) {
    const auto cols = static_cast<Eigen::Index>(std::min(batch, n - start));
    Eigen::MatrixXd eps(d, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index k = 0; k < d; ++k) eps(k, j) = normal(rng);
    }
    Eigen::MatrixXd x = (chol * eps).colwise() + q.mean;
    const Eigen::VectorXd lp = log_target(x);
    if (lp.size() != cols) {
      throw std::invalid_argument("is_moments: log target returned wrong size");
    }
    const auto offset = static_cast<Eigen::Index>(start);
    logw.segment(offset, cols) = lp + 0.5 * eps.colwise().squaredNorm().transpose();
    samples.middleCols(offset, cols) = std::move(x);
  }

  const double top = logw.maxCoeff();
  if (!std::isfinite(top)) {
    throw std::domain_error("is_moments: target vanishes on every sample");
  }
  const Eigen::VectorXd w = (logw.array() - top).exp().matrix();
  const double sw = w.sum();
  const double sw2 = w.squaredNorm();

  IsResult out;
  out.mean = samples * w / sw;
  const Eigen::MatrixXd centered = samples.colwise() - out.mean;
  out.var = centered.cwiseAbs2() * w / sw;
  out.mean_se = (centered.cwiseAbs2() * w.cwiseAbs2()).cwiseSqrt() / sw;
  out.ess = sw * sw / sw2;
  out.reliable = out.ess >= kMinReliableEss;
  return out;
}

IsResult is_moments(const LogDensity& log_target, const GaussianFactor& proposal,
                    std::size_t n, std::uint64_t seed) {
  return is_moments(
      [&](const Eigen::MatrixXd& x) {
        Eigen::VectorXd out(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) out(j) = log_target(x.col(j));
        return out;
      },
      proposal, n, seed);
}

}  // namespace cep
