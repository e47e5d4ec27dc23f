#include "cep/regression.hpp"

#include <cmath>
#include <stdexcept>

namespace cep {

Gaussian1d scalar_moments(const Term& term) {
  const auto& f = std::get<GaussianFactor>(term);
  const double precision = -2.0 * f.eta2()(0, 0);
  if (!(precision > 0.0)) {
    throw std::domain_error("scalar_moments: non-normalizable term");
  }
  return {f.eta1()(0) / precision, 1.0 / precision};
}

void validate(const RegressionDataset& data, bool binary) {
  if (data.size() == 0 || data.dim() < 1) {
    throw std::invalid_argument("regression dataset: need n >= 1 and d >= 1");
  }
  if (data.targets.size() != data.size()) {
    throw std::invalid_argument("regression dataset: targets/rows mismatch");
  }
  if (!data.features.allFinite() || !data.targets.allFinite()) {
    throw std::invalid_argument("regression dataset: non-finite values");
  }
  if (binary) {
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const double y = data.targets(i);
      if (y != 0.0 && y != 1.0) {
        throw std::invalid_argument("regression dataset: labels must be 0 or 1");
      }
    }
  }
}

FactorizedRegression::FactorizedRegression(const RegressionDataset& data,
                                           Method method,
                                           double prior_variance)
    : data_(data), method_(method), prior_variance_(prior_variance) {
  if (!(prior_variance > 0.0)) {
    throw std::invalid_argument("prior variance must be positive");
  }
}

std::size_t FactorizedRegression::num_factors() const {
  return static_cast<std::size_t>(data_.size());
}

std::vector<std::size_t> FactorizedRegression::factor_blocks(
    std::size_t factor) const {
  std::vector<std::size_t> blocks;
  const auto row = data_.features.row(static_cast<Eigen::Index>(factor));
  for (Eigen::Index m = 0; m < data_.dim(); ++m) {
    if (row(m) != 0.0) blocks.push_back(static_cast<std::size_t>(m));
  }
  return blocks;
}

std::vector<Term> FactorizedRegression::priors() const {
  return std::vector<Term>(static_cast<std::size_t>(data_.dim()),
                           GaussianFactor::scalar(0.0, prior_variance_));
}

FactorGraphState FactorizedRegression::make_state(MessageInit init) const {
  return FactorGraphState(priors(), *this, init);
}

std::optional<Term> FactorizedRegression::project(
    const ProjectionRequest& request) const {
  const FactorGraphState& state = request.state;
  const std::size_t i = request.edge.factor;
  const auto m = static_cast<Eigen::Index>(request.edge.block);
  const Gaussian1d cavity = scalar_moments(request.cavity);
  const Eigen::Index d = data_.dim();

  Eigen::VectorXd mean(d);
  Eigen::VectorXd var(d);
  for (Eigen::Index l = 0; l < d; ++l) {
    const Gaussian1d post = scalar_moments(state.posterior(static_cast<std::size_t>(l)));
    mean(l) = post.mean;
    var(l) = post.var;
  }

  if (method_ == Method::kEp) {
    for (std::size_t s = state.first_slot(i); s < state.end_slot(i); ++s) {
      const auto l = static_cast<Eigen::Index>(state.edge(s).block);
      const Gaussian1d cav = l == m ? cavity : scalar_moments(state.cavity(s));
      mean(l) = cav.mean;
      var(l) = cav.var;
    }
  }
  const auto updated = method_ == Method::kEp
                           ? ep_update(i, m, mean, var)
                           : cep_update(i, m, cavity, mean, var);
  if (!updated || !(updated->var > 0.0)) return std::nullopt;
  return GaussianFactor::scalar(updated->mean, updated->var);
}

DiagonalPosterior regression_posterior(const FactorGraphState& state) {
  const auto d = static_cast<Eigen::Index>(state.num_blocks());
  DiagonalPosterior out{Eigen::VectorXd(d), Eigen::VectorXd(d)};
  for (Eigen::Index m = 0; m < d; ++m) {
    const Gaussian1d g = scalar_moments(state.posterior(static_cast<std::size_t>(m)));
    out.mean(m) = g.mean;
    out.var(m) = g.var;
  }
  return out;
}

LeaveOneOut leave_one_out(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& var, Eigen::Index m) {
  const Eigen::Index d = x.size();
  LeaveOneOut out{Eigen::VectorXd(d - 1), Eigen::VectorXd(d - 1),
                  Eigen::VectorXd(d - 1)};
  for (Eigen::Index l = 0, k = 0; l < d; ++l) {
    if (l == m) continue;
    out.x(k) = x(l);
    out.mean(k) = mean(l);
    out.var(k) = var(l);
    ++k;
  }
  return out;
}

}  // namespace cep
