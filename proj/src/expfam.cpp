#include "cep/expfam.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cep {

namespace {

void require_same_dim(const GaussianFactor& f, const GaussianFactor& g,
                      const char* op) {
  if (f.dim() != g.dim()) {
    std::ostringstream msg;
    msg << op << ": dimension mismatch (" << f.dim() << " vs " << g.dim()
        << ")";
    throw std::invalid_argument(msg.str());
  }
}

Eigen::MatrixXd full_eta2(const GaussianFactor& f) {
  if (f.is_diagonal()) return f.eta2().col(0).asDiagonal();
  return f.eta2();
}

// Applies `op` to the natural parameters, promoting diagonal to full when the
// forms differ.
template <typename Op>
GaussianFactor combine(const GaussianFactor& f, const GaussianFactor& g,
                       const char* name, Op op) {
  require_same_dim(f, g, name);
  Eigen::VectorXd eta1 = op(f.eta1(), g.eta1());
  if (f.is_diagonal() && g.is_diagonal()) {
    return GaussianFactor::diagonal(std::move(eta1),
                                    op(f.eta2().col(0), g.eta2().col(0)));
  }
  return GaussianFactor::full(std::move(eta1), op(full_eta2(f), full_eta2(g)));
}

}  // namespace

GaussianFactor::GaussianFactor(Eigen::VectorXd eta1, Eigen::MatrixXd eta2,
                               Form form)
    : eta1_(std::move(eta1)), eta2_(std::move(eta2)), form_(form) {}

GaussianFactor GaussianFactor::unit(Eigen::Index dim, Form form) {
  if (form == Form::kDiagonal) {
    return {Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, 1), form};
  }
  return {Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim), form};
}

GaussianFactor GaussianFactor::diagonal(Eigen::VectorXd eta1,
                                        Eigen::VectorXd eta2) {
  if (eta1.size() != eta2.size()) {
    throw std::invalid_argument("GaussianFactor::diagonal: size mismatch");
  }
  Eigen::MatrixXd column = std::move(eta2);
  return {std::move(eta1), std::move(column), Form::kDiagonal};
}

GaussianFactor GaussianFactor::full(Eigen::VectorXd eta1, Eigen::MatrixXd eta2) {
  if (eta2.rows() != eta1.size() || eta2.cols() != eta1.size()) {
    throw std::invalid_argument("GaussianFactor::full: size mismatch");
  }
  Eigen::MatrixXd sym = 0.5 * (eta2 + eta2.transpose());
  return {std::move(eta1), std::move(sym), Form::kFull};
}

GaussianFactor GaussianFactor::from_moments(const Eigen::VectorXd& mean,
                                            const Eigen::VectorXd& variances) {
  if (mean.size() != variances.size()) {
    throw std::invalid_argument("GaussianFactor::from_moments: size mismatch");
  }
  if ((variances.array() <= 0.0).any()) {
    throw std::domain_error("GaussianFactor::from_moments: variance <= 0");
  }
  Eigen::VectorXd precision = variances.cwiseInverse();
  return diagonal(precision.cwiseProduct(mean), -0.5 * precision);
}

GaussianFactor GaussianFactor::from_moments(const Eigen::VectorXd& mean,
                                            const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw std::invalid_argument("GaussianFactor::from_moments: size mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (covariance + covariance.transpose()));
  if (llt.info() != Eigen::Success) {
    throw std::domain_error(
        "GaussianFactor::from_moments: covariance not positive definite");
  }
  Eigen::MatrixXd precision =
      llt.solve(Eigen::MatrixXd::Identity(mean.size(), mean.size()));
  return full(precision * mean, -0.5 * precision);
}

GaussianFactor GaussianFactor::scalar(double mean, double var) {
  const Eigen::VectorXd m = Eigen::VectorXd::Constant(1, mean);
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, var);
  return from_moments(m, v);
}

Eigen::MatrixXd GaussianFactor::precision() const {
  return -2.0 * full_eta2(*this);
}

bool GaussianFactor::is_normalizable() const {
  if (is_diagonal()) return (eta2_.array() < 0.0).all();
  Eigen::LLT<Eigen::MatrixXd> llt(-2.0 * eta2_);
  return llt.info() == Eigen::Success;
}

GaussianFactor GaussianFactor::to_full() const {
  if (!is_diagonal()) return *this;
  return {eta1_, full_eta2(*this), Form::kFull};
}

Eigen::MatrixXd GaussianMoments::second_moment() const {
  return covariance + mean * mean.transpose();
}

double GammaFactor::mean() const {
  if (!is_normalizable()) {
    throw std::domain_error("GammaFactor::mean: factor not normalizable");
  }
  return shape_ / rate_;
}

GaussianFactor multiply(const GaussianFactor& f, const GaussianFactor& g) {
  return combine(f, g, "multiply",
                 [](const auto& a, const auto& b) { return (a + b).eval(); });
}

GaussianFactor divide(const GaussianFactor& f, const GaussianFactor& g) {
  return combine(f, g, "divide",
                 [](const auto& a, const auto& b) { return (a - b).eval(); });
}

GammaFactor multiply(const GammaFactor& f, const GammaFactor& g) {
  return {f.shape() + g.shape() - 1.0, f.rate() + g.rate()};
}

GammaFactor divide(const GammaFactor& f, const GammaFactor& g) {
  return {f.shape() - g.shape() + 1.0, f.rate() - g.rate()};
}

GaussianMoments moments(const GaussianFactor& f) {
  const Eigen::Index dim = f.dim();
  if (f.is_diagonal()) {
    const Eigen::VectorXd eta2 = f.eta2().col(0);
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (!(eta2(i) < 0.0)) {
        std::ostringstream msg;
        msg << "moments: non-normalizable factor, coordinate " << i
            << " has precision " << -2.0 * eta2(i);
        throw std::domain_error(msg.str());
      }
    }
    Eigen::VectorXd var = (-2.0 * eta2).cwiseInverse();
    return {var.cwiseProduct(f.eta1()), var.asDiagonal()};
  }

  const Eigen::MatrixXd precision = f.precision();
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!(precision(i, i) > 0.0)) {
      std::ostringstream msg;
      msg << "moments: non-normalizable factor, coordinate " << i
          << " has precision " << precision(i, i);
      throw std::domain_error(msg.str());
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error(
        "moments: non-normalizable factor, precision matrix is not positive "
        "definite");
  }
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  cov = 0.5 * (cov + cov.transpose());
  Eigen::VectorXd mean = cov * f.eta1();
  return {std::move(mean), std::move(cov)};
}

double kl_divergence(const GaussianFactor& p, const GaussianFactor& q) {
  require_same_dim(p, q, "kl_divergence");
  const GaussianMoments mp = moments(p);
  const GaussianMoments mq = moments(q);
  const auto d = static_cast<double>(p.dim());

  if (p.is_diagonal() && q.is_diagonal()) {
    const Eigen::ArrayXd vp = mp.variances().array();
    const Eigen::ArrayXd vq = mq.variances().array();
    const Eigen::ArrayXd diff = (mq.mean - mp.mean).array();
    return 0.5 * ((vp / vq).sum() + (diff.square() / vq).sum() - d +
                  (vq.log() - vp.log()).sum());
  }

  const Eigen::MatrixXd prec_q = q.precision();
  const Eigen::VectorXd diff = mq.mean - mp.mean;
  Eigen::LLT<Eigen::MatrixXd> llt_p(p.precision());
  Eigen::LLT<Eigen::MatrixXd> llt_q(prec_q);
  const double logdet_p = 2.0 * llt_p.matrixLLT().diagonal().array().log().sum();
  const double logdet_q = 2.0 * llt_q.matrixLLT().diagonal().array().log().sum();
  // log det cov_q - log det cov_p = logdet(prec_p) - logdet(prec_q)
  return 0.5 * ((prec_q * mp.covariance).trace() + diff.dot(prec_q * diff) - d +
                logdet_p - logdet_q);
}

GaussianFactor damp(const GaussianFactor& proposed,
                    const GaussianFactor& previous, double damping) {
  if (damping == 1.0) return proposed;
  return combine(proposed, previous, "damp",
                 [damping](const auto& a, const auto& b) {
                   return (damping * a + (1.0 - damping) * b).eval();
                 });
}

GammaFactor damp(const GammaFactor& proposed, const GammaFactor& previous,
                 double damping) {
  if (damping == 1.0) return proposed;
  return {1.0 + damping * (proposed.shape() - 1.0) +
              (1.0 - damping) * (previous.shape() - 1.0),
          damping * proposed.rate() + (1.0 - damping) * previous.rate()};
}

double max_abs_difference(const GaussianFactor& f, const GaussianFactor& g) {
  require_same_dim(f, g, "max_abs_difference");
  const double d1 = (f.eta1() - g.eta1()).cwiseAbs().maxCoeff();
  double d2 = 0.0;
  if (f.form() == g.form()) {
    d2 = (f.eta2() - g.eta2()).cwiseAbs().maxCoeff();
  } else {
    d2 = (full_eta2(f) - full_eta2(g)).cwiseAbs().maxCoeff();
  }
  return std::max(d1, d2);
}

double max_abs_difference(const GammaFactor& f, const GammaFactor& g) {
  return std::max(std::abs(f.shape() - g.shape()),
                  std::abs(f.rate() - g.rate()));
}

Eigen::MatrixXd regularize_covariance(const Eigen::MatrixXd& cov,
                                      double floor) {
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.eigenvalues().minCoeff() >= floor) return sym;
  Eigen::VectorXd values = eig.eigenvalues().cwiseMax(floor);
  return eig.eigenvectors() * values.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace cep
