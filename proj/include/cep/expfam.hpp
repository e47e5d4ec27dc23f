#ifndef CEP_EXPFAM_HPP
#define CEP_EXPFAM_HPP

#include <Eigen/Dense>

namespace cep {

/**
 * A Gaussian term in natural parameters.
 *
 * The density is proportional to exp(eta1' x + x' eta2 x).  In diagonal form
 * `eta2` is stored as a dim x 1 column holding the diagonal entries (each equal
 * to -precision / 2); in full form it is a symmetric dim x dim matrix.
 *
 * Messages may be non-normalizable (zero or negative precision); posteriors and
 * cavities are required to be normalizable by the inference engine.
 */
class GaussianFactor {
 public:
  enum class Form { kDiagonal, kFull };

  GaussianFactor() = default;

  /// The unit factor (all natural parameters zero).
  static GaussianFactor unit(Eigen::Index dim, Form form = Form::kDiagonal);

  static GaussianFactor diagonal(Eigen::VectorXd eta1, Eigen::VectorXd eta2);
  static GaussianFactor full(Eigen::VectorXd eta1, Eigen::MatrixXd eta2);

  /// Builds a normalizable factor from a mean and per-coordinate variances.
  static GaussianFactor from_moments(const Eigen::VectorXd& mean,
                                     const Eigen::VectorXd& variances);
  /// Builds a full-form factor from a mean and covariance.
  static GaussianFactor from_moments(const Eigen::VectorXd& mean,
                                     const Eigen::MatrixXd& covariance);

  /// Scalar convenience: N(mean, var) as a one-dimensional diagonal factor.
  static GaussianFactor scalar(double mean, double var);

  Eigen::Index dim() const { return eta1_.size(); }
  Form form() const { return form_; }
  bool is_diagonal() const { return form_ == Form::kDiagonal; }

  const Eigen::VectorXd& eta1() const { return eta1_; }
  const Eigen::MatrixXd& eta2() const { return eta2_; }

  /// Precision matrix -2 * eta2 (diagonal form expands to a diagonal matrix).
  Eigen::MatrixXd precision() const;

  bool is_normalizable() const;

  GaussianFactor to_full() const;

 private:
  GaussianFactor(Eigen::VectorXd eta1, Eigen::MatrixXd eta2, Form form);

  Eigen::VectorXd eta1_;
  Eigen::MatrixXd eta2_;
  Form form_ = Form::kDiagonal;
};

/// Moment view of a normalizable Gaussian.  `covariance` is always dim x dim.
struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Eigen::VectorXd variances() const { return covariance.diagonal(); }
  /// E[x x'] = cov + mean mean'.
  Eigen::MatrixXd second_moment() const;
};

/**
 * Gamma term Gam(tau | shape, rate), density proportional to
 * tau^(shape - 1) exp(-rate tau).  The natural parameters are (shape - 1, -rate),
 * so the unit factor is (shape = 1, rate = 0).
 */
class GammaFactor {
 public:
  GammaFactor() = default;
  GammaFactor(double shape, double rate) : shape_(shape), rate_(rate) {}

  static GammaFactor unit() { return {1.0, 0.0}; }

  double shape() const { return shape_; }
  double rate() const { return rate_; }
  bool is_normalizable() const { return shape_ > 0.0 && rate_ > 0.0; }
  double mean() const;

 private:
  double shape_ = 1.0;
  double rate_ = 0.0;
};

GaussianFactor multiply(const GaussianFactor& f, const GaussianFactor& g);
GaussianFactor divide(const GaussianFactor& f, const GaussianFactor& g);
GammaFactor multiply(const GammaFactor& f, const GammaFactor& g);
GammaFactor divide(const GammaFactor& f, const GammaFactor& g);

/// Mean and covariance.  Throws std::domain_error naming the offending
/// coordinate when the factor is not normalizable.
GaussianMoments moments(const GaussianFactor& f);

/// KL(p || q) between two normalizable Gaussians of equal dimension.
double kl_divergence(const GaussianFactor& p, const GaussianFactor& q);

/// Blend in natural parameters: damping * proposed + (1 - damping) * previous.
GaussianFactor damp(const GaussianFactor& proposed,
                    const GaussianFactor& previous, double damping);
GammaFactor damp(const GammaFactor& proposed, const GammaFactor& previous,
                 double damping);

/// Infinity norm of the natural-parameter difference.
double max_abs_difference(const GaussianFactor& f, const GaussianFactor& g);
double max_abs_difference(const GammaFactor& f, const GammaFactor& g);

/// Symmetrizes a covariance and floors its eigenvalues at `floor`.
Eigen::MatrixXd regularize_covariance(const Eigen::MatrixXd& cov,
                                      double floor = 1e-10);

}  // namespace cep

#endif  // CEP_EXPFAM_HPP
