#ifndef CEP_REFERENCE_HPP
#define CEP_REFERENCE_HPP

#include <cstdint>
#include <string>

#include "cep/data.hpp"
#include "cep/regression.hpp"

namespace cep {

/// Unnormalized log posterior of a binary regression model with prior
/// N(0, prior_variance I), evaluated at each column of `weights` (d x B).
Eigen::VectorXd regression_log_posterior(const RegressionDataset& data, RegressionLink link,
                                         double prior_variance,
                                         const Eigen::MatrixXd& weights);

struct ReferenceOptions {
  /// Grid points per dimension for d <= 3; 0 picks 2001, 201 or 61.
  int grid_resolution = 0;
  /// Importance samples for d > 3.
  std::size_t is_samples = 1'000'000;
  std::uint64_t seed = 0;
  /// The proposal (and grid box) is the guide with variances scaled by this.
  double guide_inflation = 4.0;
};

struct ReferencePosterior {
  DiagonalPosterior marginals;
  /// "grid" or "is".
  std::string method;
  /// Effective sample size; the number of grid points for the grid.
  double ess = 0.0;
  bool reliable = true;
};

/**
 * Per-coordinate means and variances of the exact posterior.  Dimensions up
 * to 3 use the trapezoid grid on a box of +/- 8 inflated guide standard
 * deviations; higher dimensions use self-normalized importance sampling with
 * the inflated guide as proposal.  `guide` is usually an approximate
 * posterior of the same model.
 */
ReferencePosterior reference_posterior(const RegressionDataset& data, RegressionLink link,
                                       double prior_variance, const DiagonalPosterior& guide,
                                       const ReferenceOptions& options = {});

/// Sum over coordinates of KL(N(p_m) || N(q_m)).
double factorized_kl(const DiagonalPosterior& p, const DiagonalPosterior& q);

}  // namespace cep

#endif  // CEP_REFERENCE_HPP
