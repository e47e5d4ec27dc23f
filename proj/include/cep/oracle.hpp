#ifndef CEP_ORACLE_HPP
#define CEP_ORACLE_HPP

#include <cstdint>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "cep/expfam.hpp"

namespace cep {

/// Unnormalized log density of a point.
using LogDensity = std::function<double(const Eigen::VectorXd&)>;

/// Unnormalized log density of each column of a d x B sample matrix.
using BatchLogDensity = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Box spanning mean +/- width standard deviations per coordinate.
Box box_around(const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
               double width = 8.0);

struct GridResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  /// Integral of exp(log_density) over the box.
  double normalizer = 0.0;
  double log_normalizer = 0.0;
  /// Largest change of a mean when the grid spacing is halved, if requested.
  std::optional<double> refinement_change;
};

/**
 * Moments of a density on a box by the tensor-product trapezoid rule with
 * `resolution` points per dimension.  Supports d <= 3.  With `self_check` the
 * computation is repeated at twice the density of points.
 */
GridResult grid_posterior(const LogDensity& log_density, const Box& box,
                          int resolution, bool self_check = false);

struct IsResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  /// Standard errors of the mean estimates.
  Eigen::VectorXd mean_se;
  double ess = 0.0;
  /// False when the effective sample size is below 100.
  bool reliable = false;
};

inline constexpr double kMinReliableEss = 100.0;

/**
 * Self-normalized importance sampling with a Gaussian proposal.  Samples are
 * drawn deterministically from `seed` and evaluated in batches.  Throws
 * std::invalid_argument for n == 0 or a non-normalizable proposal.
 */
IsResult is_moments(const BatchLogDensity& log_target, const GaussianFactor& proposal,
                    std::size_t n, std::uint64_t seed, std::size_t batch = 4096);

IsResult is_moments(const LogDensity& log_target, const GaussianFactor& proposal,
                    std::size_t n, std::uint64_t seed);

}  // namespace cep

#endif  // CEP_ORACLE_HPP
