#ifndef CEP_TENSOR_HPP
#define CEP_TENSOR_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cep/engine.hpp"
#include "cep/regression.hpp"

namespace cep {

enum class ValueKind { kContinuous, kBinary };

/// Observed entries of a K-mode tensor.  Indices are 0-based.
struct SparseTensor {
  std::vector<std::size_t> dims;
  std::vector<std::vector<std::size_t>> indices;
  std::vector<double> values;
  ValueKind kind = ValueKind::kContinuous;

  std::size_t order() const { return dims.size(); }
  std::size_t nnz() const { return values.size(); }
};

/// Throws std::invalid_argument for K < 2, out-of-range or duplicate indices,
/// or non-binary values in a binary tensor.
void validate(const SparseTensor& tensor);

/// Subset of entries, in the given order.
SparseTensor select_entries(const SparseTensor& tensor,
                            const std::vector<std::size_t>& entries);

/// Per-mode, per-object Gaussian posteriors over R-dim embeddings, plus the
/// noise precision for continuous data.
struct EmbeddingPosterior {
  std::size_t rank = 0;
  std::vector<std::vector<GaussianFactor>> factors;
  std::optional<GammaFactor> tau;

  /// Moments of the embedding of `object` in `mode`, covariance symmetrized
  /// and floored.
  GaussianMoments moments(std::size_t mode, std::size_t object) const;
  /// Moments of the K embeddings touched by one index tuple.
  std::vector<GaussianMoments> entry_moments(const std::vector<std::size_t>& index) const;
};

/// First and second moments of z = Hadamard product of the embeddings of
/// every mode except the excluded one.
struct CpInner {
  Eigen::VectorXd mean;
  Eigen::MatrixXd second;
};

/// Pass `excluded == moments.size()` to include every mode.  Throws on a rank
/// mismatch.
CpInner cp_inner(const std::vector<GaussianMoments>& moments, std::size_t excluded);

/// 1^T (Hadamard product of the embedding means).
double cp_reconstruction(const std::vector<GaussianMoments>& moments);

/// Message to an embedding from a continuous entry: natural parameters
/// eta1 = y E[tau] E[z], eta2 = -1/2 E[tau] E[z z^T].
GaussianFactor cep_update_embedding_continuous(double tau_mean, const CpInner& z,
                                               double y);

enum class TauUpdate {
  /// b = 1/2 (y - 1^T (Hadamard product of means))^2.
  kMeansOnly,
  /// b = 1/2 E[(y - 1^T (Hadamard product of embeddings))^2].
  kFullExpectation,
};

/// Gamma message Gam(3/2, b) to the noise precision from one entry.
GammaFactor cep_update_tau(const std::vector<GaussianMoments>& moments, double y,
                           TauUpdate variant = TauUpdate::kMeansOnly);

/**
 * Message to an embedding from a binary entry under the probit link, with the
 * conditional moments expanded to first order in z.  Returns nullopt if the
 * implied covariance is not positive definite.
 */
std::optional<GaussianFactor> cep_update_embedding_binary(const GaussianFactor& cavity,
                                                          const CpInner& z, double y);

/// Throws std::invalid_argument unless `method` is CEP-1, with an explanation
/// of why the alternatives are unavailable for this model.
void require_cp_method(Method method);

struct CpOptions {
  std::size_t rank = 3;
  double prior_variance = 1.0;
  double tau_shape = 1.0;
  double tau_rate = 1.0;
  TauUpdate tau_update = TauUpdate::kMeansOnly;
  /// Standard deviation of the random precision-mean of initial messages.
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

/**
 * CP decomposition with CEP-1 updates.  Blocks are the embedding rows ordered
 * by mode then object, followed by the noise precision for continuous data.
 * Each observed entry touches its K embedding rows and, if continuous, tau.
 */
class CpModel : public ProjectionModel {
 public:
  CpModel(const SparseTensor& tensor, CpOptions options);

  std::size_t num_factors() const override;
  std::vector<std::size_t> factor_blocks(std::size_t factor) const override;
  std::optional<Term> project(const ProjectionRequest& request) const override;
  Term initial_message(const Edge& edge, const Term& prior,
                       MessageInit init) const override;

  std::vector<Term> priors() const;
  FactorGraphState make_state(MessageInit init = MessageInit::kFlatGaussian) const;

  std::size_t block_of(std::size_t mode, std::size_t object) const {
    return mode_offsets_[mode] + object;
  }
  std::size_t tau_block() const { return mode_offsets_.back(); }
  bool has_tau() const { return tensor_.kind == ValueKind::kContinuous; }

  EmbeddingPosterior posterior(const FactorGraphState& state) const;
  const CpOptions& options() const { return options_; }
  const SparseTensor& tensor() const { return tensor_; }

  /// While set, embedding updates use this noise precision in place of the
  /// posterior mean of tau.  The tau messages keep updating.  Only change it
  /// between sweeps.
  void pin_noise_precision(std::optional<double> tau);
  std::optional<double> pinned_noise_precision() const { return pinned_tau_; }

 private:
  const SparseTensor& tensor_;
  CpOptions options_;
  std::vector<std::size_t> mode_offsets_;
  std::optional<double> pinned_tau_;
};

struct CpFitOptions {
  CpOptions model;
  /// max_sweeps counts the warm-up sweeps too.
  RunOptions run{.sweep = {}, .tol = 1e-6, .max_sweeps = 50, .observer = {}};
  /// Independent fits with seeds model.seed, model.seed + 1, ...; the one
  /// with the best training fit is kept.
  std::size_t restarts = 8;
  /// Continuous data only: sweeps run with the noise precision pinned at
  /// warmup_snr / mean(y^2) before tau is learned.  Starting from a vague
  /// tau lets the prior shrink whole components to zero, and a zero
  /// component receives no further signal.
  std::size_t warmup_sweeps = 10;
  double warmup_snr = 300.0;
};

/// A fitted CP model.  `state` refers to `model`, which refers to the
/// training tensor passed to fit_cp; that tensor must outlive the result.
struct CpFit {
  std::unique_ptr<CpModel> model;
  std::unique_ptr<FactorGraphState> state;
  RunReport report;
  std::size_t restart = 0;
  /// Training RMSE (continuous) or mean training log-likelihood (binary).
  double train_score = 0.0;

  EmbeddingPosterior posterior() const { return model->posterior(*state); }
};

/// Runs the restarts and returns the best one.  The observer in
/// options.run, if any, sees every sweep of every restart.
CpFit fit_cp(const SparseTensor& tensor, const CpFitOptions& options);

/// Predictive mean of a continuous entry or probability of a binary one.
double cp_predict(const EmbeddingPosterior& posterior,
                  const std::vector<std::size_t>& index, ValueKind kind);

std::vector<double> cp_predict(const EmbeddingPosterior& posterior,
                               const SparseTensor& entries);

/// Prior-only posterior.  Means are drawn from N(0, init_scale^2) so that the
/// first-order updates are not stuck at the all-zero saddle.
EmbeddingPosterior prior_posterior(const std::vector<std::size_t>& dims,
                                   ValueKind kind, const CpOptions& options);

}  // namespace cep

#endif  // CEP_TENSOR_HPP
