#ifndef CEP_STREAMING_HPP
#define CEP_STREAMING_HPP

#include <functional>
#include <optional>
#include <vector>

#include "cep/tensor.hpp"

namespace cep {

/// A group of entries assimilated together.  `entries.dims` carries the
/// stream's declared dimensions.
struct StreamBatch {
  std::size_t id = 0;
  SparseTensor entries;
};

struct AbsorbResult {
  EmbeddingPosterior posterior;
  std::size_t skipped = 0;
};

struct AdfOptions {
  /// Passes over the batch.  Passes after the first divide out the message
  /// each entry contributed earlier in the same batch.
  std::size_t inner_iters = 1;
  TauUpdate tau_update = TauUpdate::kMeansOnly;
  /// Standard deviation of the random prior means stream_run starts from.
  double init_scale = 0.1;
};

/**
 * Assimilates one batch with CEP-1 projections, using the current posterior
 * in place of a cavity.  Entries are processed in order; within an entry the
 * embeddings are updated by mode, then tau.  Throws std::invalid_argument if
 * the batch does not fit the posterior's shape.
 */
AbsorbResult adf_absorb(const EmbeddingPosterior& posterior, const StreamBatch& batch,
                        const AdfOptions& options = {});

/// Splits a tensor into consecutive batches of at most `batch_size` entries,
/// optionally after a seeded shuffle.
std::vector<StreamBatch> make_batches(const SparseTensor& tensor, std::size_t batch_size,
                                      std::optional<std::uint64_t> shuffle_seed = {});

using BatchSource = std::function<std::optional<StreamBatch>()>;

/// Yields the batches of `batches` in order.
BatchSource batch_source(std::vector<StreamBatch> batches);

struct StreamReport {
  std::size_t batches = 0;
  std::size_t skipped = 0;
  std::vector<double> batch_seconds;
  /// Held-out AUC (binary) or RMSE (continuous) per evaluation set.
  std::vector<double> scores;
  double score_mean = 0.0;
  double score_stddev = 0.0;
  EmbeddingPosterior posterior;
};

/**
 * Runs ADF over every batch from `source`, starting from the randomized prior
 * (means drawn with options.init_scale; model.init_scale is not used), then
 * scores each evaluation set.  A malformed batch aborts the stream with
 * std::runtime_error naming the batch position.
 */
StreamReport stream_run(const BatchSource& source, const std::vector<std::size_t>& dims,
                        ValueKind kind, const CpOptions& model,
                        const std::vector<SparseTensor>& eval_sets,
                        const AdfOptions& options = {});

}  // namespace cep

#endif  // CEP_STREAMING_HPP
