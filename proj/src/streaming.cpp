#include "cep/streaming.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cep/metrics.hpp"

namespace cep {

namespace {

void check_batch(const EmbeddingPosterior& posterior, const StreamBatch& batch) {
  const SparseTensor& t = batch.entries;
  if (t.order() != posterior.factors.size()) {
    throw std::invalid_argument("batch order does not match the posterior");
  }
  for (std::size_t k = 0; k < t.order(); ++k) {
    if (t.dims[k] != posterior.factors[k].size()) {
      throw std::invalid_argument("batch dims do not match the posterior");
    }
  }
  if (t.kind == ValueKind::kContinuous && !posterior.tau) {
    throw std::invalid_argument("continuous batch needs a noise-precision posterior");
  }
  validate(t);
}

// Per-entry messages kept while repeating passes over one batch.
struct LocalMessages {
  std::vector<std::optional<GaussianFactor>> embeddings;
  std::optional<GammaFactor> tau;
};

}  // namespace

AbsorbResult adf_absorb(const EmbeddingPosterior& posterior, const StreamBatch& batch,
                        const AdfOptions& options) {
  if (options.inner_iters < 1) {
    throw std::invalid_argument("adf_absorb: inner_iters must be >= 1");
  }
  AbsorbResult out{posterior, 0};
  if (batch.entries.nnz() == 0) return out;
  check_batch(posterior, batch);

  EmbeddingPosterior& post = out.posterior;
  const SparseTensor& t = batch.entries;
  const std::size_t order = t.order();
  const bool continuous = t.kind == ValueKind::kContinuous;
  const bool keep_local = options.inner_iters > 1;
  std::vector<LocalMessages> local(keep_local ? t.nnz() : 0);
  for (auto& l : local) l.embeddings.resize(order);

  for (std::size_t pass = 0; pass < options.inner_iters; ++pass) {
    for (std::size_t e = 0; e < t.nnz(); ++e) {
      const auto& idx = t.indices[e];
      const double y = t.values[e];
      for (std::size_t k = 0; k < order; ++k) {
        GaussianFactor& row = post.factors[k][idx[k]];
        const std::optional<GaussianFactor>* previous =
            keep_local ? &local[e].embeddings[k] : nullptr;
        const GaussianFactor cavity =
            previous && previous->has_value() ? divide(row, **previous) : row;
        if (!cavity.is_normalizable()) {
          ++out.skipped;
          continue;
        }
        const CpInner z = cp_inner(post.entry_moments(idx), k);
        std::optional<GaussianFactor> message;
        if (continuous) {
          message = cep_update_embedding_continuous(post.tau->mean(), z, y);
        } else {
          message = cep_update_embedding_binary(cavity, z, y);
        }
        if (!message) {
          ++out.skipped;
          continue;
        }
        GaussianFactor proposal = multiply(cavity, *message);
        if (!proposal.is_normalizable()) {
          ++out.skipped;
          continue;
        }
        if (keep_local) local[e].embeddings[k] = *message;
        row = std::move(proposal);
      }
      if (continuous) {
        const GammaFactor cavity =
            keep_local && local[e].tau ? divide(*post.tau, *local[e].tau) : *post.tau;
        if (!cavity.is_normalizable()) {
          ++out.skipped;
          continue;
        }
        const GammaFactor message =
            cep_update_tau(post.entry_moments(idx), y, options.tau_update);
        const GammaFactor proposal = multiply(cavity, message);
        if (!proposal.is_normalizable()) {
          ++out.skipped;
          continue;
        }
        if (keep_local) local[e].tau = message;
        post.tau = proposal;
      }
    }
  }
  return out;
}

std::vector<StreamBatch> make_batches(const SparseTensor& tensor, std::size_t batch_size,
                                      std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size == 0) throw std::invalid_argument("make_batches: batch size must be > 0");
  std::vector<std::size_t> order(tensor.nnz());
  std::iota(order.begin(), order.end(), 0);
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<StreamBatch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<std::size_t> slice(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back({out.size(), select_entries(tensor, slice)});
  }
  return out;
}

BatchSource batch_source(std::vector<StreamBatch> batches) {
  auto shared = std::make_shared<std::vector<StreamBatch>>(std::move(batches));
  auto next = std::make_shared<std::size_t>(0);
  return [shared, next]() -> std::optional<StreamBatch> {
    if (*next >= shared->size()) return std::nullopt;
    return (*shared)[(*next)++];
  };
}

StreamReport stream_run(const BatchSource& source, const std::vector<std::size_t>& dims,
                        ValueKind kind, const CpOptions& model,
                        const std::vector<SparseTensor>& eval_sets,
                        const AdfOptions& options) {
  using Clock = std::chrono::steady_clock;
  if (!(options.init_scale >= 0.0)) {
    throw std::invalid_argument("stream_run: init scale must be non-negative");
  }
  CpOptions initial = model;
  initial.init_scale = options.init_scale;
  StreamReport report;
  report.posterior = prior_posterior(dims, kind, initial);
  while (auto batch = source()) {
    const auto start = Clock::now();
    try {
      if (batch->entries.nnz() > 0 && batch->entries.kind != kind) {
        throw std::invalid_argument("batch value kind differs from the stream");
      }
      AbsorbResult r = adf_absorb(report.posterior, *batch, options);
      report.posterior = std::move(r.posterior);
      report.skipped += r.skipped;
    } catch (const std::invalid_argument& err) {
      std::ostringstream msg;
      msg << "stream aborted at batch position " << report.batches << " (id "
          << batch->id << "): " << err.what();
      throw std::runtime_error(msg.str());
    }
    report.batch_seconds.push_back(
        std::chrono::duration<double>(Clock::now() - start).count());
    ++report.batches;
  }
  for (const SparseTensor& eval : eval_sets) {
    const std::vector<double> predictions = cp_predict(report.posterior, eval);
    report.scores.push_back(kind == ValueKind::kBinary ? auc(predictions, eval.values)
                                                       : rmse(predictions, eval.values));
  }
  if (!report.scores.empty()) {
    const Summary s = summarize(report.scores);
    report.score_mean = s.mean;
    report.score_stddev = s.stddev;
  }
  return report;
}

}  // namespace cep
