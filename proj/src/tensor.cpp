#include "cep/tensor.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cep/metrics.hpp"
#include "cep/special.hpp"

namespace cep {

void validate(const SparseTensor& tensor) {
  const std::size_t order = tensor.order();
  if (order < 2) {
    throw std::invalid_argument("tensor: order must be at least 2");
  }
  if (tensor.indices.size() != tensor.values.size()) {
    throw std::invalid_argument("tensor: indices/values size mismatch");
  }
  std::set<std::vector<std::size_t>> seen;
  for (std::size_t e = 0; e < tensor.nnz(); ++e) {
    const auto& idx = tensor.indices[e];
    if (idx.size() != order) {
      std::ostringstream msg;
      msg << "tensor: entry " << e << " has " << idx.size() << " indices, expected "
          << order;
      throw std::invalid_argument(msg.str());
    }
    for (std::size_t k = 0; k < order; ++k) {
      if (idx[k] >= tensor.dims[k]) {
        std::ostringstream msg;
        msg << "tensor: entry " << e << " index " << idx[k] << " out of range for mode "
            << k << " (size " << tensor.dims[k] << ")";
        throw std::invalid_argument(msg.str());
      }
    }
    if (!seen.insert(idx).second) {
      std::ostringstream msg;
      msg << "tensor: duplicate entry at position " << e;
      throw std::invalid_argument(msg.str());
    }
    const double y = tensor.values[e];
    if (!std::isfinite(y)) {
      throw std::invalid_argument("tensor: non-finite value");
    }
    if (tensor.kind == ValueKind::kBinary && y != 0.0 && y != 1.0) {
      throw std::invalid_argument("tensor: binary values must be 0 or 1");
    }
  }
}

SparseTensor select_entries(const SparseTensor& tensor,
                            const std::vector<std::size_t>& entries) {
  SparseTensor out;
  out.dims = tensor.dims;
  out.kind = tensor.kind;
  out.indices.reserve(entries.size());
  out.values.reserve(entries.size());
  for (std::size_t e : entries) {
    out.indices.push_back(tensor.indices.at(e));
    out.values.push_back(tensor.values.at(e));
  }
  return out;
}

GaussianMoments EmbeddingPosterior::moments(std::size_t mode,
                                            std::size_t object) const {
  GaussianMoments m = cep::moments(factors.at(mode).at(object));
  m.covariance = regularize_covariance(m.covariance);
  return m;
}

std::vector<GaussianMoments> EmbeddingPosterior::entry_moments(
    const std::vector<std::size_t>& index) const {
  std::vector<GaussianMoments> out;
  out.reserve(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) out.push_back(moments(k, index[k]));
  return out;
}

CpInner cp_inner(const std::vector<GaussianMoments>& moments, std::size_t excluded) {
  if (moments.empty()) throw std::invalid_argument("cp_inner: no modes");
  const Eigen::Index rank = moments.front().mean.size();
  CpInner out{Eigen::VectorXd::Ones(rank), Eigen::MatrixXd::Ones(rank, rank)};
  for (std::size_t k = 0; k < moments.size(); ++k) {
    if (moments[k].mean.size() != rank || moments[k].covariance.rows() != rank) {
      throw std::invalid_argument("cp_inner: rank mismatch between modes");
    }
    if (k == excluded) continue;
    out.mean.array() *= moments[k].mean.array();
    out.second.array() *= moments[k].second_moment().array();
  }
  return out;
}

double cp_reconstruction(const std::vector<GaussianMoments>& moments) {
  return cp_inner(moments, moments.size()).mean.sum();
}

GaussianFactor cep_update_embedding_continuous(double tau_mean, const CpInner& z,
                                               double y) {
  return GaussianFactor::full(y * tau_mean * z.mean, -0.5 * tau_mean * z.second);
}

GammaFactor cep_update_tau(const std::vector<GaussianMoments>& moments, double y,
                           TauUpdate variant) {
  const CpInner all = cp_inner(moments, moments.size());
  const double recon = all.mean.sum();
  double rate = 0.0;
  if (variant == TauUpdate::kMeansOnly) {
    rate = 0.5 * (y - recon) * (y - recon);
  } else {
    rate = 0.5 * (y * y - 2.0 * y * recon + all.second.sum());
  }
  return {1.5, std::max(rate, 0.0)};
}

std::optional<GaussianFactor> cep_update_embedding_binary(const GaussianFactor& cavity,
                                                          const CpInner& z, double y) {
  const GaussianMoments cav = moments(cavity);
  const double sign = 2.0 * y - 1.0;
  const double s2 = 1.0 + (cav.covariance * z.second).trace();
  if (!(s2 > 0.0)) return std::nullopt;
  const double s = std::sqrt(s2);
  const double t = sign * z.mean.dot(cav.mean) / s;
  const double r = pdf_over_cdf(t);
  const Eigen::VectorXd sz = cav.covariance * z.mean;
  const Eigen::VectorXd mean = cav.mean + sz * (sign * r / s);
  const Eigen::MatrixXd cov =
      cav.covariance - sz * sz.transpose() * (r * (r + t) / s2);
  try {
    const GaussianFactor proposal = GaussianFactor::from_moments(mean, cov);
    return divide(proposal, cavity.to_full());
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
}

void require_cp_method(Method method) {
  if (method == Method::kEp) {
    throw std::invalid_argument(
        "EP is not available for the CP tensor model: the moment matching of "
        "an embedding under the multilinear likelihood has no tractable form; "
        "use cep1");
  }
  if (method == Method::kCep2) {
    throw std::invalid_argument(
        "CEP-2 is not implemented for the CP tensor model; use cep1");
  }
}

CpModel::CpModel(const SparseTensor& tensor, CpOptions options)
    : tensor_(tensor), options_(options) {
  validate(tensor);
  if (options_.rank < 1) throw std::invalid_argument("CpModel: rank must be >= 1");
  if (!(options_.prior_variance > 0.0)) {
    throw std::invalid_argument("CpModel: prior variance must be positive");
  }
  if (!(options_.tau_shape > 0.0) || !(options_.tau_rate > 0.0)) {
    throw std::invalid_argument("CpModel: tau prior must be a proper Gamma");
  }
  if (!(options_.init_scale >= 0.0)) {
    throw std::invalid_argument("CpModel: init scale must be non-negative");
  }
  mode_offsets_.push_back(0);
  for (std::size_t d : tensor_.dims) mode_offsets_.push_back(mode_offsets_.back() + d);
}

std::size_t CpModel::num_factors() const { return tensor_.nnz(); }

std::vector<std::size_t> CpModel::factor_blocks(std::size_t factor) const {
  const auto& idx = tensor_.indices[factor];
  std::vector<std::size_t> blocks;
  blocks.reserve(idx.size() + 1);
  for (std::size_t k = 0; k < idx.size(); ++k) blocks.push_back(block_of(k, idx[k]));
  if (has_tau()) blocks.push_back(tau_block());
  return blocks;
}

std::vector<Term> CpModel::priors() const {
  const auto rank = static_cast<Eigen::Index>(options_.rank);
  const GaussianFactor embedding = GaussianFactor::full(
      Eigen::VectorXd::Zero(rank),
      (-0.5 / options_.prior_variance) * Eigen::MatrixXd::Identity(rank, rank));
  std::vector<Term> out(tau_block(), embedding);
  if (has_tau()) out.emplace_back(GammaFactor(options_.tau_shape, options_.tau_rate));
  return out;
}

FactorGraphState CpModel::make_state(MessageInit init) const {
  return FactorGraphState(priors(), *this, init);
}

Term CpModel::initial_message(const Edge& edge, const Term& prior,
                              MessageInit init) const {
  Term base = ProjectionModel::initial_message(edge, prior, init);
  auto* gaussian = std::get_if<GaussianFactor>(&base);
  if (gaussian == nullptr || options_.init_scale == 0.0) return base;
  std::seed_seq seq{static_cast<std::uint64_t>(options_.seed),
                    static_cast<std::uint64_t>(edge.factor),
                    static_cast<std::uint64_t>(edge.block)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, options_.init_scale);
  Eigen::VectorXd eta1(gaussian->dim());
  for (Eigen::Index r = 0; r < eta1.size(); ++r) eta1(r) = normal(rng);
  return GaussianFactor::full(std::move(eta1), gaussian->to_full().eta2());
}

std::optional<Term> CpModel::project(const ProjectionRequest& request) const {
  const FactorGraphState& state = request.state;
  const auto& idx = tensor_.indices[request.edge.factor];
  const double y = tensor_.values[request.edge.factor];
  const std::size_t order = idx.size();

  std::vector<GaussianMoments> rows;
  rows.reserve(order);
  for (std::size_t k = 0; k < order; ++k) {
    GaussianMoments m = state.gaussian_moments(block_of(k, idx[k]));
    m.covariance = regularize_covariance(m.covariance);
    rows.push_back(std::move(m));
  }

  if (has_tau() && request.edge.block == tau_block()) {
    const GammaFactor message = cep_update_tau(rows, y, options_.tau_update);
    return multiply(std::get<GammaFactor>(request.cavity), message);
  }

  std::size_t mode = 0;
  while (block_of(mode, idx[mode]) != request.edge.block) ++mode;
  const CpInner z = cp_inner(rows, mode);
  const auto& cavity = std::get<GaussianFactor>(request.cavity);
  if (has_tau()) {
    const double tau_mean =
        pinned_tau_ ? *pinned_tau_
                    : std::get<GammaFactor>(state.posterior(tau_block())).mean();
    return multiply(cavity, cep_update_embedding_continuous(tau_mean, z, y));
  }
  const auto message = cep_update_embedding_binary(cavity, z, y);
  if (!message) return std::nullopt;
  return multiply(cavity, *message);
}

void CpModel::pin_noise_precision(std::optional<double> tau) {
  if (tau && !(*tau > 0.0 && std::isfinite(*tau))) {
    throw std::invalid_argument("CpModel: pinned noise precision must be positive");
  }
  pinned_tau_ = tau;
}

EmbeddingPosterior CpModel::posterior(const FactorGraphState& state) const {
  EmbeddingPosterior out;
  out.rank = options_.rank;
  out.factors.resize(tensor_.order());
  for (std::size_t k = 0; k < tensor_.order(); ++k) {
    out.factors[k].reserve(tensor_.dims[k]);
    for (std::size_t j = 0; j < tensor_.dims[k]; ++j) {
      out.factors[k].push_back(std::get<GaussianFactor>(state.posterior(block_of(k, j))));
    }
  }
  if (has_tau()) out.tau = std::get<GammaFactor>(state.posterior(tau_block()));
  return out;
}

namespace {

constexpr std::uint64_t kPriorMeanSalt = 0x5eed0f9a1d3c2b17ULL;

double training_score(const CpModel& model, const FactorGraphState& state) {
  const SparseTensor& data = model.tensor();
  const std::vector<double> predictions = cp_predict(model.posterior(state), data);
  if (data.kind == ValueKind::kContinuous) return rmse(predictions, data.values);
  return test_loglik(predictions, data.values);
}

}  // namespace

CpFit fit_cp(const SparseTensor& tensor, const CpFitOptions& options) {
  if (options.restarts < 1) throw std::invalid_argument("fit_cp: restarts must be >= 1");
  if (!(options.warmup_snr > 0.0)) {
    throw std::invalid_argument("fit_cp: warm-up SNR must be positive");
  }
  std::optional<double> warmup_tau;
  if (tensor.kind == ValueKind::kContinuous && options.warmup_sweeps > 0 &&
      tensor.nnz() > 0) {
    double power = 0.0;
    for (double y : tensor.values) power += y * y;
    power /= static_cast<double>(tensor.nnz());
    if (power > 0.0) warmup_tau = options.warmup_snr / power;
  }
  const bool continuous = tensor.kind == ValueKind::kContinuous;

  CpFit best;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    CpOptions model_options = options.model;
    model_options.seed = options.model.seed + r;
    auto model = std::make_unique<CpModel>(tensor, model_options);
    auto state = std::make_unique<FactorGraphState>(model->make_state());

    RunReport report;
    std::size_t warmup = 0;
    if (warmup_tau) {
      warmup = std::min(options.warmup_sweeps, options.run.max_sweeps);
      model->pin_noise_precision(warmup_tau);
      for (std::size_t s = 0; s < warmup; ++s) {
        const SweepReport sr = sweep(*state, *model, options.run.sweep);
        report.max_change.push_back(sr.max_change);
        report.seconds.push_back(sr.seconds);
        report.skipped.push_back(sr.skipped);
        if (options.run.observer) options.run.observer(s + 1, *state);
      }
      model->pin_noise_precision(std::nullopt);
    }
    RunOptions rest = options.run;
    rest.max_sweeps = options.run.max_sweeps - warmup;
    if (options.run.observer) {
      rest.observer = [&options, warmup](std::size_t s, const FactorGraphState& st) {
        options.run.observer(warmup + s, st);
      };
    }
    const RunReport tail = run_to_convergence(*state, *model, rest);
    report.max_change.insert(report.max_change.end(), tail.max_change.begin(),
                             tail.max_change.end());
    report.seconds.insert(report.seconds.end(), tail.seconds.begin(), tail.seconds.end());
    report.skipped.insert(report.skipped.end(), tail.skipped.begin(), tail.skipped.end());
    report.sweeps = warmup + tail.sweeps;
    report.converged = tail.converged;

    const double score = training_score(*model, *state);
    const bool better = !best.model ||
                        (continuous ? score < best.train_score : score > best.train_score);
    if (better) {
      best.model = std::move(model);
      best.state = std::move(state);
      best.report = std::move(report);
      best.restart = r;
      best.train_score = score;
    }
  }
  return best;
}

double cp_predict(const EmbeddingPosterior& posterior,
                  const std::vector<std::size_t>& index, ValueKind kind) {
  if (index.size() != posterior.factors.size()) {
    throw std::invalid_argument("cp_predict: index order mismatch");
  }
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= posterior.factors[k].size()) {
      throw std::out_of_range("cp_predict: index out of range");
    }
  }
  const std::vector<GaussianMoments> rows = posterior.entry_moments(index);
  const CpInner all = cp_inner(rows, rows.size());
  const double mean = all.mean.sum();
  if (kind == ValueKind::kContinuous) return mean;
  const double var = std::max(all.second.sum() - mean * mean, 0.0);
  return normal_cdf(mean / std::sqrt(1.0 + var));
}

std::vector<double> cp_predict(const EmbeddingPosterior& posterior,
                               const SparseTensor& entries) {
  std::vector<double> out;
  out.reserve(entries.nnz());
  for (const auto& idx : entries.indices) {
    out.push_back(cp_predict(posterior, idx, entries.kind));
  }
  return out;
}

EmbeddingPosterior prior_posterior(const std::vector<std::size_t>& dims,
                                   ValueKind kind, const CpOptions& options) {
  const auto rank = static_cast<Eigen::Index>(options.rank);
  // Salted so that the means do not reproduce the draws of a generator
  // seeded with the same value.
  std::seed_seq seq{static_cast<std::uint64_t>(options.seed), kPriorMeanSalt};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  EmbeddingPosterior out;
  out.rank = options.rank;
  out.factors.resize(dims.size());
  const Eigen::VectorXd var = Eigen::VectorXd::Constant(rank, options.prior_variance);
  for (std::size_t k = 0; k < dims.size(); ++k) {
    for (std::size_t j = 0; j < dims[k]; ++j) {
      Eigen::VectorXd mean(rank);
      for (Eigen::Index r = 0; r < rank; ++r) mean(r) = options.init_scale * normal(rng);
      out.factors[k].push_back(GaussianFactor::from_moments(mean, var).to_full());
    }
  }
  if (kind == ValueKind::kContinuous) {
    out.tau = GammaFactor(options.tau_shape, options.tau_rate);
  }
  return out;
}

}  // namespace cep
