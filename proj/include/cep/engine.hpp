#ifndef CEP_ENGINE_HPP
#define CEP_ENGINE_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "cep/expfam.hpp"

namespace cep {

/// A message, prior or posterior for one variable block.
using Term = std::variant<GaussianFactor, GammaFactor>;

Term multiply(const Term& f, const Term& g);
Term divide(const Term& f, const Term& g);
Term damp(const Term& proposed, const Term& previous, double damping);
double max_abs_difference(const Term& f, const Term& g);
bool is_normalizable(const Term& t);

enum class MessageInit {
  kUnit,          ///< all natural parameters zero
  kFlatGaussian,  ///< N(0, kFlatVariance) per coordinate; Gamma messages unit
};
inline constexpr double kFlatVariance = 1e6;

/// One message slot: the message from likelihood factor `factor` to `block`.
struct Edge {
  std::size_t factor = 0;
  std::size_t block = 0;
};

class FactorGraphState;

struct ProjectionRequest {
  std::size_t slot;
  const Edge& edge;
  /// Posterior of the block with this slot's message divided out.
  const Term& cavity;
  const FactorGraphState& state;
};

/**
 * A model plugs its likelihood factors into the engine by describing which
 * blocks each factor touches and by projecting one (factor, block) pair at a
 * time.  `project` returns the proposed new posterior for the block (q*); the
 * engine derives the message as q* / cavity.  Returning nullopt (or throwing)
 * skips the update.
 *
 * Implementations must be safe to call concurrently: the parallel schedule
 * issues projections against a frozen state from several threads.
 */
class ProjectionModel {
 public:
  virtual ~ProjectionModel() = default;

  virtual std::size_t num_factors() const = 0;
  /// Blocks touched by `factor`, each at most once, in update order.
  virtual std::vector<std::size_t> factor_blocks(std::size_t factor) const = 0;
  virtual std::optional<Term> project(const ProjectionRequest& request) const = 0;

  /// Starting message for an edge.  The default honours `init`.
  virtual Term initial_message(const Edge& edge, const Term& prior,
                               MessageInit init) const;
};

/**
 * Message store plus posterior.  posterior[b] = prior[b] * prod of messages
 * into b, maintained incrementally and rebuilt exactly after each sweep.
 */
class FactorGraphState {
 public:
  FactorGraphState(std::vector<Term> priors, const ProjectionModel& model,
                   MessageInit init = MessageInit::kFlatGaussian);

  std::size_t num_blocks() const { return priors_.size(); }
  std::size_t num_factors() const { return factor_offsets_.size() - 1; }
  std::size_t num_slots() const { return edges_.size(); }

  const Term& prior(std::size_t block) const { return priors_[block]; }
  const Term& posterior(std::size_t block) const { return posteriors_[block]; }
  const Term& message(std::size_t slot) const { return messages_[slot]; }
  const Edge& edge(std::size_t slot) const { return edges_[slot]; }

  std::size_t first_slot(std::size_t factor) const {
    return factor_offsets_[factor];
  }
  std::size_t end_slot(std::size_t factor) const {
    return factor_offsets_[factor + 1];
  }
  /// Slot of the message from `factor` to `block`, if that edge exists.
  std::optional<std::size_t> find_slot(std::size_t factor,
                                       std::size_t block) const;

  /// posterior(edge.block) / message(slot).
  Term cavity(std::size_t slot) const;

  /// Posterior of a Gaussian block, as moments.
  GaussianMoments gaussian_moments(std::size_t block) const;

  std::size_t skip_count() const { return skip_count_; }

  /// Largest natural-parameter deviation between the stored posteriors and
  /// prior * messages.
  double assembly_error() const;

  /// Recomputes every posterior from the prior and the stored messages.
  /// Keeps the current posteriors and returns false if any recomputed one is
  /// not normalizable.
  bool rebuild_posteriors();

  /// Installs `message` in `slot` if the resulting posterior is normalizable.
  /// Returns the natural-parameter change, or nullopt (and counts a skip) if
  /// the update was rejected.
  std::optional<double> apply_message(std::size_t slot, const Term& message);

  void count_skip() { ++skip_count_; }

 private:
  std::vector<Term> assemble() const;

  std::vector<Term> priors_;
  std::vector<Term> posteriors_;
  std::vector<Term> messages_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> factor_offsets_;
  std::size_t skip_count_ = 0;
};

enum class Schedule { kSequential, kParallel };

struct SweepOptions {
  Schedule schedule = Schedule::kSequential;
  double damping = 1.0;
  /// Worker threads for the parallel schedule's projection phase; 0 or 1 runs
  /// the projections on the calling thread.
  unsigned threads = 0;
};

struct SweepReport {
  double max_change = 0.0;
  std::size_t updated = 0;
  std::size_t skipped = 0;
  double assembly_error = 0.0;
  double seconds = 0.0;
};

/// Visits every message once.
SweepReport sweep(FactorGraphState& state, const ProjectionModel& model,
                  const SweepOptions& options = {});

struct RunOptions {
  SweepOptions sweep;
  double tol = 1e-6;
  std::size_t max_sweeps = 100;
  /// Called after every sweep with the 1-based sweep index.
  std::function<void(std::size_t, const FactorGraphState&)> observer;
};

struct RunReport {
  std::vector<double> max_change;
  std::vector<double> seconds;
  std::vector<std::size_t> skipped;
  std::size_t sweeps = 0;
  bool converged = false;
};

/// Sweeps until the largest message change falls below `tol` or
/// `max_sweeps` is reached.  A sweep in which every update was skipped does
/// not count as converged.  The final state is left in `state`.
RunReport run_to_convergence(FactorGraphState& state,
                             const ProjectionModel& model,
                             const RunOptions& options);

}  // namespace cep

#endif  // CEP_ENGINE_HPP
