#include "cep/engine.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <stdexcept>
#include <thread>

namespace cep {

namespace {

template <typename Op>
Term combine(const Term& f, const Term& g, Op op) {
  return std::visit(
      [&](const auto& a, const auto& b) -> Term {
        using A = std::decay_t<decltype(a)>;
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<A, B>) {
          return op(a, b);
        } else {
          throw std::invalid_argument("Gaussian and Gamma terms do not combine");
        }
      },
      f, g);
}

}  // namespace

Term multiply(const Term& f, const Term& g) {
  return combine(f, g, [](const auto& a, const auto& b) { return multiply(a, b); });
}

Term divide(const Term& f, const Term& g) {
  return combine(f, g, [](const auto& a, const auto& b) { return divide(a, b); });
}

Term damp(const Term& proposed, const Term& previous, double damping) {
  return combine(proposed, previous, [damping](const auto& a, const auto& b) {
    return damp(a, b, damping);
  });
}

double max_abs_difference(const Term& f, const Term& g) {
  return std::visit(
      [](const auto& a, const auto& b) -> double {
        using A = std::decay_t<decltype(a)>;
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<A, B>) {
          return max_abs_difference(a, b);
        } else {
          throw std::invalid_argument("Gaussian and Gamma terms do not compare");
        }
      },
      f, g);
}

bool is_normalizable(const Term& t) {
  return std::visit([](const auto& a) { return a.is_normalizable(); }, t);
}

Term ProjectionModel::initial_message(const Edge&, const Term& prior,
                                      MessageInit init) const {
  if (std::holds_alternative<GammaFactor>(prior)) return GammaFactor::unit();
  const auto& gaussian = std::get<GaussianFactor>(prior);
  GaussianFactor unit = GaussianFactor::unit(gaussian.dim(), gaussian.form());
  if (init == MessageInit::kUnit) return unit;
  const double half_precision = -0.5 / kFlatVariance;
  if (gaussian.is_diagonal()) {
    return GaussianFactor::diagonal(
        unit.eta1(), Eigen::VectorXd::Constant(gaussian.dim(), half_precision));
  }
  return GaussianFactor::full(
      unit.eta1(),
      half_precision * Eigen::MatrixXd::Identity(gaussian.dim(), gaussian.dim()));
}

FactorGraphState::FactorGraphState(std::vector<Term> priors,
                                   const ProjectionModel& model,
                                   MessageInit init)
    : priors_(std::move(priors)) {
  const std::size_t factors = model.num_factors();
  factor_offsets_.reserve(factors + 1);
  factor_offsets_.push_back(0);
  for (std::size_t i = 0; i < factors; ++i) {
    for (std::size_t block : model.factor_blocks(i)) {
      if (block >= priors_.size()) {
        throw std::out_of_range("FactorGraphState: factor references unknown block");
      }
      edges_.push_back({i, block});
    }
    factor_offsets_.push_back(edges_.size());
  }
  messages_.reserve(edges_.size());
  for (const Edge& e : edges_) {
    messages_.push_back(model.initial_message(e, priors_[e.block], init));
  }
  posteriors_ = assemble();
  for (std::size_t b = 0; b < posteriors_.size(); ++b) {
    if (!is_normalizable(posteriors_[b])) {
      throw std::domain_error(
          "FactorGraphState: initial posterior is not normalizable");
    }
  }
}

std::vector<Term> FactorGraphState::assemble() const {
  std::vector<Term> out = priors_;
  for (std::size_t s = 0; s < edges_.size(); ++s) {
    Term& target = out[edges_[s].block];
    target = multiply(target, messages_[s]);
  }
  return out;
}

std::optional<std::size_t> FactorGraphState::find_slot(std::size_t factor,
                                                       std::size_t block) const {
  for (std::size_t s = first_slot(factor); s < end_slot(factor); ++s) {
    if (edges_[s].block == block) return s;
  }
  return std::nullopt;
}

Term FactorGraphState::cavity(std::size_t slot) const {
  return divide(posteriors_[edges_[slot].block], messages_[slot]);
}

GaussianMoments FactorGraphState::gaussian_moments(std::size_t block) const {
  return moments(std::get<GaussianFactor>(posteriors_[block]));
}

double FactorGraphState::assembly_error() const {
  const std::vector<Term> fresh = assemble();
  double worst = 0.0;
  for (std::size_t b = 0; b < fresh.size(); ++b) {
    worst = std::max(worst, max_abs_difference(fresh[b], posteriors_[b]));
  }
  return worst;
}

bool FactorGraphState::rebuild_posteriors() {
  std::vector<Term> fresh = assemble();
  for (const Term& t : fresh) {
    if (!is_normalizable(t)) return false;
  }
  posteriors_ = std::move(fresh);
  return true;
}

std::optional<double> FactorGraphState::apply_message(std::size_t slot,
                                                      const Term& message) {
  const std::size_t block = edges_[slot].block;
  Term updated = multiply(divide(posteriors_[block], messages_[slot]), message);
  if (!is_normalizable(updated)) {
    ++skip_count_;
    return std::nullopt;
  }
  const double change = max_abs_difference(message, messages_[slot]);
  messages_[slot] = message;
  posteriors_[block] = std::move(updated);
  return change;
}

namespace {

using Clock = std::chrono::steady_clock;

std::optional<Term> safe_project(const ProjectionModel& model,
                                 const ProjectionRequest& request) {
  try {
    return model.project(request);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Derives the damped message from a proposal and applies it.
void commit(FactorGraphState& state, std::size_t slot, const Term& cavity,
            const std::optional<Term>& proposal, double damping,
            SweepReport& report) {
  if (!proposal || !is_normalizable(*proposal)) {
    state.count_skip();
    ++report.skipped;
    return;
  }
  Term message;
  try {
    message = damp(divide(*proposal, cavity), state.message(slot), damping);
  } catch (const std::exception&) {
    state.count_skip();
    ++report.skipped;
    return;
  }
  if (auto change = state.apply_message(slot, message)) {
    report.max_change = std::max(report.max_change, *change);
    ++report.updated;
  } else {
    ++report.skipped;
  }
}

}  // namespace

SweepReport sweep(FactorGraphState& state, const ProjectionModel& model,
                  const SweepOptions& options) {
  if (!(options.damping > 0.0 && options.damping <= 1.0)) {
    throw std::invalid_argument("sweep: damping must lie in (0, 1]");
  }
  const auto start = Clock::now();
  SweepReport report;
  const std::size_t slots = state.num_slots();

  if (options.schedule == Schedule::kSequential) {
    for (std::size_t slot = 0; slot < slots; ++slot) {
      const Term cavity = state.cavity(slot);
      if (!is_normalizable(cavity)) {
        state.count_skip();
        ++report.skipped;
        continue;
      }
      const ProjectionRequest request{slot, state.edge(slot), cavity, state};
      commit(state, slot, cavity, safe_project(model, request),
             options.damping, report);
    }
  } else {
    // Projection phase: read-only over the frozen state.
    std::vector<std::optional<Term>> cavities(slots);
    std::vector<std::optional<Term>> proposals(slots);
    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t slot = begin; slot < end; ++slot) {
        Term cavity = state.cavity(slot);
        if (!is_normalizable(cavity)) continue;
        const ProjectionRequest request{slot, state.edge(slot), cavity, state};
        proposals[slot] = safe_project(model, request);
        cavities[slot] = std::move(cavity);
      }
    };
    const unsigned workers =
        std::max(1u, std::min<unsigned>(options.threads,
                                         static_cast<unsigned>(slots)));
    if (workers <= 1) {
      work(0, slots);
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (slots + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(slots, begin + chunk);
        if (begin < end) pool.emplace_back(work, begin, end);
      }
    }
    // Apply phase: serialized.
    for (std::size_t slot = 0; slot < slots; ++slot) {
      if (!cavities[slot]) {
        state.count_skip();
        ++report.skipped;
        continue;
      }
      commit(state, slot, *cavities[slot], proposals[slot], options.damping,
             report);
    }
  }

  report.assembly_error = state.assembly_error();
  state.rebuild_posteriors();
  report.seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

RunReport run_to_convergence(FactorGraphState& state,
                             const ProjectionModel& model,
                             const RunOptions& options) {
  if (!(options.tol > 0.0)) {
    throw std::invalid_argument("run_to_convergence: tol must be positive");
  }
  RunReport report;
  for (std::size_t s = 0; s < options.max_sweeps; ++s) {
    const SweepReport sr = sweep(state, model, options.sweep);
    report.max_change.push_back(sr.max_change);
    report.seconds.push_back(sr.seconds);
    report.skipped.push_back(sr.skipped);
    report.sweeps = s + 1;
    if (options.observer) options.observer(report.sweeps, state);
    const bool stalled = sr.updated == 0 && sr.skipped > 0;
    if (sr.max_change < options.tol && !stalled) {
      report.converged = true;
      break;
    }
  }
  return report;
}

}  // namespace cep
