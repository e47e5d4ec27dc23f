#include "cep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cep {

namespace {

void require_pairs(std::size_t a, std::size_t b, const char* name) {
  if (a != b) throw std::invalid_argument(std::string(name) + ": size mismatch");
  if (a == 0) throw std::invalid_argument(std::string(name) + ": empty input");
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
  require_pairs(scores.size(), labels.size(), "auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  double positives = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      const double y = labels[order[k]];
      if (y != 0.0 && y != 1.0) throw std::invalid_argument("auc: labels must be 0 or 1");
      if (y == 1.0) {
        positive_rank_sum += midrank;
        positives += 1.0;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw std::invalid_argument("auc: need both positive and negative labels");
  }
  return (positive_rank_sum - positives * (positives + 1.0) / 2.0) /
         (positives * negatives);
}

double rmse(const std::vector<double>& predictions, const std::vector<double>& truth) {
  require_pairs(predictions.size(), truth.size(), "rmse");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = predictions[i] - truth[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

double test_loglik(const std::vector<double>& probabilities,
                   const std::vector<double>& labels) {
  require_pairs(probabilities.size(), labels.size(), "test_loglik");
  constexpr double kClamp = 1e-15;
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[i], kClamp, 1.0 - kClamp);
    sum += labels[i] == 1.0 ? std::log(p) : std::log1p(-p);
  }
  return sum / static_cast<double>(labels.size());
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("summarize: empty input");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace cep
