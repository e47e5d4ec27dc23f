#ifndef CEP_METRICS_HPP
#define CEP_METRICS_HPP

#include <vector>

namespace cep {

/// Area under the ROC curve from scores and {0,1} labels, via the rank-sum
/// statistic with midranks for ties.  Throws if either class is absent.
double auc(const std::vector<double>& scores, const std::vector<double>& labels);

/// Root mean squared error.  Throws on empty or mismatched input.
double rmse(const std::vector<double>& predictions, const std::vector<double>& truth);

/// Mean log predictive probability of {0,1} labels given P(y = 1).
/// Probabilities are clamped to [1e-15, 1 - 1e-15].
double test_loglik(const std::vector<double>& probabilities,
                   const std::vector<double>& labels);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Mean and sample standard deviation (zero for a single value).
Summary summarize(const std::vector<double>& values);

}  // namespace cep

#endif  // CEP_METRICS_HPP
