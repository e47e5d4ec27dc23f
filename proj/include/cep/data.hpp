#ifndef CEP_DATA_HPP
#define CEP_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cep/regression.hpp"
#include "cep/tensor.hpp"

namespace cep {

enum class RegressionLink { kProbit, kLogistic };
enum class FeatureDist {
  kStandardNormal,
  /// Equal-weight mixture of N(mu, 1/2) with mu in {-2, -1, 0, 1, 2}.
  kGmm5,
};

struct RegressionSample {
  RegressionDataset data;
  Eigen::VectorXd weights;
};

/// Weights ~ N(0, I); labels drawn from the link.  Deterministic per seed.
RegressionSample gen_regression(RegressionLink link, std::size_t n, std::size_t d,
                                FeatureDist features, std::uint64_t seed);

struct CpSample {
  SparseTensor tensor;
  /// Per mode, a d_k x R matrix of true embeddings (rows ~ N(0, I)).
  std::vector<Eigen::MatrixXd> embeddings;
};

/**
 * Samples round(density * prod(dims)) distinct entries uniformly.  Continuous
 * values are the CP value plus N(0, 1/tau) noise; binary values are
 * 1{CP value + N(0, 1/tau) noise > 0}, i.e. P(y = 1) = Phi(sqrt(tau) * CP).
 * tau = infinity gives noise-free values.  Entries are listed in increasing
 * row-major order.
 */
CpSample gen_cp_tensor(const std::vector<std::size_t>& dims, std::size_t rank,
                       ValueKind kind, double tau, double density, std::uint64_t seed);

/// Exact CP value 1^T (Hadamard product of embedding rows).
double cp_value(const std::vector<Eigen::MatrixXd>& embeddings,
                const std::vector<std::size_t>& index);

/// Random split of observed entries into train and test parts.
struct TrainTest {
  SparseTensor train;
  SparseTensor test;
};
TrainTest split_entries(const SparseTensor& tensor, double test_fraction,
                        std::uint64_t seed);

/**
 * Cross-validation folds for a binary tensor whose listed entries are its
 * nonzeros.  Nonzeros are shuffled into `folds` parts.  For each fold the
 * training set holds the other parts plus an equal number of zeros sampled
 * uniformly from the unlisted cells; the test set holds the fold's nonzeros
 * plus round(test_zero_rate * remaining zeros) further zeros, sampled from
 * the cells not used for training.  Deterministic per seed.
 */
std::vector<TrainTest> split_tensor_folds(const SparseTensor& nonzeros,
                                          std::size_t folds = 5,
                                          double test_zero_rate = 0.001,
                                          std::uint64_t seed = 0);

/// CSV with a header row; the last column is the target.
RegressionDataset read_regression_csv(const std::string& path);
void write_regression_csv(const std::string& path, const RegressionDataset& data);

/// COO text: header "dims: d1,...,dK", then "i1,...,iK,value" per line.
SparseTensor read_coo(const std::string& path, ValueKind kind);
void write_coo(const std::string& path, const SparseTensor& tensor);

}  // namespace cep

#endif  // CEP_DATA_HPP
