#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "cep/data.hpp"
#include "cep/metrics.hpp"
#include "cep/special.hpp"

using namespace cep;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cep_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::set<std::vector<std::size_t>> index_set(const SparseTensor& t) {
  return {t.indices.begin(), t.indices.end()};
}

}  // namespace

TEST_CASE("gen_regression is deterministic per seed") {
  for (auto link : {RegressionLink::kProbit, RegressionLink::kLogistic}) {
    const auto a = gen_regression(link, 500, 4, FeatureDist::kGmm5, 11);
    const auto b = gen_regression(link, 500, 4, FeatureDist::kGmm5, 11);
    const auto c = gen_regression(link, 500, 4, FeatureDist::kGmm5, 12);
    CHECK(a.data.features == b.data.features);
    CHECK(a.data.targets == b.data.targets);
    CHECK(a.weights == b.weights);
    CHECK(a.data.features != c.data.features);
  }
}

TEST_CASE("gen_regression shapes and labels") {
  const auto s = gen_regression(RegressionLink::kProbit, 10000, 4,
                                FeatureDist::kStandardNormal, 1);
  CHECK(s.data.features.rows() == 10000);
  CHECK(s.data.features.cols() == 4);
  CHECK(s.weights.size() == 4);
  for (Eigen::Index i = 0; i < s.data.targets.size(); ++i) {
    const double y = s.data.targets(i);
    CHECK((y == 0.0 || y == 1.0));
  }
  CHECK_THROWS_AS(gen_regression(RegressionLink::kProbit, 0, 4,
                                 FeatureDist::kStandardNormal, 1),
                  std::invalid_argument);
}

TEST_CASE("gmm5 features have mean zero and variance 2.5") {
  // Mixture of N(mu, 1/2) over mu in {-2..2}: variance 1/2 + mean(mu^2) = 2.5.
  const auto s = gen_regression(RegressionLink::kLogistic, 100000, 2,
                                FeatureDist::kGmm5, 5);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const Eigen::VectorXd col = s.data.features.col(j);
    const double mean = col.mean();
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs((col.array() - mean).square().mean() - 2.5) < 0.05);
  }
}

TEST_CASE("labels follow the link on average") {
  // P(y = 1) averaged over data equals the mean of the link at x^T w.
  const auto s = gen_regression(RegressionLink::kProbit, 40000, 3,
                                FeatureDist::kStandardNormal, 3);
  const Eigen::VectorXd eta = s.data.features * s.weights;
  double expected = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) expected += normal_cdf(eta(i));
  expected /= static_cast<double>(eta.size());
  CHECK(std::abs(s.data.targets.mean() - expected) < 0.01);
}

TEST_CASE("gen_cp_tensor examples") {
  SUBCASE("density 1 on 2x2x2 yields 8 entries") {
    const auto s = gen_cp_tensor({2, 2, 2}, 2, ValueKind::kContinuous, 100.0, 1.0, 1);
    CHECK(s.tensor.nnz() == 8);
    CHECK(index_set(s.tensor).size() == 8);
  }
  SUBCASE("tau infinity gives exact CP values") {
    const auto s = gen_cp_tensor({4, 3, 5}, 3, ValueKind::kContinuous,
                                 std::numeric_limits<double>::infinity(), 0.5, 2);
    for (std::size_t e = 0; e < s.tensor.nnz(); ++e) {
      CHECK(s.tensor.values[e] == doctest::Approx(cp_value(s.embeddings, s.tensor.indices[e])));
    }
  }
  SUBCASE("cp_value by hand") {
    std::vector<Eigen::MatrixXd> u(2, Eigen::MatrixXd(2, 2));
    u[0] << 1, 2, 3, 4;
    u[1] << 5, 6, 7, 8;
    CHECK(cp_value(u, {1, 0}) == doctest::Approx(3 * 5 + 4 * 6));
  }
  SUBCASE("binary entries with a large inner product are mostly one") {
    const auto s = gen_cp_tensor({30, 30, 30}, 3, ValueKind::kBinary, 1.0, 0.3, 3);
    std::size_t big = 0, ones = 0;
    for (std::size_t e = 0; e < s.tensor.nnz(); ++e) {
      if (cp_value(s.embeddings, s.tensor.indices[e]) > 2.0) {
        ++big;
        ones += s.tensor.values[e] == 1.0;
      }
    }
    REQUIRE(big > 100);
    CHECK(static_cast<double>(ones) / static_cast<double>(big) > 0.95);
  }
  SUBCASE("entry count and determinism") {
    const auto a = gen_cp_tensor({20, 20, 20}, 3, ValueKind::kContinuous, 100.0, 0.15, 4);
    const auto b = gen_cp_tensor({20, 20, 20}, 3, ValueKind::kContinuous, 100.0, 0.15, 4);
    CHECK(a.tensor.nnz() == 1200);
    CHECK(a.tensor.indices == b.tensor.indices);
    CHECK(a.tensor.values == b.tensor.values);
    CHECK_NOTHROW(validate(a.tensor));
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(gen_cp_tensor({3}, 1, ValueKind::kBinary, 1.0, 0.5, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(gen_cp_tensor({3, 3}, 1, ValueKind::kBinary, 1.0, 0.0, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(gen_cp_tensor({3, 3}, 0, ValueKind::kBinary, 1.0, 0.5, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("split_entries partitions the entries") {
  const auto s = gen_cp_tensor({10, 10, 10}, 2, ValueKind::kContinuous, 100.0, 0.3, 5);
  const auto tt = split_entries(s.tensor, 0.2, 9);
  CHECK(tt.train.nnz() + tt.test.nnz() == s.tensor.nnz());
  CHECK(tt.test.nnz() == 60);
  auto all = index_set(tt.train);
  for (const auto& idx : tt.test.indices) CHECK(all.insert(idx).second);
  CHECK(all == index_set(s.tensor));
}

TEST_CASE("split_tensor_folds follows the protocol") {
  SparseTensor nz;
  nz.dims = {30, 30, 30};
  nz.kind = ValueKind::kBinary;
  std::mt19937_64 rng(1);
  std::set<std::vector<std::size_t>> cells;
  std::uniform_int_distribution<std::size_t> pick(0, 29);
  while (cells.size() < 100) cells.insert({pick(rng), pick(rng), pick(rng)});
  for (const auto& c : cells) {
    nz.indices.push_back(c);
    nz.values.push_back(1.0);
  }

  const auto folds = split_tensor_folds(nz, 5, 0.001, 3);
  REQUIRE(folds.size() == 5);
  std::set<std::vector<std::size_t>> test_nonzeros;
  for (const auto& f : folds) {
    std::size_t train_ones = 0, train_zeros = 0;
    for (double v : f.train.values) (v == 1.0 ? train_ones : train_zeros)++;
    CHECK(train_ones == 80);
    CHECK(train_zeros == 80);

    std::size_t test_ones = 0, test_zeros = 0;
    for (std::size_t e = 0; e < f.test.nnz(); ++e) {
      if (f.test.values[e] == 1.0) {
        ++test_ones;
        CHECK(test_nonzeros.insert(f.test.indices[e]).second);
      } else {
        ++test_zeros;
        CHECK(cells.count(f.test.indices[e]) == 0);
      }
    }
    CHECK(test_ones == 20);
    // 0.1% of the 27000 - 100 - 80 cells not yet used.
    CHECK(test_zeros == static_cast<std::size_t>(std::lround(0.001 * (27000 - 180))));

    const auto train_cells = index_set(f.train);
    for (const auto& idx : f.test.indices) CHECK(train_cells.count(idx) == 0);
  }
  CHECK(test_nonzeros == cells);

  const auto again = split_tensor_folds(nz, 5, 0.001, 3);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(again[k].train.indices == folds[k].train.indices);
    CHECK(again[k].test.indices == folds[k].test.indices);
  }
  CHECK_THROWS_AS(split_tensor_folds(nz, 1), std::invalid_argument);
}

TEST_CASE("metric examples") {
  CHECK(auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
  CHECK(auc({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0);
  CHECK(auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
  // One tied positive/negative pair counts one half: (1 + 1 + 0.5 + 1) / 4.
  CHECK(auc({0.1, 0.4, 0.4, 0.9}, {0, 0, 1, 1}) == doctest::Approx(0.875));
  CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), std::invalid_argument);

  CHECK(rmse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(rmse({0.0, 0.0}, {3.0, 4.0}) == doctest::Approx(std::sqrt(12.5)));
  CHECK_THROWS_AS(rmse({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(rmse({1.0}, {1.0, 2.0}), std::invalid_argument);

  CHECK(test_loglik({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == doctest::Approx(std::log(0.5)));
  CHECK(test_loglik({0.8, 0.3}, {1, 0}) ==
        doctest::Approx(0.5 * (std::log(0.8) + std::log(0.7))));
  CHECK(std::isfinite(test_loglik({0.0, 1.0}, {1, 0})));

  const Summary one = summarize({2.0});
  CHECK(one.mean == 2.0);
  CHECK(one.stddev == 0.0);
  const Summary s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
}

TEST_CASE("AUC of random scores on balanced labels is near one half") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> scores, labels;
  for (int i = 0; i < 10000; ++i) {
    scores.push_back(u(rng));
    labels.push_back(i % 2);
  }
  CHECK(std::abs(auc(scores, labels) - 0.5) < 0.02);
}

TEST_CASE("AUC equals the pairwise win rate") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> score(0, 9);
  std::bernoulli_distribution coin(0.4);
  std::vector<double> s, y;
  for (int i = 0; i < 300; ++i) {
    s.push_back(score(rng));
    y.push_back(coin(rng) ? 1.0 : 0.0);
  }
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] == 1.0 && y[j] == 0.0) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
  }
  CHECK(auc(s, y) == doctest::Approx(wins / pairs).epsilon(1e-12));
}

TEST_CASE("regression CSV round trip") {
  const auto s = gen_regression(RegressionLink::kLogistic, 50, 3, FeatureDist::kGmm5, 2);
  const std::string path = temp_path("reg.csv");
  write_regression_csv(path, s.data);
  const RegressionDataset back = read_regression_csv(path);
  CHECK(back.features == s.data.features);
  CHECK(back.targets == s.data.targets);

  write_regression_csv(path, back);
  const std::string first = slurp(path);
  write_regression_csv(path, read_regression_csv(path));
  CHECK(slurp(path) == first);
  std::filesystem::remove(path);
}

TEST_CASE("regression CSV errors") {
  CHECK_THROWS(read_regression_csv(temp_path("does_not_exist.csv")));
  const std::string path = temp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "x1,y\n1.0,0\nabc,1\n";
  }
  CHECK_THROWS_AS(read_regression_csv(path), std::invalid_argument);
  {
    std::ofstream out(path);
    out << "y\n1\n";
  }
  CHECK_THROWS_AS(read_regression_csv(path), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST_CASE("COO round trip") {
  const auto s = gen_cp_tensor({5, 6, 7}, 2, ValueKind::kContinuous, 10.0, 0.2, 6);
  const std::string path = temp_path("t.coo");
  write_coo(path, s.tensor);
  const SparseTensor back = read_coo(path, ValueKind::kContinuous);
  CHECK(back.dims == s.tensor.dims);
  CHECK(back.indices == s.tensor.indices);
  CHECK(back.values == s.tensor.values);
  std::filesystem::remove(path);
}

TEST_CASE("COO errors") {
  const std::string path = temp_path("bad.coo");
  {
    std::ofstream out(path);
    out << "2,2\n0,0,1\n";
  }
  CHECK_THROWS_AS(read_coo(path, ValueKind::kContinuous), std::invalid_argument);
  {
    std::ofstream out(path);
    out << "dims: 2,2\n0,5,1\n";
  }
  CHECK_THROWS_AS(read_coo(path, ValueKind::kContinuous), std::invalid_argument);
  {
    std::ofstream out(path);
    out << "dims: 2,2\n0,1,0.5\n";
  }
  CHECK_THROWS_AS(read_coo(path, ValueKind::kBinary), std::invalid_argument);
  std::filesystem::remove(path);
}
