#include "cep/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "cep/special.hpp"

namespace cep {

namespace {

std::uint64_t total_cells(const std::vector<std::size_t>& dims) {
  std::uint64_t total = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw std::invalid_argument("tensor dims must be positive");
    if (total > std::numeric_limits<std::uint64_t>::max() / d) {
      throw std::invalid_argument("tensor too large to index");
    }
    total *= d;
  }
  return total;
}

std::vector<std::size_t> unravel(std::uint64_t flat, const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> idx(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    idx[k] = static_cast<std::size_t>(flat % dims[k]);
    flat /= dims[k];
  }
  return idx;
}

std::uint64_t ravel(const std::vector<std::size_t>& idx, const std::vector<std::size_t>& dims) {
  std::uint64_t flat = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) flat = flat * dims[k] + idx[k];
  return flat;
}

// Floyd's algorithm: `count` distinct values from [0, total), sorted.
std::vector<std::uint64_t> sample_distinct(std::uint64_t total, std::uint64_t count,
                                           std::mt19937_64& rng) {
  if (count > total) throw std::invalid_argument("cannot sample more cells than exist");
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t j = total - count; j < total; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    const std::uint64_t t = pick(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

// `count` distinct cells from [0, total) avoiding `excluded`, by rejection.
std::vector<std::uint64_t> sample_excluding(std::uint64_t total, std::uint64_t count,
                                            std::unordered_set<std::uint64_t>& excluded,
                                            std::mt19937_64& rng) {
  if (count > total - std::min<std::uint64_t>(total, excluded.size())) {
    throw std::invalid_argument("not enough unobserved cells to sample zeros from");
  }
  std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
  std::vector<std::uint64_t> out;
  out.reserve(static_cast<std::size_t>(count));
  while (out.size() < count) {
    const std::uint64_t c = pick(rng);
    if (excluded.insert(c).second) out.push_back(c);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& field, const std::string& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used == field.size()) return v;
  } catch (const std::exception&) {
  }
  std::ostringstream msg;
  msg << path << ":" << line << ": cannot parse number '" << field << "'";
  throw std::invalid_argument(msg.str());
}

std::size_t parse_index(const std::string& field, const std::string& path, std::size_t line) {
  const double v = parse_double(field, path, line);
  if (v < 0.0 || v != std::floor(v)) {
    std::ostringstream msg;
    msg << path << ":" << line << ": invalid index '" << field << "'";
    throw std::invalid_argument(msg.str());
  }
  return static_cast<std::size_t>(v);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  return out;
}

}  // namespace

RegressionSample gen_regression(RegressionLink link, std::size_t n, std::size_t d,
                                FeatureDist features, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("gen_regression: need n, d >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::uniform_int_distribution<int> component(0, 4);

  RegressionSample out;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(d);
  out.weights.resize(cols);
  for (Eigen::Index m = 0; m < cols; ++m) out.weights(m) = normal(rng);
  out.data.features.resize(rows, cols);
  out.data.targets.resize(rows);
  const double gmm_sd = std::sqrt(0.5);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index m = 0; m < cols; ++m) {
      if (features == FeatureDist::kStandardNormal) {
        out.data.features(i, m) = normal(rng);
      } else {
        const double mu = component(rng) - 2.0;
        out.data.features(i, m) = mu + gmm_sd * normal(rng);
      }
    }
    const double a = out.data.features.row(i).dot(out.weights);
    const double p = link == RegressionLink::kProbit ? normal_cdf(a) : sigmoid(a);
    out.data.targets(i) = uniform(rng) < p ? 1.0 : 0.0;
  }
  return out;
}

double cp_value(const std::vector<Eigen::MatrixXd>& embeddings,
                const std::vector<std::size_t>& index) {
  Eigen::RowVectorXd prod = embeddings.at(0).row(static_cast<Eigen::Index>(index.at(0)));
  for (std::size_t k = 1; k < embeddings.size(); ++k) {
    prod.array() *= embeddings[k].row(static_cast<Eigen::Index>(index.at(k))).array();
  }
  return prod.sum();
}

CpSample gen_cp_tensor(const std::vector<std::size_t>& dims, std::size_t rank,
                       ValueKind kind, double tau, double density, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("gen_cp_tensor: need K >= 2 modes");
  if (rank < 1) throw std::invalid_argument("gen_cp_tensor: rank must be >= 1");
  if (!(tau > 0.0)) throw std::invalid_argument("gen_cp_tensor: tau must be positive");
  if (!(density > 0.0 && density <= 1.0)) {
    throw std::invalid_argument("gen_cp_tensor: density must lie in (0, 1]");
  }
  const std::uint64_t total = total_cells(dims);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  CpSample out;
  for (std::size_t d : dims) {
    Eigen::MatrixXd u(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rank));
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
      for (Eigen::Index r = 0; r < u.cols(); ++r) u(j, r) = normal(rng);
    }
    out.embeddings.push_back(std::move(u));
  }

  const auto count = static_cast<std::uint64_t>(std::llround(density * static_cast<double>(total)));
  const std::vector<std::uint64_t> cells = sample_distinct(total, count, rng);
  const double noise_sd = std::isinf(tau) ? 0.0 : 1.0 / std::sqrt(tau);
  out.tensor.dims = dims;
  out.tensor.kind = kind;
  for (std::uint64_t c : cells) {
    std::vector<std::size_t> idx = unravel(c, dims);
    const double latent = cp_value(out.embeddings, idx) + noise_sd * normal(rng);
    out.tensor.values.push_back(kind == ValueKind::kContinuous ? latent
                                                               : (latent > 0.0 ? 1.0 : 0.0));
    out.tensor.indices.push_back(std::move(idx));
  }
  return out;
}

TrainTest split_entries(const SparseTensor& tensor, double test_fraction,
                        std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw std::invalid_argument("split_entries: fraction must lie in [0, 1]");
  }
  std::vector<std::size_t> order(tensor.nnz());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {select_entries(tensor, train), select_entries(tensor, test)};
}

std::vector<TrainTest> split_tensor_folds(const SparseTensor& nonzeros, std::size_t folds,
                                          double test_zero_rate, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("split_tensor_folds: need at least 2 folds");
  if (!(test_zero_rate >= 0.0 && test_zero_rate <= 1.0)) {
    throw std::invalid_argument("split_tensor_folds: zero rate must lie in [0, 1]");
  }
  const std::uint64_t total = total_cells(nonzeros.dims);
  const std::size_t nnz = nonzeros.nnz();
  std::unordered_set<std::uint64_t> nonzero_cells;
  for (const auto& idx : nonzeros.indices) nonzero_cells.insert(ravel(idx, nonzeros.dims));

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(nnz);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  auto zeros_tensor = [&](const std::vector<std::uint64_t>& cells, SparseTensor& target) {
    for (std::uint64_t c : cells) {
      target.indices.push_back(unravel(c, nonzeros.dims));
      target.values.push_back(0.0);
    }
  };

  std::vector<TrainTest> out;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t begin = f * nnz / folds;
    const std::size_t end = (f + 1) * nnz / folds;
    std::vector<std::size_t> test_ids(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                      order.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<std::size_t> train_ids(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(begin));
    train_ids.insert(train_ids.end(), order.begin() + static_cast<std::ptrdiff_t>(end), order.end());
    std::sort(test_ids.begin(), test_ids.end());
    std::sort(train_ids.begin(), train_ids.end());

    TrainTest split{select_entries(nonzeros, train_ids), select_entries(nonzeros, test_ids)};
    std::unordered_set<std::uint64_t> used = nonzero_cells;
    const std::vector<std::uint64_t> train_zeros =
        sample_excluding(total, train_ids.size(), used, rng);
    zeros_tensor(train_zeros, split.train);

    const std::uint64_t remaining = total - used.size();
    const auto n_test_zeros = static_cast<std::uint64_t>(
        std::llround(test_zero_rate * static_cast<double>(remaining)));
    zeros_tensor(sample_excluding(total, n_test_zeros, used, rng), split.test);
    out.push_back(std::move(split));
  }
  return out;
}

RegressionDataset read_regression_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  const std::size_t columns = split_fields(line).size();
  if (columns < 2) {
    throw std::invalid_argument(path + ": need at least one feature and a label column");
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != columns) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": expected " << columns << " columns, found "
          << fields.size();
      throw std::invalid_argument(msg.str());
    }
    std::vector<double> row;
    row.reserve(columns);
    for (const auto& f : fields) row.push_back(parse_double(f, path, line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no data rows");
  RegressionDataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(columns - 1);
  data.features.resize(n, d);
  data.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index m = 0; m < d; ++m) data.features(i, m) = rows[i][m];
    data.targets(i) = rows[i][columns - 1];
  }
  return data;
}

void write_regression_csv(const std::string& path, const RegressionDataset& data) {
  std::ofstream out = open_output(path);
  for (Eigen::Index m = 0; m < data.dim(); ++m) out << "x" << m + 1 << ",";
  out << "y\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index m = 0; m < data.dim(); ++m) out << data.features(i, m) << ",";
    out << data.targets(i) << "\n";
  }
}

SparseTensor read_coo(const std::string& path, ValueKind kind) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  const std::string header = trim(line);
  const std::string prefix = "dims:";
  if (header.rfind(prefix, 0) != 0) {
    throw std::invalid_argument(path + ":1: expected header 'dims: d1,...,dK'");
  }
  SparseTensor tensor;
  tensor.kind = kind;
  for (const auto& f : split_fields(header.substr(prefix.size()))) {
    tensor.dims.push_back(parse_index(f, path, 1));
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != tensor.order() + 1) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": expected " << tensor.order() + 1
          << " fields, found " << fields.size();
      throw std::invalid_argument(msg.str());
    }
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < tensor.order(); ++k) {
      idx.push_back(parse_index(fields[k], path, line_no));
    }
    tensor.indices.push_back(std::move(idx));
    tensor.values.push_back(parse_double(fields.back(), path, line_no));
  }
  validate(tensor);
  return tensor;
}

void write_coo(const std::string& path, const SparseTensor& tensor) {
  std::ofstream out = open_output(path);
  out << "dims: ";
  for (std::size_t k = 0; k < tensor.order(); ++k) {
    out << (k ? "," : "") << tensor.dims[k];
  }
  out << "\n";
  for (std::size_t e = 0; e < tensor.nnz(); ++e) {
    for (std::size_t i : tensor.indices[e]) out << i << ",";
    out << tensor.values[e] << "\n";
  }
}

}  // namespace cep
