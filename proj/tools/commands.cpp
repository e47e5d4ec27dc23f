#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cep/data.hpp"
#include "cep/logistic.hpp"
#include "cep/metrics.hpp"
#include "cep/probit.hpp"
#include "cep/reference.hpp"
#include "cep/streaming.hpp"
#include "cep/tensor.hpp"

namespace cep::cli {

namespace {

enum class ModelKind { kProbit, kLogistic, kCpContinuous, kCpBinary };

ModelKind parse_model(const std::string& name) {
  if (name == "probit") return ModelKind::kProbit;
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "cp-continuous") return ModelKind::kCpContinuous;
  if (name == "cp-binary") return ModelKind::kCpBinary;
  throw std::invalid_argument("unknown model '" + name + "'");
}

bool is_tensor(ModelKind m) {
  return m == ModelKind::kCpContinuous || m == ModelKind::kCpBinary;
}

ValueKind value_kind(ModelKind m) {
  return m == ModelKind::kCpBinary ? ValueKind::kBinary : ValueKind::kContinuous;
}

RegressionLink link_of(ModelKind m) {
  return m == ModelKind::kProbit ? RegressionLink::kProbit : RegressionLink::kLogistic;
}

Method parse_method(const std::string& name) {
  if (name == "ep") return Method::kEp;
  if (name == "cep1") return Method::kCep1;
  if (name == "cep2") return Method::kCep2;
  throw std::invalid_argument("unknown method '" + name + "'");
}

Schedule parse_schedule(const std::string& name) {
  if (name == "seq") return Schedule::kSequential;
  if (name == "par") return Schedule::kParallel;
  throw std::invalid_argument("unknown schedule '" + name + "'");
}

void require_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

// posterior.csv: block,kind,mode,index,component,mean,variance
const char* kPosteriorHeader = "block,kind,mode,index,component,mean,variance";

void write_posterior(const std::filesystem::path& path, const DiagonalPosterior& p) {
  std::ofstream out = open_csv(path);
  out << kPosteriorHeader << '\n';
  for (Eigen::Index m = 0; m < p.mean.size(); ++m) {
    out << m << ",weight,0," << m << ",0," << p.mean(m) << ',' << p.var(m) << '\n';
  }
}

void write_posterior(const std::filesystem::path& path, const EmbeddingPosterior& p) {
  std::ofstream out = open_csv(path);
  out << kPosteriorHeader << '\n';
  std::size_t block = 0;
  for (std::size_t k = 0; k < p.factors.size(); ++k) {
    for (std::size_t i = 0; i < p.factors[k].size(); ++i, ++block) {
      const GaussianMoments m = p.moments(k, i);
      for (Eigen::Index r = 0; r < m.mean.size(); ++r) {
        out << block << ",embedding," << k << ',' << i << ',' << r << ',' << m.mean(r) << ','
            << m.covariance(r, r) << '\n';
      }
    }
  }
  if (p.tau) {
    const double var = p.tau->shape() / (p.tau->rate() * p.tau->rate());
    out << block << ",noise,0,0,0," << p.tau->mean() << ',' << var << '\n';
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

DiagonalPosterior read_weight_posterior(const std::string& path) {
  require_file(path);
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line != kPosteriorHeader) {
    throw std::runtime_error("'" + path + "' is not a posterior summary");
  }
  std::vector<double> mean, var;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 7) {
      throw std::runtime_error(path + ":" + std::to_string(row) + ": expected 7 columns");
    }
    if (cells[1] != "weight") {
      throw std::runtime_error(path + ":" + std::to_string(row) +
                               ": only regression weights are supported");
    }
    mean.push_back(std::stod(cells[5]));
    var.push_back(std::stod(cells[6]));
  }
  if (mean.empty()) throw std::runtime_error("'" + path + "' has no rows");
  return {Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())),
          Eigen::Map<Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(var.size()))};
}

// trace.csv: sweep,max_change,skipped,seconds
void write_trace(const std::filesystem::path& path, const RunReport& report) {
  std::ofstream out = open_csv(path);
  out << "sweep,max_change,skipped,seconds\n";
  for (std::size_t s = 0; s < report.sweeps; ++s) {
    out << s + 1 << ',' << report.max_change[s] << ',' << report.skipped[s] << ','
        << report.seconds[s] << '\n';
  }
}

// predictions.csv: row,target,prediction
void write_predictions(const std::filesystem::path& path, const std::vector<double>& target,
                       const std::vector<double>& prediction) {
  std::ofstream out = open_csv(path);
  out << "row,target,prediction\n";
  for (std::size_t i = 0; i < target.size(); ++i) {
    out << i << ',' << target[i] << ',' << prediction[i] << '\n';
  }
}

// summary.csv and metrics.csv: key,value
using KeyValues = std::vector<std::pair<std::string, std::string>>;

template <typename T>
std::string str(const T& v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

void write_key_values(const std::filesystem::path& path, const std::string& header,
                      const KeyValues& rows) {
  std::ofstream out = open_csv(path);
  out << header << '\n';
  for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
}

double total_seconds(const RunReport& r) {
  double s = 0.0;
  for (double x : r.seconds) s += x;
  return s;
}

std::size_t total_skipped(const RunReport& r) {
  std::size_t s = 0;
  for (std::size_t x : r.skipped) s += x;
  return s;
}

bool all_binary(const std::vector<double>& v) {
  for (double x : v) {
    if (x != 0.0 && x != 1.0) return false;
  }
  return true;
}

KeyValues prediction_metrics(const std::vector<double>& target,
                             const std::vector<double>& prediction) {
  KeyValues rows{{"n", str(target.size())}};
  bool probabilities = true;
  for (double p : prediction) {
    if (!(p >= 0.0 && p <= 1.0)) probabilities = false;
  }
  if (all_binary(target) && probabilities) {
    rows.emplace_back("auc", str(auc(prediction, target)));
    rows.emplace_back("loglik", str(test_loglik(prediction, target)));
  } else {
    rows.emplace_back("rmse", str(rmse(prediction, target)));
  }
  return rows;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

int fit_regression(const FitArgs& args, ModelKind kind, Method method,
                   const SweepOptions& sweep_options, const std::filesystem::path& dir) {
  require_file(args.data);
  const RegressionDataset data = read_regression_csv(args.data);
  std::unique_ptr<FactorizedRegression> model;
  if (kind == ModelKind::kProbit) {
    model = std::make_unique<ProbitModel>(data, method, args.prior_variance);
  } else {
    model = std::make_unique<LogisticModel>(data, method, args.prior_variance, args.quad_order);
  }
  FactorGraphState state = model->make_state();
  RunOptions run;
  run.sweep = sweep_options;
  run.tol = args.tol;
  run.max_sweeps = args.max_sweeps;
  const RunReport report = run_to_convergence(state, *model, run);
  const DiagonalPosterior posterior = regression_posterior(state);

  write_posterior(dir / "posterior.csv", posterior);
  write_trace(dir / "trace.csv", report);
  KeyValues summary{{"model", args.model},
                    {"method", args.method},
                    {"schedule", args.schedule},
                    {"sweeps", str(report.sweeps)},
                    {"converged", report.converged ? "1" : "0"},
                    {"skipped", str(total_skipped(report))},
                    {"seconds", str(total_seconds(report))}};
  write_key_values(dir / "summary.csv", "key,value", summary);

  if (args.test) {
    require_file(*args.test);
    const RegressionDataset test = read_regression_csv(*args.test);
    if (test.dim() != data.dim()) {
      throw std::invalid_argument("test data has a different number of features");
    }
    const QuadratureRule rule = gauss_hermite(args.quad_order);
    std::vector<double> prediction;
    for (Eigen::Index i = 0; i < test.size(); ++i) {
      const Eigen::VectorXd x = test.features.row(i).transpose();
      prediction.push_back(kind == ModelKind::kProbit ? probit_predict(posterior, x)
                                                      : logistic_predict(posterior, x, rule));
    }
    write_predictions(dir / "predictions.csv", to_vector(test.targets), prediction);
  }
  std::cout << args.model << " " << args.method << ": " << report.sweeps << " sweeps, "
            << (report.converged ? "converged" : "not converged") << "\n";
  return 0;
}

int fit_tensor(const FitArgs& args, ModelKind kind, Method method,
               const SweepOptions& sweep_options, const std::filesystem::path& dir) {
  require_cp_method(method);
  require_file(args.data);
  const SparseTensor tensor = read_coo(args.data, value_kind(kind));
  CpFitOptions options;
  options.model.rank = args.rank;
  options.model.prior_variance = args.prior_variance;
  options.model.seed = args.seed;
  options.run.sweep = sweep_options;
  options.run.tol = args.tol;
  options.run.max_sweeps = args.max_sweeps;
  options.restarts = args.restarts;
  options.warmup_sweeps = std::min(options.warmup_sweeps, args.max_sweeps);
  const CpFit fit = fit_cp(tensor, options);
  const EmbeddingPosterior posterior = fit.posterior();

  write_posterior(dir / "posterior.csv", posterior);
  write_trace(dir / "trace.csv", fit.report);
  KeyValues summary{{"model", args.model},
                    {"method", args.method},
                    {"schedule", args.schedule},
                    {"sweeps", str(fit.report.sweeps)},
                    {"converged", fit.report.converged ? "1" : "0"},
                    {"skipped", str(total_skipped(fit.report))},
                    {"seconds", str(total_seconds(fit.report))},
                    {"restart", str(fit.restart)},
                    {kind == ModelKind::kCpBinary ? "train_loglik" : "train_rmse",
                     str(fit.train_score)}};
  write_key_values(dir / "summary.csv", "key,value", summary);

  if (args.test) {
    require_file(*args.test);
    const SparseTensor test = read_coo(*args.test, value_kind(kind));
    if (test.dims != tensor.dims) {
      throw std::invalid_argument("test tensor has different dims");
    }
    write_predictions(dir / "predictions.csv", test.values, cp_predict(posterior, test));
  }
  std::cout << args.model << " cep1: restart " << fit.restart << ", " << fit.report.sweeps
            << " sweeps, " << (fit.report.converged ? "converged" : "not converged") << "\n";
  return 0;
}

}  // namespace

unsigned threads_from_env() {
  const char* value = std::getenv("CEP_THREADS");
  if (value == nullptr || *value == '\0') return std::thread::hardware_concurrency();
  std::size_t used = 0;
  long parsed = -1;
  try {
    parsed = std::stol(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != std::string(value).size() || parsed < 0) {
    throw std::invalid_argument(std::string("CEP_THREADS must be a non-negative integer, got '") +
                                value + "'");
  }
  return static_cast<unsigned>(parsed);
}

int cmd_simulate(const SimulateArgs& args) {
  const ModelKind kind = parse_model(args.model);
  if (!(args.test_fraction > 0.0 && args.test_fraction < 1.0)) {
    throw std::invalid_argument("--test-fraction must lie in (0, 1)");
  }
  if (!std::filesystem::path(args.out).parent_path().empty()) {
    std::filesystem::create_directories(std::filesystem::path(args.out).parent_path());
  }
  if (is_tensor(kind)) {
    const CpSample s =
        gen_cp_tensor(args.dims, args.rank, value_kind(kind), args.tau, args.density, args.seed);
    if (args.test_out) {
      const TrainTest tt = split_entries(s.tensor, args.test_fraction, args.seed);
      write_coo(args.out, tt.train);
      write_coo(*args.test_out, tt.test);
    } else {
      write_coo(args.out, s.tensor);
    }
    return 0;
  }

  FeatureDist features;
  if (args.features == "normal") {
    features = FeatureDist::kStandardNormal;
  } else if (args.features == "gmm5") {
    features = FeatureDist::kGmm5;
  } else {
    throw std::invalid_argument("unknown feature distribution '" + args.features + "'");
  }
  if (!args.test_out) {
    write_regression_csv(args.out, gen_regression(link_of(kind), args.n, args.d, features,
                                                  args.seed).data);
    return 0;
  }
  // Held-out rows share the weights: draw n + n_test rows and cut.
  const auto n_test = static_cast<std::size_t>(
      std::llround(args.test_fraction / (1.0 - args.test_fraction) * static_cast<double>(args.n)));
  const RegressionDataset all =
      gen_regression(link_of(kind), args.n + n_test, args.d, features, args.seed).data;
  const auto n = static_cast<Eigen::Index>(args.n);
  const auto m = static_cast<Eigen::Index>(n_test);
  write_regression_csv(args.out, {all.features.topRows(n), all.targets.head(n)});
  write_regression_csv(*args.test_out, {all.features.bottomRows(m), all.targets.tail(m)});
  return 0;
}

int cmd_fit(const FitArgs& args) {
  const ModelKind kind = parse_model(args.model);
  const Method method = parse_method(args.method);
  SweepOptions sweep_options;
  sweep_options.schedule = parse_schedule(args.schedule);
  sweep_options.damping = args.damping;
  sweep_options.threads = threads_from_env();
  const std::filesystem::path dir = prepare_dir(args.out);
  if (is_tensor(kind)) return fit_tensor(args, kind, method, sweep_options, dir);
  return fit_regression(args, kind, method, sweep_options, dir);
}

int cmd_eval(const EvalArgs& args) {
  if (!args.predictions && !args.posterior) {
    throw std::invalid_argument("eval needs --predictions and/or --posterior");
  }
  KeyValues rows;
  if (args.predictions) {
    require_file(*args.predictions);
    std::ifstream in(*args.predictions);
    std::string line;
    if (!std::getline(in, line) || line != "row,target,prediction") {
      throw std::runtime_error("'" + *args.predictions + "' is not a predictions file");
    }
    std::vector<double> target, prediction;
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      const auto cells = split(line);
      if (cells.size() != 3) {
        throw std::runtime_error(*args.predictions + ":" + std::to_string(row) +
                                 ": expected 3 columns");
      }
      target.push_back(std::stod(cells[1]));
      prediction.push_back(std::stod(cells[2]));
    }
    const KeyValues m = prediction_metrics(target, prediction);
    rows.insert(rows.end(), m.begin(), m.end());
  }
  if (args.posterior) {
    if (!args.model || !args.data) {
      throw std::invalid_argument("KL evaluation needs --model and --data");
    }
    const ModelKind kind = parse_model(*args.model);
    if (is_tensor(kind)) {
      throw std::invalid_argument("KL to a reference posterior is available for probit and logistic only");
    }
    require_file(*args.data);
    const RegressionDataset data = read_regression_csv(*args.data);
    const DiagonalPosterior q = read_weight_posterior(*args.posterior);
    if (q.mean.size() != data.dim()) {
      throw std::invalid_argument("posterior and data dimensions differ");
    }
    ReferenceOptions options;
    options.is_samples = args.is_samples;
    options.seed = args.seed;
    const ReferencePosterior ref =
        reference_posterior(data, link_of(kind), args.prior_variance, q, options);
    rows.emplace_back("kl", str(factorized_kl(ref.marginals, q)));
    rows.emplace_back("reference_method", ref.method);
    rows.emplace_back("reference_ess", str(ref.ess));
    rows.emplace_back("reference_reliable", ref.reliable ? "1" : "0");
  }
  const std::filesystem::path dir = prepare_dir(args.out);
  write_key_values(dir / "metrics.csv", "metric,value", rows);
  for (const auto& [k, v] : rows) std::cout << k << " = " << v << "\n";
  return 0;
}

int cmd_stream(const StreamArgs& args) {
  const ModelKind kind = parse_model(args.model);
  if (!is_tensor(kind)) {
    throw std::invalid_argument("stream supports cp-continuous and cp-binary only");
  }
  require_file(args.data);
  const SparseTensor data = read_coo(args.data, value_kind(kind));
  std::vector<SparseTensor> eval_sets;
  for (const std::string& path : args.test) {
    require_file(path);
    eval_sets.push_back(read_coo(path, value_kind(kind)));
  }
  CpOptions model;
  model.rank = args.rank;
  model.seed = args.seed;
  AdfOptions adf;
  adf.inner_iters = args.inner_iters;
  const std::vector<StreamBatch> batches = make_batches(data, args.batch_size, args.shuffle_seed);
  std::vector<std::size_t> sizes;
  for (const StreamBatch& b : batches) sizes.push_back(b.entries.nnz());
  const StreamReport report =
      stream_run(batch_source(batches), data.dims, value_kind(kind), model, eval_sets, adf);

  const std::filesystem::path dir = prepare_dir(args.out);
  {
    // stream.csv: batch,entries,seconds
    std::ofstream out = open_csv(dir / "stream.csv");
    out << "batch,entries,seconds\n";
    for (std::size_t b = 0; b < report.batches; ++b) {
      out << b << ',' << sizes[b] << ',' << report.batch_seconds[b] << '\n';
    }
  }
  const std::string score = kind == ModelKind::kCpBinary ? "auc" : "rmse";
  KeyValues rows{{"batches", str(report.batches)}, {"skipped", str(report.skipped)}};
  for (std::size_t i = 0; i < report.scores.size(); ++i) {
    rows.emplace_back(score + "_" + std::to_string(i), str(report.scores[i]));
  }
  if (!report.scores.empty()) {
    rows.emplace_back(score + "_mean", str(report.score_mean));
    rows.emplace_back(score + "_stddev", str(report.score_stddev));
  }
  write_key_values(dir / "metrics.csv", "metric,value", rows);
  write_posterior(dir / "posterior.csv", report.posterior);
  for (const auto& [k, v] : rows) std::cout << k << " = " << v << "\n";
  return 0;
}

}  // namespace cep::cli
