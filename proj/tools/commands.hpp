#ifndef CEP_TOOLS_COMMANDS_HPP
#define CEP_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cep::cli {

struct SimulateArgs {
  std::string model = "probit";
  std::string out;
  std::optional<std::string> test_out;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  // Regression
  std::size_t n = 10000;
  std::size_t d = 4;
  std::string features = "normal";
  // Tensor
  std::vector<std::size_t> dims{20, 20, 20};
  std::size_t rank = 3;
  double tau = 100.0;
  double density = 0.15;
};

struct FitArgs {
  std::string model;
  std::string method = "cep1";
  std::string data;
  std::optional<std::string> test;
  std::string out;
  std::size_t rank = 3;
  std::size_t max_sweeps = 100;
  double tol = 1e-6;
  double damping = 1.0;
  int quad_order = 9;
  std::string schedule = "seq";
  std::uint64_t seed = 0;
  double prior_variance = 1.0;
  std::size_t restarts = 8;
};

struct EvalArgs {
  std::string out;
  std::optional<std::string> predictions;
  // KL to the reference posterior of a regression fit.
  std::optional<std::string> model;
  std::optional<std::string> data;
  std::optional<std::string> posterior;
  double prior_variance = 1.0;
  std::size_t is_samples = 1'000'000;
  std::uint64_t seed = 0;
};

struct StreamArgs {
  std::string model;
  std::string data;
  std::vector<std::string> test;
  std::string out;
  std::size_t batch_size = 100;
  std::optional<std::uint64_t> shuffle_seed;
  std::size_t rank = 3;
  std::size_t inner_iters = 1;
  std::uint64_t seed = 0;
};

/// Each command writes its CSV files and returns the process exit code.
/// Input errors are reported by throwing.
int cmd_simulate(const SimulateArgs& args);
int cmd_fit(const FitArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_stream(const StreamArgs& args);

/// Worker threads for the parallel schedule from CEP_THREADS; the hardware
/// concurrency when it is unset.
unsigned threads_from_env();

}  // namespace cep::cli

#endif  // CEP_TOOLS_COMMANDS_HPP
