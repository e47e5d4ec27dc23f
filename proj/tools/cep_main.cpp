#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

const std::vector<std::string> kModels{"probit", "logistic", "cp-continuous", "cp-binary"};

}  // namespace

int main(int argc, char** argv) {
  using namespace cep::cli;
  CLI::App app{"Conditional expectation propagation for regression and CP tensor models"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Write a synthetic dataset");
  simulate->add_option("--model", sim.model, "Dataset type")
      ->check(CLI::IsMember(kModels))
      ->required();
  simulate->add_option("--out", sim.out, "Output file (CSV for regression, COO for tensors)")
      ->required();
  simulate->add_option("--test-out", sim.test_out, "Also write a held-out part here");
  simulate->add_option("--test-fraction", sim.test_fraction, "Held-out fraction")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--n", sim.n, "Regression: training rows")->capture_default_str();
  simulate->add_option("--d", sim.d, "Regression: number of features")->capture_default_str();
  simulate->add_option("--features", sim.features, "Regression: feature distribution")
      ->check(CLI::IsMember({"normal", "gmm5"}))
      ->capture_default_str();
  simulate->add_option("--dims", sim.dims, "Tensor: mode sizes")->delimiter(',');
  simulate->add_option("--rank", sim.rank, "Tensor: CP rank")->capture_default_str();
  simulate->add_option("--tau", sim.tau, "Tensor: noise precision (inf for none)")
      ->capture_default_str();
  simulate->add_option("--density", sim.density, "Tensor: observed fraction")
      ->capture_default_str();

  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a model and write CSV reports");
  fit_cmd->add_option("--model", fit.model, "Model")->check(CLI::IsMember(kModels))->required();
  fit_cmd->add_option("--method", fit.method, "Inference method")
      ->check(CLI::IsMember({"ep", "cep1", "cep2"}))
      ->capture_default_str();
  fit_cmd->add_option("--data", fit.data, "Training data")->required();
  fit_cmd->add_option("--test", fit.test, "Held-out data; writes predictions.csv");
  fit_cmd->add_option("--out", fit.out, "Output directory")->required();
  fit_cmd->add_option("--rank", fit.rank, "CP rank")->capture_default_str();
  fit_cmd->add_option("--max-sweeps", fit.max_sweeps, "Sweep limit")->capture_default_str();
  fit_cmd->add_option("--tol", fit.tol, "Convergence tolerance")->capture_default_str();
  fit_cmd->add_option("--damping", fit.damping, "Damping in (0, 1]")->capture_default_str();
  fit_cmd->add_option("--quad-order", fit.quad_order, "Gauss-Hermite order (logistic)")
      ->capture_default_str();
  fit_cmd->add_option("--schedule", fit.schedule, "Message schedule")
      ->check(CLI::IsMember({"seq", "par"}))
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Random seed (CP initialization)")
      ->capture_default_str();
  fit_cmd->add_option("--prior-variance", fit.prior_variance, "Gaussian prior variance")
      ->capture_default_str();
  fit_cmd->add_option("--restarts", fit.restarts, "CP restarts")->capture_default_str();

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Compute metrics");
  eval_cmd->add_option("--predictions", eval.predictions, "predictions.csv from fit");
  eval_cmd->add_option("--posterior", eval.posterior, "posterior.csv for the KL report");
  eval_cmd->add_option("--model", eval.model, "Model of the posterior")
      ->check(CLI::IsMember({"probit", "logistic"}));
  eval_cmd->add_option("--data", eval.data, "Training data of the posterior");
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_option("--prior-variance", eval.prior_variance, "Gaussian prior variance")
      ->capture_default_str();
  eval_cmd->add_option("--is-samples", eval.is_samples, "Importance samples when d > 3")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "Importance sampling seed")->capture_default_str();

  StreamArgs stream;
  CLI::App* stream_cmd = app.add_subcommand("stream", "One streaming pass over a tensor");
  stream_cmd->add_option("--model", stream.model, "Model")
      ->check(CLI::IsMember({"cp-continuous", "cp-binary"}))
      ->required();
  stream_cmd->add_option("--data", stream.data, "Entries to stream")->required();
  stream_cmd->add_option("--test", stream.test, "Held-out tensors (repeatable)");
  stream_cmd->add_option("--out", stream.out, "Output directory")->required();
  stream_cmd->add_option("--batch-size", stream.batch_size, "Entries per batch")
      ->capture_default_str();
  stream_cmd->add_option("--shuffle-seed", stream.shuffle_seed, "Shuffle entries first");
  stream_cmd->add_option("--rank", stream.rank, "CP rank")->capture_default_str();
  stream_cmd->add_option("--inner-iters", stream.inner_iters, "Passes per batch")
      ->capture_default_str();
  stream_cmd->add_option("--seed", stream.seed, "Random seed (initialization)")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*fit_cmd) return cmd_fit(fit);
    if (*eval_cmd) return cmd_eval(eval);
    if (*stream_cmd) return cmd_stream(stream);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
