#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli.hpp"
#include "trustbayes/errors.hpp"
#include "trustbayes/parallel.hpp"

namespace cli = trustbayes::cli;

namespace {

// Command-line values that override the config file when given.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> method;
  std::optional<std::size_t> n, t_tr, t_eval;
  std::optional<double> delta, q;
  std::optional<std::size_t> steps;
  std::optional<double> step_size;
  std::optional<std::size_t> test_tasks, test_inputs, t_tr_test;

  void apply(cli::RunConfig& cfg) const {
    if (seed) {
      // Derived seeds follow the top-level one unless the config pinned them.
      if (cfg.eval.seed == cfg.seed) cfg.eval.seed = *seed;
      if (cfg.fixture.seed == cfg.seed) cfg.fixture.seed = *seed;
      cfg.seed = *seed;
      cfg.train.seed = *seed;
    }
    if (output_dir) cfg.output_dir = *output_dir;
    if (method) cfg.method = cli::parse_method(*method);
    if (n) cfg.dataset.n = *n;
    if (t_tr) cfg.dataset.t_tr = *t_tr;
    if (t_eval) cfg.dataset.t_eval = *t_eval;
    if (delta) cfg.spec.delta = *delta;
    if (q) {
      cfg.spec.q = *q;
      cfg.eval.q = *q;
      cfg.fixture.q = *q;
    }
    if (steps) cfg.train.steps = *steps;
    if (step_size) cfg.train.step_size = *step_size;
    if (test_tasks) cfg.eval.n_test_tasks = *test_tasks;
    if (test_inputs) cfg.eval.n_test_inputs = *test_inputs;
    if (t_tr_test) cfg.eval.t_tr_test = *t_tr_test;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust-Bayes meta-learning of trustworthy GP priors"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::size_t threads = 0;
  Overrides ov;
  app.add_option("-c,--config", config_path, "JSON run configuration");
  app.add_option("--threads", threads, "worker thread cap (0: TRUSTBAYES_THREADS or all cores)");
  app.add_option("--seed", ov.seed, "master seed");
  app.add_option("-o,--output-dir", ov.output_dir, "directory for all outputs");
  app.add_option("--method", ov.method, "trust-bayes, meta-prior or both");
  app.add_option("--n", ov.n, "number of meta-training tasks");
  app.add_option("--t-tr", ov.t_tr, "training points per task");
  app.add_option("--t-eval", ov.t_eval, "evaluation points per task");
  app.add_option("--delta", ov.delta, "allowed failure probability");
  app.add_option("--q", ov.q, "interval half-width in standard deviations");
  app.add_option("--steps", ov.steps, "optimizer steps per round");
  app.add_option("--step-size", ov.step_size, "optimizer step size");
  app.add_option("--test-tasks", ov.test_tasks, "Monte Carlo test tasks");
  app.add_option("--test-inputs", ov.test_inputs, "query inputs per test task");
  app.add_option("--t-tr-test", ov.t_tr_test, "conditioning points per test task");

  auto* gen = app.add_subcommand("gen", "sample a meta-training dataset");
  std::string gen_out;
  gen->add_option("--out", gen_out, "dataset path (default <output-dir>/dataset.jsonl)");

  auto* train = app.add_subcommand("train", "meta-train hyperparameters");
  std::string train_dataset;
  train->add_option("--dataset", train_dataset, "dataset path (default <output-dir>/dataset.jsonl)");

  auto* eval = app.add_subcommand("eval", "Monte Carlo evaluation on fresh tasks");
  std::vector<std::string> hyper_files;
  std::string eval_dataset;
  bool no_fixture = false;
  eval->add_option("--hyper", hyper_files, "hyperparameter record(s); default from --method");
  eval->add_option("--dataset", eval_dataset, "training dataset for eval-split diagnostics");
  eval->add_flag("--no-fixture", no_fixture, "skip the function fixture CSV");

  auto* feas = app.add_subcommand("feasibility", "check whether (n, t_eval) can certify 1 - delta");
  std::vector<double> min_n;
  bool json = false;
  feas->add_option("--min-n", min_n, "DELTA T_EVAL: print the smallest feasible n")->expected(2);
  feas->add_flag("--json", json, "machine-readable output");

  auto* plot = app.add_subcommand("plot", "render a training log or function fixture CSV as SVG");
  std::string plot_in, plot_out;
  std::optional<double> required;
  plot->add_option("input", plot_in, "CSV file")->required();
  plot->add_option("--out", plot_out, "SVG path (default: input with .svg)");
  plot->add_option("--required", required, "reference inclusion level (default 1 - delta)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInputError;
  }

  return cli::guarded(
      [&]() -> int {
        if (threads > 0) trustbayes::set_max_threads(threads);
        cli::RunConfig cfg = config_path.empty() ? cli::parse_run_config(nlohmann::json::object(), ".")
                                                 : cli::load_run_config(config_path);
        ov.apply(cfg);
        cfg.validate();

        if (*gen) {
          cli::GenOptions o;
          if (!gen_out.empty()) o.out = gen_out;
          return cli::cmd_gen(cfg, o, std::cout);
        }
        if (*train) {
          cli::TrainOptions o;
          if (!train_dataset.empty()) o.dataset = train_dataset;
          return cli::cmd_train(cfg, o, std::cout);
        }
        if (*eval) {
          cli::EvalOptions o;
          for (const auto& h : hyper_files) o.hyper_files.emplace_back(h);
          if (!eval_dataset.empty()) o.dataset = eval_dataset;
          o.fixture = !no_fixture;
          return cli::cmd_eval(cfg, o, std::cout);
        }
        if (*feas) {
          cli::FeasibilityOptions o;
          o.json = json;
          if (!min_n.empty()) {
            o.min_n = true;
            o.delta = min_n[0];
            if (!(min_n[1] >= 1.0) || min_n[1] != std::floor(min_n[1])) {
              throw trustbayes::InputError("--min-n: T_EVAL must be a positive integer");
            }
            o.t_eval = static_cast<std::size_t>(min_n[1]);
          } else {
            o.n = cfg.dataset.n;
            o.t_eval = cfg.dataset.t_eval;
            o.delta = cfg.spec.delta;
          }
          return cli::cmd_feasibility(o, cfg.spec.gamma_min, std::cout);
        }
        cli::PlotOptions o;
        o.input = plot_in;
        if (!plot_out.empty()) o.output = plot_out;
        o.required = required ? *required : cfg.spec.required_probability();
        return cli::cmd_plot(o, std::cout);
      },
      std::cerr);
}
