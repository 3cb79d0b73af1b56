#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trustbayes/bounds.hpp"
#include "trustbayes/eval_harness.hpp"
#include "trustbayes/meta_train.hpp"

namespace trustbayes::cli {

enum ExitCode : int {
  kOk = 0,
  kUncertified = 2,
  kInfeasible = 3,
  kInputError = 4,
  kNumericalError = 5,
};

enum class Method { kTrustBayes, kMetaPrior, kBoth };

std::string method_name(Method m);
Method parse_method(const std::string& text);

struct DatasetParams {
  std::size_t n = 2000;
  std::size_t t_tr = 20;
  std::size_t t_eval = 100;
  std::size_t n_x = 1;  // only one-dimensional inputs are generated
};

/// Everything a run needs. Loaded from a JSON file, then overridden by
/// command-line flags.
struct RunConfig {
  std::uint64_t seed = 0;
  DatasetParams dataset;
  bounds::BoundSpec spec;
  train::TrainConfig train;
  eval::EvalConfig eval;
  eval::FixtureConfig fixture;
  std::filesystem::path output_dir = ".";
  Method method = Method::kBoth;

  void validate() const;

  // Canonical JSON of every setting that influences results. Leaves out
  // output_dir so runs in different directories echo identically.
  nlohmann::json to_json() const;
  std::string echo() const { return to_json().dump(); }
};

// Unknown keys are rejected; relative output_dir resolves against base_dir.
// Missing eval/fixture seeds default to the top-level seed.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

struct GenOptions {
  std::optional<std::filesystem::path> out;  // default: <output_dir>/dataset.jsonl
};
int cmd_gen(const RunConfig& cfg, const GenOptions& opts, std::ostream& log);

struct TrainOptions {
  std::optional<std::filesystem::path> dataset;  // default: <output_dir>/dataset.jsonl
};
int cmd_train(const RunConfig& cfg, const TrainOptions& opts, std::ostream& log);

struct EvalOptions {
  std::vector<std::filesystem::path> hyper_files;  // default: from the method selector
  std::optional<std::filesystem::path> dataset;    // training data for eval-split diagnostics
  bool fixture = true;                             // emit the function fixture when comparing two sets
};
int cmd_eval(const RunConfig& cfg, const EvalOptions& opts, std::ostream& log);

struct FeasibilityOptions {
  std::size_t n = 0;
  std::size_t t_eval = 0;
  double delta = 0.1;
  bool min_n = false;  // search the smallest feasible n for (delta, t_eval)
  bool json = false;
};
int cmd_feasibility(const FeasibilityOptions& opts, double gamma_min, std::ostream& out);

struct PlotOptions {
  std::filesystem::path input;
  std::optional<std::filesystem::path> output;  // default: input with .svg extension
  double required = 0.9;                        // reference line for training logs
};
int cmd_plot(const PlotOptions& opts, std::ostream& log);

// Maps the in-flight exception to an exit code, printing its message.
int exit_code_for_current_exception(std::ostream& err);

// Runs `body`, mapping library exceptions to exit codes and messages on err.
template <typename F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

}  // namespace trustbayes::cli
