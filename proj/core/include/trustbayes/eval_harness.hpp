#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "trustbayes/bounds.hpp"
#include "trustbayes/gp.hpp"
#include "trustbayes/taskgen.hpp"

namespace trustbayes::eval {

struct EvalConfig {
  std::size_t n_test_tasks = 500;
  std::size_t n_test_inputs = 500;
  std::size_t t_tr_test = 20;
  double q = 1.64;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EvalReport {
  double prior_inclusion = 0.0;
  double posterior_inclusion = 0.0;
  double mse = 0.0;
  // Empirical means on the meta-training evaluation splits; NaN when no
  // training dataset was supplied.
  double eval_split_prior_inclusion = 0.0;
  double eval_split_posterior_inclusion = 0.0;
  EvalConfig config;
  gp::HyperParams hyper;
};

// The test task with the given id: a fresh function plus t_tr_test training
// inputs and n_test_inputs query inputs, drawn from the test seed namespace.
taskgen::MetaTask make_test_task(const EvalConfig& cfg, std::uint64_t task_id);

// Materializes the whole test set. Only practical at small scale; the
// Monte Carlo evaluation generates tasks on the fly instead.
taskgen::MetaDataset make_test_dataset(const EvalConfig& cfg);

/// Monte Carlo estimate of the prior/posterior inclusion probabilities and
/// the posterior-mean MSE on fresh tasks, with hyperparameters held fixed.
/// When `training` is given, the report also carries the empirical
/// inclusion means on its evaluation splits.
EvalReport monte_carlo_eval(const gp::HyperParams& hyper, const EvalConfig& cfg,
                            const taskgen::MetaDataset* training = nullptr);

struct FixtureRecord {
  std::size_t func_id = 0;
  double x = 0.0;
  double f = 0.0;
  gp::Interval a_prior;
  gp::Interval a_post;
  gp::Interval b_prior;
  gp::Interval b_post;
};

struct FixtureConfig {
  std::size_t n_funcs = 10;
  std::size_t grid = 200;
  std::size_t t_tr = 20;
  double q = 1.64;
  std::uint64_t seed = 0;
};

// Truth and both hyperparameter sets' intervals on a uniform grid over [0, 1]
// for n_funcs sampled functions, func-major order.
std::vector<FixtureRecord> emit_function_fixture(const gp::HyperParams& hyper_a, const gp::HyperParams& hyper_b,
                                                 const FixtureConfig& cfg);

}  // namespace trustbayes::eval
