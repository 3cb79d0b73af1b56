#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trustbayes/gp.hpp"
#include "trustbayes/taskgen.hpp"

namespace trustbayes::bounds {

struct BoundSpec {
  double delta = 0.1;
  double q = 1.64;
  // Lower end of the gamma search domain (gamma_min, 0.5].
  double gamma_min = 1e-6;

  double required_probability() const noexcept { return 1.0 - delta; }
  void validate() const;
};

/// The evaluation-set geometry the concentration terms depend on: the number
/// of tasks and the sum of 1 / t_eval over tasks.
struct EvalSizes {
  std::size_t n = 0;
  double inverse_sum = 0.0;

  static EvalSizes from_counts(std::span<const std::size_t> t_evals);
  static EvalSizes uniform(std::size_t n, std::size_t t_eval);
};

struct InclusionStats {
  std::vector<double> per_task_prior;
  std::vector<double> per_task_posterior;
  std::vector<std::size_t> t_evals;

  std::size_t n() const noexcept { return t_evals.size(); }
  // Means over tasks, summed in index order.
  double mean_prior() const;
  double mean_posterior() const;
  EvalSizes sizes() const { return EvalSizes::from_counts(t_evals); }
  void validate() const;
};

// 1 when lo <= value <= hi, else 0.
int inclusion_loss(double value, const gp::Interval& interval) noexcept;

/// Per-task quantities over the evaluation split, after conditioning on the
/// training split.
struct TaskEvaluation {
  double prior_inclusion = 0.0;
  double posterior_inclusion = 0.0;
  double squared_error = 0.0;  // mean over eval points, posterior mean predictor
};

TaskEvaluation evaluate_task(const gp::HyperParams& hyper, const taskgen::TaskData& data, double q,
                             const gp::JitterSchedule& schedule = {});

InclusionStats compute_inclusion_stats(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta,
                                       const BoundSpec& spec);

/// (1 - 2 gamma) (mean_c - sqrt(log(2/gamma) sum_i 1/t_eval_i / (2 n^2)) - sqrt(log(2/gamma) / (2 n))).
/// Lower-bounds the population inclusion probability; shared by the prior
/// and posterior bounds with the respective empirical mean.
double p_bound(double mean_c, const EvalSizes& sizes, double gamma);

struct GammaOptimum {
  double gamma_star = 0.5;
  double p_star = 0.0;
};

// 512-point log-spaced grid on [gamma_min, 0.5] followed by golden-section
// refinement between the neighbours of the best grid point.
GammaOptimum maximize_gamma(double mean_c, const EvalSizes& sizes, const BoundSpec& spec);

struct Feasibility {
  bool feasible = false;
  double margin = 0.0;
  double gamma_star = 0.5;
  double p_star = 0.0;
};

// Best achievable certified bound (empirical inclusion of exactly 1) against 1 - delta.
Feasibility feasibility_check(const EvalSizes& sizes, double delta, double gamma_min = 1e-6);

// Smallest n whose uniform-t_eval meta dataset is feasible for delta.
// Throws NotFoundError above 2^40 tasks.
std::size_t min_tasks_for_delta(double delta, std::size_t t_eval_uniform);

// Smallest empirical mean whose certified bound reaches 1 - delta.
// Throws InfeasibleError when even a mean of 1 does not suffice.
double required_mean_inclusion(const EvalSizes& sizes, const BoundSpec& spec);

enum class LatentShape {
  kBeta,        // C_i ~ Beta(true_rate * k, (1 - true_rate) * k)
  kDegenerate,  // C_i = true_rate for every task
};

struct CoverageConfig {
  double gamma = 0.1;
  std::size_t n = 50;
  std::size_t t_eval = 20;
  double true_rate = 0.9;
  std::size_t trials = 2000;
  std::uint64_t seed = 0;
  LatentShape shape = LatentShape::kBeta;
  double concentration = 10.0;
};

// Fraction of simulated meta-evaluations in which the population rate is at
// least the empirical mean minus both concentration terms.
double coverage_trial(const CoverageConfig& cfg);

}  // namespace trustbayes::bounds
