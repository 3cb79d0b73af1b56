#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "trustbayes/gp.hpp"
#include "trustbayes/rng.hpp"

namespace trustbayes::taskgen {

inline constexpr std::size_t kNumTerms = 10;

struct SinusoidTerm {
  double a = 0.0;
  double b = 0.0;
  double w = 0.0;
  double u = 0.0;
  double beta = 0.0;

  friend bool operator==(const SinusoidTerm&, const SinusoidTerm&) = default;
};

/// One benchmark function
///   f(x) = d x^2 + sum_m [alpha a_m sin(w_m x + beta_m) + (1 - alpha) b_m sin(u_m x + beta_m)].
/// With alpha = 1 the function is a sum of large low-frequency waves, with
/// alpha = 0 a sum of small high-frequency ones; both ride on a quadratic trend.
struct Task {
  double d = 0.0;
  int alpha = 0;
  std::array<SinusoidTerm, kNumTerms> terms{};

  double operator()(double x) const noexcept;
  bool valid() const noexcept;

  friend bool operator==(const Task&, const Task&) = default;
};

// Draws one task. Each coefficient comes from a two-component Gaussian
// mixture with equal weights; the second parameter of each component is a
// standard deviation.
Task sample_task(RandomStream& rng);

inline double eval_task(const Task& task, double x) noexcept { return task(x); }

/// Noiseless samples of one task; the first `t_tr` columns form the training
/// split and the rest the evaluation split.
struct TaskData {
  std::uint64_t task_id = 0;
  gp::InputMatrix inputs;  // n_x x total
  Eigen::VectorXd outputs;
  std::size_t t_tr = 0;

  std::size_t total() const noexcept { return static_cast<std::size_t>(outputs.size()); }
  std::size_t t_eval() const noexcept { return total() - t_tr; }

  auto train_inputs() const { return inputs.leftCols(static_cast<Eigen::Index>(t_tr)); }
  auto train_outputs() const { return outputs.head(static_cast<Eigen::Index>(t_tr)); }
  auto eval_inputs() const { return inputs.rightCols(static_cast<Eigen::Index>(t_eval())); }
  auto eval_outputs() const { return outputs.tail(static_cast<Eigen::Index>(t_eval())); }

  // Throws InputError on shape problems.
  void validate() const;
};

struct MetaTask {
  Task task;
  TaskData data;
};

struct MetaDataset {
  std::vector<MetaTask> tasks;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return tasks.size(); }
  // Non-empty, ids 0..n-1 in order, every task valid.
  void validate() const;
  std::vector<std::size_t> t_evals() const;
};

// Samples a task and `t_tr + t_eval` uniform inputs on [0, 1] from the stream
// keyed by (seed, ns, task_id), then evaluates the task at those inputs.
MetaTask generate_task(std::uint64_t seed, StreamNamespace ns, std::uint64_t task_id, std::size_t t_tr,
                       std::size_t t_eval);

MetaDataset gen_meta_dataset(std::size_t n, std::size_t t_tr, std::size_t t_eval, std::uint64_t seed);

}  // namespace trustbayes::taskgen
