#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "trustbayes/bounds.hpp"
#include "trustbayes/gp.hpp"
#include "trustbayes/taskgen.hpp"

namespace trustbayes::train {

struct TrainConfig {
  std::size_t steps = 1500;  // per outer round
  double step_size = 0.02;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.9;
  double fd_step = 1e-4;
  double smoothing_tau = 0.05;
  double penalty_weight = 10.0;
  double penalty_growth = 5.0;
  std::size_t max_outer_rounds = 6;
  double inclusion_buffer = 0.02;
  std::optional<gp::HyperParams> init;  // profiled_init when empty
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainRecord {
  std::size_t step = 0;
  double nmll = 0.0;
  double smoothed_prior_incl = 0.0;
  double smoothed_post_incl = 0.0;
  double exact_prior_incl = 0.0;
  double exact_post_incl = 0.0;
  double p1_star = 0.0;
  double p2_star = 0.0;
  gp::HyperParams hyper;
};

struct Certification {
  bool certified = false;
  double p1_star = 0.0;
  double p2_star = 0.0;
  double gamma1_star = 0.5;
  double gamma2_star = 0.5;
  double prior_inclusion = 0.0;
  double posterior_inclusion = 0.0;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  Certification certification;
  bool certified_at_init = false;
  std::size_t rounds = 0;
};

struct TrainResult {
  gp::HyperParams hyper;
  TrainLog log;
};

enum class IntervalKind { kPrior, kPosterior };

/// sigmoid((q s - |value - center|) / (tau s)): a smooth stand-in for the
/// 0-1 inclusion of `value` in center +/- q s. Equals 1/2 on the boundary.
double smoothed_indicator(double value, double center, double stddev, double q, double tau) noexcept;

// Mean over tasks of the mean smoothed indicator over each evaluation split.
double smoothed_inclusion(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta, double q, double tau,
                          IntervalKind which);

/// Everything one objective evaluation produces, from a single pass over
/// the tasks.
struct ObjectiveTerms {
  double nmll = 0.0;  // mean per-task negative MLL over each task's full data
  double smoothed_prior = 0.0;
  double smoothed_post = 0.0;
  double exact_prior = 0.0;
  double exact_post = 0.0;
};

ObjectiveTerms evaluate_terms(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta, double q, double tau);

// weight * (max(target - s_prior, 0)^2 + max(target - s_post, 0)^2)
double inclusion_penalty(double s_prior, double s_post, double target, double weight) noexcept;

// Empirical-mean target the smoothed inclusions are pushed toward: the
// smallest mean that certifies 1 - delta, plus `buffer`, capped at 1.
double inclusion_target(const bounds::EvalSizes& sizes, const bounds::BoundSpec& spec, double buffer);

// Mean negative MLL plus the inclusion penalty, with the target derived from
// the dataset and cfg.inclusion_buffer.
double trust_bayes_objective(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta,
                             const bounds::BoundSpec& spec, const TrainConfig& cfg);

// Same, with an explicit target and penalty weight.
double trust_bayes_objective(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta, double q, double tau,
                             double target, double weight);

// theta = mean of all outputs, phi1 = their standard deviation, phi2 = 1.
gp::HyperParams moment_matched_init(const taskgen::MetaDataset& meta);

/// Deterministic starting point for both trainers. Scans log phi2 over a
/// coarse grid; at each node theta and phi1 take their closed-form
/// maximum-likelihood values (generalized least squares and the pooled
/// Mahalanobis scale), and the node with the lowest mean negative MLL wins.
/// Falls back to moment_matched_init if no node factorizes.
gp::HyperParams profiled_init(const taskgen::MetaDataset& meta);

/// Penalized meta-training with exact certification between rounds.
///
/// Throws InfeasibleError when the dataset size cannot certify 1 - delta
/// even with perfect empirical inclusion. An uncertified result is returned
/// with log.certification.certified == false.
TrainResult train_trust_bayes(const taskgen::MetaDataset& meta, const bounds::BoundSpec& spec,
                              const TrainConfig& cfg);

/// Baseline: the same optimizer on the mean negative MLL alone, one round.
/// `spec` only feeds the logged inclusion diagnostics.
TrainResult train_meta_prior(const taskgen::MetaDataset& meta, const TrainConfig& cfg,
                             const bounds::BoundSpec& spec = {});

}  // namespace trustbayes::train
