#include "trustbayes/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "trustbayes/errors.hpp"
#include "trustbayes/parallel.hpp"
#include "trustbayes/rng.hpp"

namespace trustbayes::bounds {

namespace {

constexpr std::size_t kGridPoints = 512;
constexpr double kGammaMax = 0.5;

double concentration_slack(const EvalSizes& sizes, double gamma) {
  const double n = static_cast<double>(sizes.n);
  const double log_term = std::log(2.0 / gamma);
  const double within_task = std::sqrt(log_term * sizes.inverse_sum / (2.0 * n * n));
  const double across_tasks = std::sqrt(log_term / (2.0 * n));
  return within_task + across_tasks;
}

double mean_in_order(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

void BoundSpec::validate() const {
  if (!(delta >= 0.0 && delta <= 1.0)) throw InputError("delta must lie in [0, 1]");
  if (!(q > 0.0) || !std::isfinite(q)) throw InputError("q must be positive");
  if (!(gamma_min > 0.0 && gamma_min < kGammaMax)) throw InputError("gamma_min must lie in (0, 0.5)");
}

EvalSizes EvalSizes::from_counts(std::span<const std::size_t> t_evals) {
  EvalSizes s;
  s.n = t_evals.size();
  for (std::size_t t : t_evals) {
    if (t == 0) throw InputError("every task needs at least one evaluation point");
    s.inverse_sum += 1.0 / static_cast<double>(t);
  }
  return s;
}

EvalSizes EvalSizes::uniform(std::size_t n, std::size_t t_eval) {
  if (t_eval == 0) throw InputError("t_eval must be at least 1");
  return {n, static_cast<double>(n) / static_cast<double>(t_eval)};
}

double InclusionStats::mean_prior() const { return mean_in_order(per_task_prior); }
double InclusionStats::mean_posterior() const { return mean_in_order(per_task_posterior); }

void InclusionStats::validate() const {
  if (t_evals.empty()) throw InputError("inclusion statistics need at least one task");
  if (per_task_prior.size() != t_evals.size() || per_task_posterior.size() != t_evals.size()) {
    throw InputError("inclusion statistics lists differ in length");
  }
  for (std::size_t i = 0; i < t_evals.size(); ++i) {
    if (t_evals[i] == 0) throw InputError("t_eval must be at least 1");
    for (double c : {per_task_prior[i], per_task_posterior[i]}) {
      if (!(c >= 0.0 && c <= 1.0)) throw InputError("inclusion means must lie in [0, 1]");
    }
  }
}

int inclusion_loss(double value, const gp::Interval& interval) noexcept {
  return interval.contains(value) ? 1 : 0;
}

TaskEvaluation evaluate_task(const gp::HyperParams& hyper, const taskgen::TaskData& data, double q,
                             const gp::JitterSchedule& schedule) {
  const std::size_t t_eval = data.t_eval();
  if (t_eval == 0) throw InputError("task " + std::to_string(data.task_id) + " has no evaluation points");

  const auto post = gp::Posterior::fit(hyper, data.train_inputs(), data.train_outputs(), schedule);
  const auto eval_x = data.eval_inputs();
  const auto eval_y = data.eval_outputs();
  const auto preds = post.predict_many(eval_x);

  std::size_t prior_hits = 0;
  std::size_t post_hits = 0;
  double sq = 0.0;
  for (std::size_t t = 0; t < t_eval; ++t) {
    const auto idx = static_cast<Eigen::Index>(t);
    const double y = eval_y(idx);
    prior_hits += inclusion_loss(y, gp::prior_interval(hyper, eval_x.col(idx), q));
    post_hits += inclusion_loss(y, preds[t].interval(q));
    const double err = y - preds[t].mean;
    sq += err * err;
  }
  const auto denom = static_cast<double>(t_eval);
  return {static_cast<double>(prior_hits) / denom, static_cast<double>(post_hits) / denom, sq / denom};
}

InclusionStats compute_inclusion_stats(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta,
                                       const BoundSpec& spec) {
  spec.validate();
  hyper.validate();
  if (meta.tasks.empty()) throw InputError("meta dataset has no tasks");

  const std::size_t n = meta.size();
  InclusionStats stats;
  stats.per_task_prior.resize(n);
  stats.per_task_posterior.resize(n);
  stats.t_evals.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const auto& data = meta.tasks[i].data;
    TaskEvaluation e;
    try {
      e = evaluate_task(hyper, data, spec.q);
    } catch (const NumericalError& err) {
      throw NumericalError("task " + std::to_string(data.task_id) + ": " + err.what(), err.attempted_jitter());
    }
    stats.per_task_prior[i] = e.prior_inclusion;
    stats.per_task_posterior[i] = e.posterior_inclusion;
    stats.t_evals[i] = data.t_eval();
  });
  return stats;
}

double p_bound(double mean_c, const EvalSizes& sizes, double gamma) {
  if (!(gamma > 0.0 && gamma <= kGammaMax)) throw InputError("gamma must lie in (0, 0.5]");
  if (!(mean_c >= 0.0 && mean_c <= 1.0)) throw InputError("empirical mean must lie in [0, 1]");
  if (sizes.n == 0) throw InputError("bound needs at least one task");
  return (1.0 - 2.0 * gamma) * (mean_c - concentration_slack(sizes, gamma));
}

GammaOptimum maximize_gamma(double mean_c, const EvalSizes& sizes, const BoundSpec& spec) {
  spec.validate();
  const double log_lo = std::log(spec.gamma_min);
  const double log_hi = std::log(kGammaMax);
  std::array<double, kGridPoints> grid{};
  for (std::size_t k = 0; k < kGridPoints; ++k) {
    grid[k] = k + 1 == kGridPoints
                  ? kGammaMax
                  : std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(k) / (kGridPoints - 1));
  }

  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < kGridPoints; ++k) {
    const double v = p_bound(mean_c, sizes, grid[k]);
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  GammaOptimum result{grid[best], best_value};

  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[best + 1 == kGridPoints ? best : best + 1];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = p_bound(mean_c, sizes, c);
  double fd = p_bound(mean_c, sizes, d);
  for (int iter = 0; iter < 200 && (b - a) > 1e-15 * b; ++iter) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = p_bound(mean_c, sizes, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = p_bound(mean_c, sizes, d);
    }
  }
  const double g = fc >= fd ? c : d;
  const double v = std::max(fc, fd);
  if (v > result.p_star) result = {g, v};
  return result;
}

Feasibility feasibility_check(const EvalSizes& sizes, double delta, double gamma_min) {
  BoundSpec spec;
  spec.delta = delta;
  spec.gamma_min = gamma_min;
  spec.validate();
  const auto opt = maximize_gamma(1.0, sizes, spec);
  const double margin = opt.p_star - spec.required_probability();
  return {margin >= 0.0, margin, opt.gamma_star, opt.p_star};
}

std::size_t min_tasks_for_delta(double delta, std::size_t t_eval_uniform) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0, 1)");
  if (t_eval_uniform == 0) throw InputError("t_eval must be at least 1");
  constexpr std::size_t kLimit = std::size_t{1} << 40;

  auto feasible = [&](std::size_t n) {
    return feasibility_check(EvalSizes::uniform(n, t_eval_uniform), delta).feasible;
  };
  std::size_t hi = 1;
  while (!feasible(hi)) {
    if (hi >= kLimit) {
      std::ostringstream os;
      os << "no n <= 2^40 certifies delta=" << delta << " with t_eval=" << t_eval_uniform;
      throw NotFoundError(os.str());
    }
    hi *= 2;
  }
  std::size_t lo = hi / 2;  // infeasible, or 0
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

double required_mean_inclusion(const EvalSizes& sizes, const BoundSpec& spec) {
  const double target = spec.required_probability();
  const double best = maximize_gamma(1.0, sizes, spec).p_star;
  if (best < target) {
    std::ostringstream os;
    os << "certified bound cannot reach " << target << " with n=" << sizes.n << " (best " << best << ")";
    throw InfeasibleError(os.str(), best - target);
  }
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (maximize_gamma(mid, sizes, spec).p_star >= target ? hi : lo) = mid;
  }
  return hi;
}

double coverage_trial(const CoverageConfig& cfg) {
  if (!(cfg.true_rate >= 0.0 && cfg.true_rate <= 1.0)) throw InputError("true_rate must lie in [0, 1]");
  if (cfg.n == 0 || cfg.t_eval == 0 || cfg.trials == 0) throw InputError("coverage trial counts must be positive");
  if (!(cfg.concentration > 0.0)) throw InputError("concentration must be positive");
  if (!(cfg.gamma > 0.0 && cfg.gamma < kGammaMax)) throw InputError("coverage trial needs gamma in (0, 0.5)");
  const double slack = concentration_slack(EvalSizes::uniform(cfg.n, cfg.t_eval), cfg.gamma);

  const bool degenerate =
      cfg.shape == LatentShape::kDegenerate || cfg.true_rate == 0.0 || cfg.true_rate == 1.0;
  std::vector<unsigned char> covered(cfg.trials, 0);
  parallel_for(cfg.trials, [&](std::size_t trial) {
    RandomStream rng(cfg.seed, StreamNamespace::kCoverage, trial);
    std::gamma_distribution<double> ga(cfg.true_rate * cfg.concentration, 1.0);
    std::gamma_distribution<double> gb((1.0 - cfg.true_rate) * cfg.concentration, 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < cfg.n; ++i) {
      double latent = cfg.true_rate;
      if (!degenerate) {
        const double x = ga(rng);
        const double y = gb(rng);
        latent = x + y > 0.0 ? x / (x + y) : cfg.true_rate;
      }
      std::size_t hits = 0;
      for (std::size_t t = 0; t < cfg.t_eval; ++t) hits += rng.uniform() < latent ? 1 : 0;
      sum += static_cast<double>(hits) / static_cast<double>(cfg.t_eval);
    }
    const double empirical = sum / static_cast<double>(cfg.n);
    covered[trial] = cfg.true_rate >= empirical - slack ? 1 : 0;
  });

  std::size_t count = 0;
  for (auto c : covered) count += c;
  return static_cast<double>(count) / static_cast<double>(cfg.trials);
}

}  // namespace trustbayes::bounds
