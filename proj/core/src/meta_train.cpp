#include "trustbayes/meta_train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "trustbayes/errors.hpp"
#include "trustbayes/parallel.hpp"

namespace trustbayes::train {

namespace {

using Coords = std::array<double, 3>;  // theta, log phi1, log phi2

Coords to_coords(const gp::HyperParams& h) { return {h.theta, h.log_phi1(), h.log_phi2()}; }
gp::HyperParams from_coords(const Coords& z) { return gp::HyperParams::from_log(z[0], z[1], z[2]); }

struct TaskTerms {
  double nmll = 0.0;
  double smoothed_prior = 0.0;
  double smoothed_post = 0.0;
  double exact_prior = 0.0;
  double exact_post = 0.0;
};

TaskTerms task_terms(const gp::HyperParams& hyper, const taskgen::TaskData& data, double q, double tau,
                     bool with_nmll) {
  TaskTerms out;
  if (with_nmll) out.nmll = gp::neg_mll(hyper, data.inputs, data.outputs);

  const std::size_t t_eval = data.t_eval();
  const auto post = gp::Posterior::fit(hyper, data.train_inputs(), data.train_outputs());
  const auto eval_x = data.eval_inputs();
  const auto eval_y = data.eval_outputs();
  const auto preds = post.predict_many(eval_x);
  const double prior_sd = hyper.phi1;

  std::size_t prior_hits = 0;
  std::size_t post_hits = 0;
  for (std::size_t t = 0; t < t_eval; ++t) {
    const auto idx = static_cast<Eigen::Index>(t);
    const double y = eval_y(idx);
    const double m0 = gp::prior_mean(hyper, eval_x.col(idx));
    out.smoothed_prior += smoothed_indicator(y, m0, prior_sd, q, tau);
    out.smoothed_post += smoothed_indicator(y, preds[t].mean, preds[t].stddev(), q, tau);
    prior_hits += bounds::inclusion_loss(y, gp::prior_interval(hyper, eval_x.col(idx), q));
    post_hits += bounds::inclusion_loss(y, preds[t].interval(q));
  }
  const auto denom = static_cast<double>(t_eval);
  out.smoothed_prior /= denom;
  out.smoothed_post /= denom;
  out.exact_prior = static_cast<double>(prior_hits) / denom;
  out.exact_post = static_cast<double>(post_hits) / denom;
  return out;
}

ObjectiveTerms aggregate_terms(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta, double q,
                               double tau, bool with_nmll) {
  hyper.validate();
  if (meta.tasks.empty()) throw InputError("meta dataset has no tasks");
  std::vector<TaskTerms> per_task(meta.size());
  parallel_for(meta.size(), [&](std::size_t i) {
    const auto& data = meta.tasks[i].data;
    if (data.t_eval() == 0) throw InputError("task " + std::to_string(data.task_id) + " has no evaluation points");
    try {
      per_task[i] = task_terms(hyper, data, q, tau, with_nmll);
    } catch (const NumericalError& err) {
      throw NumericalError("task " + std::to_string(data.task_id) + ": " + err.what(), err.attempted_jitter());
    }
  });
  ObjectiveTerms sum;
  for (const auto& t : per_task) {
    sum.nmll += t.nmll;
    sum.smoothed_prior += t.smoothed_prior;
    sum.smoothed_post += t.smoothed_post;
    sum.exact_prior += t.exact_prior;
    sum.exact_post += t.exact_post;
  }
  const auto n = static_cast<double>(per_task.size());
  return {sum.nmll / n, sum.smoothed_prior / n, sum.smoothed_post / n, sum.exact_prior / n, sum.exact_post / n};
}

double mean_nmll(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta) {
  std::vector<double> per_task(meta.size());
  parallel_for(meta.size(), [&](std::size_t i) {
    const auto& data = meta.tasks[i].data;
    try {
      per_task[i] = gp::neg_mll(hyper, data.inputs, data.outputs);
    } catch (const NumericalError& err) {
      throw NumericalError("task " + std::to_string(data.task_id) + ": " + err.what(), err.attempted_jitter());
    }
  });
  double sum = 0.0;
  for (double v : per_task) sum += v;
  return sum / static_cast<double>(per_task.size());
}

Certification certify(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta, const bounds::BoundSpec& spec) {
  const auto stats = bounds::compute_inclusion_stats(hyper, meta, spec);
  const auto sizes = stats.sizes();
  Certification c;
  c.prior_inclusion = stats.mean_prior();
  c.posterior_inclusion = stats.mean_posterior();
  const auto g1 = bounds::maximize_gamma(c.prior_inclusion, sizes, spec);
  const auto g2 = bounds::maximize_gamma(c.posterior_inclusion, sizes, spec);
  c.p1_star = g1.p_star;
  c.gamma1_star = g1.gamma_star;
  c.p2_star = g2.p_star;
  c.gamma2_star = g2.gamma_star;
  const double required = spec.required_probability();
  c.certified = c.p1_star >= required && c.p2_star >= required;
  return c;
}

// Adam on (theta, log phi1, log phi2) with central finite-difference
// gradients of `objective`; appends one record per step.
struct Round {
  const taskgen::MetaDataset& meta;
  const bounds::BoundSpec& spec;
  const TrainConfig& cfg;
  double target;
  double weight;

  double objective(const ObjectiveTerms& t) const {
    return t.nmll + inclusion_penalty(t.smoothed_prior, t.smoothed_post, target, weight);
  }

  double objective_at(const Coords& z) const {
    if (weight == 0.0) return mean_nmll(from_coords(z), meta);
    return objective(aggregate_terms(from_coords(z), meta, spec.q, cfg.smoothing_tau, true));
  }

  Coords run(Coords z, TrainLog& log) const {
    const double beta1 = cfg.adam_beta1;
    const double beta2 = cfg.adam_beta2;
    constexpr double kEps = 1e-8;
    const auto sizes = bounds::EvalSizes::from_counts(meta.t_evals());
    Coords m{};
    Coords v{};
    for (std::size_t k = 0; k < cfg.steps; ++k) {
      const auto hyper = from_coords(z);
      const auto terms = aggregate_terms(hyper, meta, spec.q, cfg.smoothing_tau, true);

      TrainRecord rec;
      rec.step = log.records.size();
      rec.nmll = terms.nmll;
      rec.smoothed_prior_incl = terms.smoothed_prior;
      rec.smoothed_post_incl = terms.smoothed_post;
      rec.exact_prior_incl = terms.exact_prior;
      rec.exact_post_incl = terms.exact_post;
      rec.p1_star = bounds::maximize_gamma(terms.exact_prior, sizes, spec).p_star;
      rec.p2_star = bounds::maximize_gamma(terms.exact_post, sizes, spec).p_star;
      rec.hyper = hyper;
      log.records.push_back(rec);

      const auto grad = gradient(z);
      const double t = static_cast<double>(k + 1);
      for (std::size_t i = 0; i < z.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / (1.0 - std::pow(beta1, t));
        const double v_hat = v[i] / (1.0 - std::pow(beta2, t));
        z[i] -= cfg.step_size * m_hat / (std::sqrt(v_hat) + kEps);
      }
    }
    return z;
  }

  Coords gradient(const Coords& z) const {
    Coords g{};
    for (std::size_t i = 0; i < z.size(); ++i) {
      Coords up = z;
      Coords down = z;
      up[i] += cfg.fd_step;
      down[i] -= cfg.fd_step;
      g[i] = (objective_at(up) - objective_at(down)) / (2.0 * cfg.fd_step);
    }
    return g;
  }
};

TrainResult run_training(const taskgen::MetaDataset& meta, const bounds::BoundSpec& spec, const TrainConfig& cfg,
                         double base_target, bool constrained) {
  TrainResult result;
  Coords z = to_coords(cfg.init ? *cfg.init : profiled_init(meta));
  from_coords(z).validate();

  result.log.certified_at_init = certify(from_coords(z), meta, spec).certified;

  double weight = constrained ? cfg.penalty_weight : 0.0;
  double buffer = cfg.inclusion_buffer;
  const std::size_t rounds = constrained ? cfg.max_outer_rounds : 1;
  for (std::size_t r = 0; r < rounds; ++r) {
    const double target = std::min(1.0, base_target + buffer);
    const Round round{meta, spec, cfg, target, weight};
    z = round.run(z, result.log);
    result.log.rounds = r + 1;
    result.log.certification = certify(from_coords(z), meta, spec);
    if (!constrained || result.log.certification.certified) break;

    // Exact inclusion fell short of what certification needs: raise the
    // smoothed target by the shortfall as well as the weight.
    const double worst = std::min(result.log.certification.prior_inclusion,
                                  result.log.certification.posterior_inclusion);
    buffer += std::max(0.0, base_target - worst);
    weight *= cfg.penalty_growth;
  }
  result.hyper = from_coords(z);
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (steps < 1) throw InputError("train.steps must be at least 1");
  if (!(step_size > 0.0)) throw InputError("train.step_size must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw InputError("train.adam_beta1 and train.adam_beta2 must lie in [0, 1)");
  }
  if (!(fd_step > 0.0)) throw InputError("train.fd_step must be positive");
  if (!(smoothing_tau > 0.0)) throw InputError("train.smoothing_tau must be positive");
  if (!(penalty_weight >= 0.0)) throw InputError("train.penalty_weight must be non-negative");
  if (!(penalty_growth > 1.0)) throw InputError("train.penalty_growth must exceed 1");
  if (max_outer_rounds < 1) throw InputError("train.max_outer_rounds must be at least 1");
  if (!(inclusion_buffer >= 0.0)) throw InputError("train.inclusion_buffer must be non-negative");
  if (init) init->validate();
}

double smoothed_indicator(double value, double center, double stddev, double q, double tau) noexcept {
  const double dev = std::abs(value - center);
  double z;
  if (stddev > 0.0) {
    z = (q - dev / stddev) / tau;
  } else {
    z = dev == 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return 1.0 / (1.0 + std::exp(-z));
}

double smoothed_inclusion(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta, double q, double tau,
                          IntervalKind which) {
  if (!(tau > 0.0)) throw InputError("smoothing tau must be positive");
  const auto terms = aggregate_terms(hyper, meta, q, tau, false);
  return which == IntervalKind::kPrior ? terms.smoothed_prior : terms.smoothed_post;
}

ObjectiveTerms evaluate_terms(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta, double q, double tau) {
  if (!(tau > 0.0)) throw InputError("smoothing tau must be positive");
  return aggregate_terms(hyper, meta, q, tau, true);
}

double inclusion_penalty(double s_prior, double s_post, double target, double weight) noexcept {
  const double h1 = std::max(target - s_prior, 0.0);
  const double h2 = std::max(target - s_post, 0.0);
  return weight * (h1 * h1 + h2 * h2);
}

double inclusion_target(const bounds::EvalSizes& sizes, const bounds::BoundSpec& spec, double buffer) {
  return std::min(1.0, bounds::required_mean_inclusion(sizes, spec) + buffer);
}

double trust_bayes_objective(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta,
                             const bounds::BoundSpec& spec, const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  const auto sizes = bounds::EvalSizes::from_counts(meta.t_evals());
  const double target = inclusion_target(sizes, spec, cfg.inclusion_buffer);
  return trust_bayes_objective(hyper, meta, spec.q, cfg.smoothing_tau, target, cfg.penalty_weight);
}

double trust_bayes_objective(const gp::HyperParams& hyper, const taskgen::MetaDataset& meta, double q, double tau,
                             double target, double weight) {
  const auto terms = evaluate_terms(hyper, meta, q, tau);
  if (weight == 0.0) return terms.nmll;
  return terms.nmll + inclusion_penalty(terms.smoothed_prior, terms.smoothed_post, target, weight);
}

gp::HyperParams moment_matched_init(const taskgen::MetaDataset& meta) {
  if (meta.tasks.empty()) throw InputError("meta dataset has no tasks");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& mt : meta.tasks) {
    for (Eigen::Index t = 0; t < mt.data.outputs.size(); ++t) sum += mt.data.outputs(t);
    count += mt.data.total();
  }
  if (count == 0) throw InputError("meta dataset has no samples");
  const double mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (const auto& mt : meta.tasks) {
    for (Eigen::Index t = 0; t < mt.data.outputs.size(); ++t) {
      const double d = mt.data.outputs(t) - mean;
      ss += d * d;
    }
  }
  const double sd = std::sqrt(ss / static_cast<double>(count));
  return {mean, sd > 0.0 ? sd : 1.0, 1.0};
}

gp::HyperParams profiled_init(const taskgen::MetaDataset& meta) {
  if (meta.tasks.empty()) throw InputError("meta dataset has no tasks");
  constexpr double kLogPhi2Lo = -2.0;
  constexpr double kLogPhi2Hi = 10.0;
  constexpr int kNodes = 25;

  struct Partial {
    double gls_num = 0.0;
    double gls_den = 0.0;
    Eigen::VectorXd solve_one;  // C^-1 1
    Eigen::VectorXd solve_y;    // C^-1 y
  };

  std::optional<gp::HyperParams> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kNodes; ++k) {
    const double log_phi2 = kLogPhi2Lo + (kLogPhi2Hi - kLogPhi2Lo) * k / (kNodes - 1);
    const auto unit = gp::HyperParams::from_log(0.0, 0.0, log_phi2);
    std::vector<Partial> parts(meta.size());
    try {
      parallel_for(meta.size(), [&](std::size_t i) {
        const auto& data = meta.tasks[i].data;
        const auto chol = gp::jittered_cholesky(gp::kernel_matrix(unit, data.inputs, data.inputs), 1.0);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(data.outputs.size());
        const auto llt = chol.lower.triangularView<Eigen::Lower>();
        auto& p = parts[i];
        p.solve_one = llt.transpose().solve(llt.solve(ones));
        p.solve_y = llt.transpose().solve(llt.solve(data.outputs));
        p.gls_num = ones.dot(p.solve_y);
        p.gls_den = ones.dot(p.solve_one);
      });
    } catch (const NumericalError&) {
      continue;
    }
    double num = 0.0;
    double den = 0.0;
    for (const auto& p : parts) {
      num += p.gls_num;
      den += p.gls_den;
    }
    const double theta = num / den;
    double quad = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < meta.size(); ++i) {
      const auto& data = meta.tasks[i].data;
      // r' C^-1 r with r = y - theta 1, expanded so no extra solves are needed.
      const auto& p = parts[i];
      quad += data.outputs.dot(p.solve_y) - 2.0 * theta * p.gls_num + theta * theta * p.gls_den;
      count += data.total();
    }
    if (!(quad > 0.0) || count == 0) continue;
    const gp::HyperParams candidate{theta, std::sqrt(quad / static_cast<double>(count)), std::exp(log_phi2)};
    if (!candidate.valid()) continue;
    double value;
    try {
      value = mean_nmll(candidate, meta);
    } catch (const NumericalError&) {
      continue;
    }
    if (value < best_value) {
      best_value = value;
      best = candidate;
    }
  }
  return best ? *best : moment_matched_init(meta);
}

TrainResult train_trust_bayes(const taskgen::MetaDataset& meta, const bounds::BoundSpec& spec,
                              const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  meta.validate();
  const auto sizes = bounds::EvalSizes::from_counts(meta.t_evals());
  const auto feas = bounds::feasibility_check(sizes, spec.delta, spec.gamma_min);
  if (!feas.feasible) {
    std::ostringstream os;
    os << "infeasible: the feasibility inequality fails for n=" << sizes.n << ", delta=" << spec.delta
       << " (best certified bound " << feas.p_star << ", margin " << feas.margin << ")";
    throw InfeasibleError(os.str(), feas.margin);
  }
  const double base_target = bounds::required_mean_inclusion(sizes, spec);
  return run_training(meta, spec, cfg, base_target, true);
}

TrainResult train_meta_prior(const taskgen::MetaDataset& meta, const TrainConfig& cfg,
                             const bounds::BoundSpec& spec) {
  spec.validate();
  cfg.validate();
  meta.validate();
  return run_training(meta, spec, cfg, 0.0, false);
}

}  // namespace trustbayes::train
