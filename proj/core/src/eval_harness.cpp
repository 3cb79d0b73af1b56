#include "trustbayes/eval_harness.hpp"

#include <cmath>
#include <limits>

#include "trustbayes/errors.hpp"
#include "trustbayes/parallel.hpp"

namespace trustbayes::eval {

void EvalConfig::validate() const {
  if (n_test_tasks < 1 || n_test_inputs < 1) throw InputError("eval counts must be at least 1");
  if (!(q > 0.0) || !std::isfinite(q)) throw InputError("eval q must be positive");
}

taskgen::MetaTask make_test_task(const EvalConfig& cfg, std::uint64_t task_id) {
  return taskgen::generate_task(cfg.seed, StreamNamespace::kTest, task_id, cfg.t_tr_test, cfg.n_test_inputs);
}

taskgen::MetaDataset make_test_dataset(const EvalConfig& cfg) {
  cfg.validate();
  taskgen::MetaDataset meta;
  meta.seed = cfg.seed;
  meta.tasks.resize(cfg.n_test_tasks);
  parallel_for(cfg.n_test_tasks, [&](std::size_t i) { meta.tasks[i] = make_test_task(cfg, i); });
  return meta;
}

EvalReport monte_carlo_eval(const gp::HyperParams& hyper, const EvalConfig& cfg,
                            const taskgen::MetaDataset* training) {
  cfg.validate();
  hyper.validate();

  std::vector<bounds::TaskEvaluation> per_task(cfg.n_test_tasks);
  parallel_for(cfg.n_test_tasks, [&](std::size_t i) {
    const auto mt = make_test_task(cfg, i);
    try {
      per_task[i] = bounds::evaluate_task(hyper, mt.data, cfg.q);
    } catch (const NumericalError& err) {
      throw NumericalError("test task " + std::to_string(i) + " (seed " + std::to_string(cfg.seed) +
                               "): " + err.what(),
                           err.attempted_jitter());
    }
  });

  EvalReport report;
  report.config = cfg;
  report.hyper = hyper;
  for (const auto& e : per_task) {
    report.prior_inclusion += e.prior_inclusion;
    report.posterior_inclusion += e.posterior_inclusion;
    report.mse += e.squared_error;
  }
  const auto n = static_cast<double>(per_task.size());
  report.prior_inclusion /= n;
  report.posterior_inclusion /= n;
  report.mse /= n;

  if (training != nullptr) {
    bounds::BoundSpec spec;
    spec.q = cfg.q;
    const auto stats = bounds::compute_inclusion_stats(hyper, *training, spec);
    report.eval_split_prior_inclusion = stats.mean_prior();
    report.eval_split_posterior_inclusion = stats.mean_posterior();
  } else {
    report.eval_split_prior_inclusion = std::numeric_limits<double>::quiet_NaN();
    report.eval_split_posterior_inclusion = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

std::vector<FixtureRecord> emit_function_fixture(const gp::HyperParams& hyper_a, const gp::HyperParams& hyper_b,
                                                 const FixtureConfig& cfg) {
  if (cfg.grid < 2) throw InputError("fixture grid needs at least 2 points");
  if (cfg.n_funcs < 1) throw InputError("fixture needs at least one function");
  hyper_a.validate();
  hyper_b.validate();

  gp::InputMatrix grid(1, static_cast<Eigen::Index>(cfg.grid));
  for (std::size_t g = 0; g < cfg.grid; ++g) {
    grid(0, static_cast<Eigen::Index>(g)) = static_cast<double>(g) / static_cast<double>(cfg.grid - 1);
  }

  std::vector<FixtureRecord> records(cfg.n_funcs * cfg.grid);
  parallel_for(cfg.n_funcs, [&](std::size_t f) {
    // Zero query points: only the task and its training inputs are drawn.
    const auto mt = taskgen::generate_task(cfg.seed, StreamNamespace::kFixture, f, cfg.t_tr, 0);
    const auto post_a = gp::Posterior::fit(hyper_a, mt.data.train_inputs(), mt.data.train_outputs());
    const auto post_b = gp::Posterior::fit(hyper_b, mt.data.train_inputs(), mt.data.train_outputs());
    const auto pred_a = post_a.predict_many(grid);
    const auto pred_b = post_b.predict_many(grid);
    for (std::size_t g = 0; g < cfg.grid; ++g) {
      const auto col = grid.col(static_cast<Eigen::Index>(g));
      auto& r = records[f * cfg.grid + g];
      r.func_id = f;
      r.x = col(0);
      r.f = mt.task(r.x);
      r.a_prior = gp::prior_interval(hyper_a, col, cfg.q);
      r.a_post = pred_a[g].interval(cfg.q);
      r.b_prior = gp::prior_interval(hyper_b, col, cfg.q);
      r.b_post = pred_b[g].interval(cfg.q);
    }
  });
  return records;
}

}  // namespace trustbayes::eval
