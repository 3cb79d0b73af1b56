#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "trustbayes/errors.hpp"
#include "trustbayes/eval_harness.hpp"
#include "trustbayes/parallel.hpp"

namespace trustbayes::eval {
namespace {

const gp::HyperParams kHyper{0.8, 27.0, std::exp(6.0)};

EvalConfig small_config() {
  EvalConfig cfg;
  cfg.n_test_tasks = 40;
  cfg.n_test_inputs = 60;
  cfg.t_tr_test = 8;
  cfg.seed = 5;
  return cfg;
}

TEST(MonteCarloEval, HugeAmplitudeCapturesAll) {
  const auto rep = monte_carlo_eval({0.0, 1e6, 1.0}, small_config());
  EXPECT_EQ(rep.prior_inclusion, 1.0);
  EXPECT_TRUE(std::isnan(rep.eval_split_prior_inclusion));
}

TEST(MonteCarloEval, MatchesInclusionStatsOnMaterializedTestSet) {
  const auto cfg = small_config();
  const auto rep = monte_carlo_eval(kHyper, cfg);
  const auto stats = bounds::compute_inclusion_stats(kHyper, make_test_dataset(cfg), {});
  EXPECT_EQ(rep.prior_inclusion, stats.mean_prior());
  EXPECT_EQ(rep.posterior_inclusion, stats.mean_posterior());
  EXPECT_GE(rep.mse, 0.0);
  EXPECT_GE(rep.prior_inclusion, 0.0);
  EXPECT_LE(rep.posterior_inclusion, 1.0);
}

TEST(MonteCarloEval, GrandMeansRecombinePerTaskMeans) {
  const auto cfg = small_config();
  const auto test = make_test_dataset(cfg);
  double prior = 0.0, post = 0.0, mse = 0.0;
  for (const auto& mt : test.tasks) {
    const auto e = bounds::evaluate_task(kHyper, mt.data, cfg.q);
    prior += e.prior_inclusion;
    post += e.posterior_inclusion;
    mse += e.squared_error;
  }
  const auto n = static_cast<double>(test.size());
  const auto rep = monte_carlo_eval(kHyper, cfg);
  EXPECT_EQ(rep.prior_inclusion, prior / n);
  EXPECT_EQ(rep.posterior_inclusion, post / n);
  EXPECT_EQ(rep.mse, mse / n);
}

TEST(MonteCarloEval, MseInvariantToTaskOrder) {
  const auto cfg = small_config();
  const auto test = make_test_dataset(cfg);
  std::vector<double> errs;
  for (const auto& mt : test.tasks) errs.push_back(bounds::evaluate_task(kHyper, mt.data, cfg.q).squared_error);
  const double forward = std::accumulate(errs.begin(), errs.end(), 0.0);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(errs.begin(), errs.end(), rng);
    EXPECT_NEAR(std::accumulate(errs.begin(), errs.end(), 0.0), forward, 1e-12 * forward);
  }
  // Per-task errors do not depend on which other tasks were generated.
  auto bigger = cfg;
  bigger.n_test_tasks = 2 * cfg.n_test_tasks;
  const auto more = make_test_dataset(bigger);
  for (std::size_t i = 0; i < test.size(); ++i) {
    EXPECT_EQ(bounds::evaluate_task(kHyper, more.tasks[i].data, cfg.q).squared_error,
              bounds::evaluate_task(kHyper, test.tasks[i].data, cfg.q).squared_error);
  }
}

TEST(MonteCarloEval, ThreadCountInvariant) {
  set_max_threads(1);
  const auto a = monte_carlo_eval(kHyper, small_config());
  set_max_threads(4);
  const auto b = monte_carlo_eval(kHyper, small_config());
  set_max_threads(0);
  EXPECT_EQ(a.prior_inclusion, b.prior_inclusion);
  EXPECT_EQ(a.posterior_inclusion, b.posterior_inclusion);
  EXPECT_EQ(a.mse, b.mse);
}

TEST(MonteCarloEval, TrainingSplitDiagnostics) {
  const auto meta = taskgen::gen_meta_dataset(10, 4, 12, 3);
  const auto rep = monte_carlo_eval(kHyper, small_config(), &meta);
  const auto stats = bounds::compute_inclusion_stats(kHyper, meta, {});
  EXPECT_EQ(rep.eval_split_prior_inclusion, stats.mean_prior());
  EXPECT_EQ(rep.eval_split_posterior_inclusion, stats.mean_posterior());
}

TEST(MonteCarloEval, RejectsBadConfig) {
  auto cfg = small_config();
  cfg.n_test_inputs = 0;
  EXPECT_THROW(monte_carlo_eval(kHyper, cfg), InputError);
  EXPECT_THROW(monte_carlo_eval({0.0, -1.0, 1.0}, small_config()), InputError);
}

TEST(TestTasks, DisjointFromTrainingStreams) {
  const auto cfg = small_config();
  const auto train = taskgen::gen_meta_dataset(cfg.n_test_tasks, cfg.t_tr_test, cfg.n_test_inputs, cfg.seed);
  const auto test = make_test_dataset(cfg);
  for (std::size_t i = 0; i < test.size(); ++i) EXPECT_NE(train.tasks[i].task, test.tasks[i].task);
}

TEST(Fixture, ShapeContract) {
  const auto recs = emit_function_fixture(kHyper, {0.0, 5.0, 50.0}, {});
  ASSERT_EQ(recs.size(), 10u * 200u);
  for (std::size_t f = 0; f < 10; ++f) {
    EXPECT_EQ(recs[f * 200].x, 0.0);
    EXPECT_EQ(recs[f * 200 + 199].x, 1.0);
    for (std::size_t g = 0; g < 200; ++g) {
      const auto& r = recs[f * 200 + g];
      EXPECT_EQ(r.func_id, f);
      EXPECT_LE(r.a_prior.lo, r.a_prior.hi);
      EXPECT_LE(r.b_post.lo, r.b_post.hi);
    }
  }
}

TEST(Fixture, IdenticalHypersGiveIdenticalColumns) {
  FixtureConfig cfg;
  cfg.n_funcs = 3;
  cfg.grid = 25;
  for (const auto& r : emit_function_fixture(kHyper, kHyper, cfg)) {
    EXPECT_EQ(r.a_prior.lo, r.b_prior.lo);
    EXPECT_EQ(r.a_prior.hi, r.b_prior.hi);
    EXPECT_EQ(r.a_post.lo, r.b_post.lo);
    EXPECT_EQ(r.a_post.hi, r.b_post.hi);
  }
}

TEST(Fixture, TruthMatchesTaskAndGridGuard) {
  FixtureConfig cfg;
  cfg.grid = 1;
  EXPECT_THROW(emit_function_fixture(kHyper, kHyper, cfg), InputError);
  cfg.grid = 5;
  cfg.n_funcs = 2;
  const auto recs = emit_function_fixture(kHyper, kHyper, cfg);
  const auto mt = taskgen::generate_task(cfg.seed, StreamNamespace::kFixture, 1, cfg.t_tr, 0);
  EXPECT_EQ(recs[7].f, taskgen::eval_task(mt.task, recs[7].x));
}

}  // namespace
}  // namespace trustbayes::eval
