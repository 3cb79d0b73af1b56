#include <benchmark/benchmark.h>

#include "trustbayes/bounds.hpp"
#include "trustbayes/gp.hpp"
#include "trustbayes/meta_train.hpp"
#include "trustbayes/taskgen.hpp"

using namespace trustbayes;

namespace {

const gp::HyperParams kHyper{0.8, 27.0, 400.0};

taskgen::MetaTask one_task(std::size_t t) { return taskgen::generate_task(1, StreamNamespace::kAuxiliary, 0, t, 1); }

void BM_FitPosterior(benchmark::State& state) {
  const auto task = one_task(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto post = gp::fit_posterior(kHyper, task.data.train_inputs(), task.data.train_outputs());
    benchmark::DoNotOptimize(post);
  }
}
BENCHMARK(BM_FitPosterior)->Arg(10)->Arg(20)->Arg(100);

void BM_NegMll(benchmark::State& state) {
  const auto task = one_task(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gp::neg_mll(kHyper, task.data.inputs, task.data.outputs));
}
BENCHMARK(BM_NegMll)->Arg(30)->Arg(120);

void BM_NegMllWithGradient(benchmark::State& state) {
  const auto task = one_task(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gp::neg_mll_with_gradient(kHyper, task.data.inputs, task.data.outputs));
}
BENCHMARK(BM_NegMllWithGradient)->Arg(30)->Arg(120);

// One penalized objective evaluation over a desk-sized meta dataset; the
// optimizer pays seven of these per step.
void BM_ObjectiveTerms(benchmark::State& state) {
  const auto meta = taskgen::gen_meta_dataset(static_cast<std::size_t>(state.range(0)), 10, 50, 1);
  for (auto _ : state) benchmark::DoNotOptimize(train::evaluate_terms(kHyper, meta, 1.64, 0.05));
}
BENCHMARK(BM_ObjectiveTerms)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_MaximizeGamma(benchmark::State& state) {
  const auto sizes = bounds::EvalSizes::uniform(2000, 100);
  const bounds::BoundSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(bounds::maximize_gamma(0.99, sizes, spec));
}
BENCHMARK(BM_MaximizeGamma);

}  // namespace
BENCHMARK_MAIN();
