#include "trustbayes/taskgen.hpp"

#include <cmath>
#include <sstream>

#include "trustbayes/errors.hpp"
#include "trustbayes/parallel.hpp"

namespace trustbayes::taskgen {

namespace {

double mixture(RandomStream& rng, double mean_a, double sd_a, double mean_b, double sd_b) {
  const bool first = rng.bernoulli(0.5);
  return first ? rng.normal(mean_a, sd_a) : rng.normal(mean_b, sd_b);
}

}  // namespace

double Task::operator()(double x) const noexcept {
  double value = d * x * x;
  for (const auto& t : terms) {
    value += alpha * t.a * std::sin(t.w * x + t.beta) + (1 - alpha) * t.b * std::sin(t.u * x + t.beta);
  }
  return value;
}

bool Task::valid() const noexcept {
  if (!std::isfinite(d) || (alpha != 0 && alpha != 1)) return false;
  for (const auto& t : terms) {
    if (!std::isfinite(t.a) || !std::isfinite(t.b) || !std::isfinite(t.w) || !std::isfinite(t.u) ||
        !std::isfinite(t.beta)) {
      return false;
    }
  }
  return true;
}

Task sample_task(RandomStream& rng) {
  Task task;
  for (auto& t : task.terms) {
    t.a = mixture(rng, -20.0, 5.0, 10.0, 2.0);
    t.b = mixture(rng, -1.0, 0.1, 1.0, 0.1);
    t.w = mixture(rng, -10.0, 10.0, 10.0, 10.0);
    t.u = mixture(rng, -100.0, 10.0, 100.0, 10.0);
    t.beta = rng.normal(0.0, 1.0);
  }
  task.d = mixture(rng, -10.0, 1.0, 10.0, 1.0);
  task.alpha = rng.bernoulli(0.5) ? 1 : 0;
  return task;
}

void TaskData::validate() const {
  if (inputs.cols() != outputs.size()) throw InputError("task " + std::to_string(task_id) + ": x/y length mismatch");
  if (inputs.rows() < 1) throw InputError("task " + std::to_string(task_id) + ": inputs need at least one dimension");
  if (t_tr > total()) throw InputError("task " + std::to_string(task_id) + ": t_tr exceeds number of samples");
  if (!inputs.allFinite() || !outputs.allFinite()) {
    throw InputError("task " + std::to_string(task_id) + ": non-finite sample");
  }
}

void MetaDataset::validate() const {
  if (tasks.empty()) throw InputError("meta dataset has no tasks");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& mt = tasks[i];
    if (mt.data.task_id != i) {
      std::ostringstream os;
      os << "task ids must be contiguous from 0; position " << i << " holds id " << mt.data.task_id;
      throw InputError(os.str());
    }
    if (!mt.task.valid()) throw InputError("task " + std::to_string(i) + ": invalid coefficients");
    mt.data.validate();
  }
}

std::vector<std::size_t> MetaDataset::t_evals() const {
  std::vector<std::size_t> out;
  out.reserve(tasks.size());
  for (const auto& mt : tasks) out.push_back(mt.data.t_eval());
  return out;
}

MetaTask generate_task(std::uint64_t seed, StreamNamespace ns, std::uint64_t task_id, std::size_t t_tr,
                       std::size_t t_eval) {
  RandomStream rng(seed, ns, task_id);
  MetaTask mt;
  mt.task = sample_task(rng);
  const auto total = static_cast<Eigen::Index>(t_tr + t_eval);
  mt.data.task_id = task_id;
  mt.data.t_tr = t_tr;
  mt.data.inputs.resize(1, total);
  mt.data.outputs.resize(total);
  for (Eigen::Index t = 0; t < total; ++t) {
    const double x = rng.uniform();
    mt.data.inputs(0, t) = x;
    mt.data.outputs(t) = mt.task(x);
  }
  return mt;
}

MetaDataset gen_meta_dataset(std::size_t n, std::size_t t_tr, std::size_t t_eval, std::uint64_t seed) {
  if (n < 1) throw InputError("number of tasks n must be at least 1");
  if (t_eval < 1) throw InputError("t_eval must be at least 1");

  MetaDataset meta;
  meta.seed = seed;
  meta.tasks.resize(n);
  parallel_for(n, [&](std::size_t i) {
    meta.tasks[i] = generate_task(seed, StreamNamespace::kMetaTrain, i, t_tr, t_eval);
  });
  return meta;
}

}  // namespace trustbayes::taskgen
