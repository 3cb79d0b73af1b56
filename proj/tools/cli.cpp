#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "trustbayes/errors.hpp"
#include "trustbayes/io.hpp"
#include "trustbayes/svg.hpp"
#include "trustbayes/taskgen.hpp"

namespace trustbayes::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDatasetFile = "dataset.jsonl";
constexpr const char* kManifestFile = "dataset.manifest.json";

// ---- config parsing ----

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  if (!obj.is_object()) throw InputError("config: '" + where + "' must be an object");
  for (const auto& item : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return item.key() == k; })) {
      throw InputError("config: unknown key '" + (where.empty() ? "" : where + ".") + item.key() + "'");
    }
  }
}

void read_count(const json& obj, const char* key, std::size_t& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_unsigned()) throw InputError("config: '" + where + "." + key + "' must be a non-negative integer");
  out = it->get<std::size_t>();
}

void read_u64(const json& obj, const char* key, std::uint64_t& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_unsigned()) throw InputError("config: '" + where + key + "' must be a non-negative integer");
  out = it->get<std::uint64_t>();
}

void read_real(const json& obj, const char* key, double& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number()) throw InputError("config: '" + where + "." + key + "' must be a number");
  out = it->get<double>();
}

gp::HyperParams read_hyper(const json& obj, const std::string& where) {
  reject_unknown(obj, {"theta", "phi1", "phi2"}, where);
  gp::HyperParams h;
  for (const char* k : {"theta", "phi1", "phi2"}) {
    if (!obj.contains(k)) throw InputError("config: '" + where + "." + k + "' is required");
  }
  read_real(obj, "theta", h.theta, where);
  read_real(obj, "phi1", h.phi1, where);
  read_real(obj, "phi2", h.phi2, where);
  return h;
}

// ---- output helpers ----

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_output(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  io::write_file_atomically(path.string(), contents);
}

std::string display_label(const fs::path& hyper_file) {
  const std::string stem = hyper_file.stem().string();
  if (stem == "trust-bayes") return "Trust-Bayes";
  if (stem == "meta-prior") return "Meta-prior";
  return stem;
}

std::vector<Method> selected(Method m) {
  if (m == Method::kBoth) return {Method::kTrustBayes, Method::kMetaPrior};
  return {m};
}

// Shortest text that round-trips, for human-facing summaries.
std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// First "# config=" comment of a text file, if any.
std::string find_config_echo(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# config=", 0) == 0) return line.substr(9);
  }
  return {};
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::kTrustBayes: return "trust-bayes";
    case Method::kMetaPrior: return "meta-prior";
    case Method::kBoth: return "both";
  }
  return "both";
}

Method parse_method(const std::string& text) {
  if (text == "trust-bayes") return Method::kTrustBayes;
  if (text == "meta-prior") return Method::kMetaPrior;
  if (text == "both") return Method::kBoth;
  throw InputError("method must be trust-bayes, meta-prior or both (got '" + text + "')");
}

void RunConfig::validate() const {
  if (dataset.n < 1) throw InputError("config: dataset.n must be at least 1");
  if (dataset.t_eval < 1) throw InputError("config: dataset.t_eval must be at least 1");
  if (dataset.n_x != 1) throw InputError("config: only dataset.n_x = 1 is supported");
  spec.validate();
  train.validate();
  eval.validate();
  if (fixture.grid < 2) throw InputError("config: fixture.grid must be at least 2");
  if (fixture.n_funcs < 1) throw InputError("config: fixture.n_funcs must be at least 1");
}

json RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["method"] = method_name(method);
  j["dataset"] = {{"n", dataset.n}, {"t_tr", dataset.t_tr}, {"t_eval", dataset.t_eval}, {"n_x", dataset.n_x}};
  j["spec"] = {{"delta", spec.delta}, {"q", spec.q}, {"gamma_min", spec.gamma_min}};
  json t = {{"steps", train.steps},
            {"step_size", train.step_size},
            {"adam_beta1", train.adam_beta1},
            {"adam_beta2", train.adam_beta2},
            {"fd_step", train.fd_step},
            {"smoothing_tau", train.smoothing_tau},
            {"penalty_weight", train.penalty_weight},
            {"penalty_growth", train.penalty_growth},
            {"max_outer_rounds", train.max_outer_rounds},
            {"inclusion_buffer", train.inclusion_buffer}};
  if (train.init) t["init"] = {{"theta", train.init->theta}, {"phi1", train.init->phi1}, {"phi2", train.init->phi2}};
  j["train"] = t;
  j["eval"] = {{"n_test_tasks", eval.n_test_tasks},
               {"n_test_inputs", eval.n_test_inputs},
               {"t_tr_test", eval.t_tr_test},
               {"seed", eval.seed}};
  j["fixture"] = {{"n_funcs", fixture.n_funcs}, {"grid", fixture.grid}, {"t_tr", fixture.t_tr}, {"seed", fixture.seed}};
  return j;
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  reject_unknown(j, {"seed", "method", "output_dir", "dataset", "spec", "train", "eval", "fixture"}, "");
  RunConfig cfg;
  read_u64(j, "seed", cfg.seed, "");
  cfg.eval.seed = cfg.seed;
  cfg.fixture.seed = cfg.seed;
  if (const auto it = j.find("method"); it != j.end()) {
    if (!it->is_string()) throw InputError("config: 'method' must be a string");
    cfg.method = parse_method(it->get<std::string>());
  }
  cfg.output_dir = base_dir;
  if (const auto it = j.find("output_dir"); it != j.end()) {
    if (!it->is_string()) throw InputError("config: 'output_dir' must be a string");
    const fs::path p = it->get<std::string>();
    cfg.output_dir = p.is_absolute() ? p : base_dir / p;
  }
  if (const auto it = j.find("dataset"); it != j.end()) {
    reject_unknown(*it, {"n", "t_tr", "t_eval", "n_x"}, "dataset");
    read_count(*it, "n", cfg.dataset.n, "dataset");
    read_count(*it, "t_tr", cfg.dataset.t_tr, "dataset");
    read_count(*it, "t_eval", cfg.dataset.t_eval, "dataset");
    read_count(*it, "n_x", cfg.dataset.n_x, "dataset");
  }
  if (const auto it = j.find("spec"); it != j.end()) {
    reject_unknown(*it, {"delta", "q", "gamma_min"}, "spec");
    read_real(*it, "delta", cfg.spec.delta, "spec");
    read_real(*it, "q", cfg.spec.q, "spec");
    read_real(*it, "gamma_min", cfg.spec.gamma_min, "spec");
  }
  if (const auto it = j.find("train"); it != j.end()) {
    reject_unknown(*it,
                   {"steps", "step_size", "adam_beta1", "adam_beta2", "fd_step", "smoothing_tau", "penalty_weight",
                    "penalty_growth", "max_outer_rounds", "inclusion_buffer", "init"},
                   "train");
    auto& t = cfg.train;
    read_count(*it, "steps", t.steps, "train");
    read_real(*it, "step_size", t.step_size, "train");
    read_real(*it, "adam_beta1", t.adam_beta1, "train");
    read_real(*it, "adam_beta2", t.adam_beta2, "train");
    read_real(*it, "fd_step", t.fd_step, "train");
    read_real(*it, "smoothing_tau", t.smoothing_tau, "train");
    read_real(*it, "penalty_weight", t.penalty_weight, "train");
    read_real(*it, "penalty_growth", t.penalty_growth, "train");
    read_count(*it, "max_outer_rounds", t.max_outer_rounds, "train");
    read_real(*it, "inclusion_buffer", t.inclusion_buffer, "train");
    if (const auto init = it->find("init"); init != it->end() && !init->is_null()) {
      t.init = read_hyper(*init, "train.init");
    }
  }
  if (const auto it = j.find("eval"); it != j.end()) {
    reject_unknown(*it, {"n_test_tasks", "n_test_inputs", "t_tr_test", "seed"}, "eval");
    read_count(*it, "n_test_tasks", cfg.eval.n_test_tasks, "eval");
    read_count(*it, "n_test_inputs", cfg.eval.n_test_inputs, "eval");
    read_count(*it, "t_tr_test", cfg.eval.t_tr_test, "eval");
    read_u64(*it, "seed", cfg.eval.seed, "eval.");
  }
  if (const auto it = j.find("fixture"); it != j.end()) {
    reject_unknown(*it, {"n_funcs", "grid", "t_tr", "seed"}, "fixture");
    read_count(*it, "n_funcs", cfg.fixture.n_funcs, "fixture");
    read_count(*it, "grid", cfg.fixture.grid, "fixture");
    read_count(*it, "t_tr", cfg.fixture.t_tr, "fixture");
    read_u64(*it, "seed", cfg.fixture.seed, "fixture.");
  }
  cfg.train.seed = cfg.seed;
  cfg.eval.q = cfg.spec.q;
  cfg.fixture.q = cfg.spec.q;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
  try {
    return parse_run_config(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

int cmd_gen(const RunConfig& cfg, const GenOptions& opts, std::ostream& log) {
  cfg.validate();
  const fs::path out = opts.out ? *opts.out : cfg.output_dir / kDatasetFile;
  const auto meta = taskgen::gen_meta_dataset(cfg.dataset.n, cfg.dataset.t_tr, cfg.dataset.t_eval, cfg.seed);
  std::ostringstream data;
  io::write_dataset(data, meta);
  write_output(out, data.str());

  json manifest;
  manifest["dataset"] = out.filename().string();
  manifest["tasks"] = meta.size();
  manifest["seed"] = cfg.seed;
  manifest["config"] = cfg.to_json();
  write_output(out.parent_path() / kManifestFile, manifest.dump(2) + "\n");
  log << "wrote " << meta.size() << " tasks to " << out.string() << '\n';
  return kOk;
}

int cmd_train(const RunConfig& cfg, const TrainOptions& opts, std::ostream& log) {
  cfg.validate();
  const fs::path dataset = opts.dataset ? *opts.dataset : cfg.output_dir / kDatasetFile;
  const auto meta = io::read_dataset_file(dataset.string(), cfg.seed);
  // Echo the geometry of the data actually trained on.
  RunConfig used = cfg;
  used.dataset.n = meta.size();
  used.dataset.t_tr = meta.tasks.front().data.t_tr;
  used.dataset.t_eval = meta.tasks.front().data.t_eval();
  const std::string echo = used.echo();
  ensure_dir(cfg.output_dir);

  bool uncertified = false;
  for (Method m : selected(cfg.method)) {
    const auto result = m == Method::kTrustBayes ? train::train_trust_bayes(meta, cfg.spec, cfg.train)
                                                 : train::train_meta_prior(meta, cfg.train, cfg.spec);
    const auto& c = result.log.certification;
    const std::string name = method_name(m);

    std::ostringstream hyper;
    io::write_hyper_record(hyper, {result.hyper, c}, echo);
    write_output(cfg.output_dir / (name + ".hyper"), hyper.str());
    std::ostringstream csv;
    io::write_train_log_csv(csv, result.log, echo);
    write_output(cfg.output_dir / (name + ".log.csv"), csv.str());

    log << name << ": theta=" << shortest(result.hyper.theta) << " phi1=" << shortest(result.hyper.phi1)
        << " phi2=" << shortest(result.hyper.phi2) << " prior_inclusion=" << c.prior_inclusion
        << " posterior_inclusion=" << c.posterior_inclusion << " p1_star=" << c.p1_star << " p2_star=" << c.p2_star
        << " certified=" << (c.certified ? "true" : "false") << " rounds=" << result.log.rounds << '\n';
    if (m == Method::kTrustBayes && !c.certified) {
      uncertified = true;
      log << "trust-bayes: certification not reached within " << cfg.train.max_outer_rounds << " rounds\n";
    }
  }
  return uncertified ? kUncertified : kOk;
}

int cmd_eval(const RunConfig& cfg, const EvalOptions& opts, std::ostream& log) {
  cfg.validate();
  std::vector<fs::path> files = opts.hyper_files;
  if (files.empty()) {
    for (Method m : selected(cfg.method)) files.push_back(cfg.output_dir / (method_name(m) + ".hyper"));
  }
  // Read everything first so a missing file fails before any work.
  std::vector<gp::HyperParams> hypers;
  for (const auto& f : files) hypers.push_back(io::read_hyper_record_file(f.string()).hyper);

  std::optional<taskgen::MetaDataset> training;
  const fs::path default_dataset = cfg.output_dir / kDatasetFile;
  if (opts.dataset) {
    training = io::read_dataset_file(opts.dataset->string(), cfg.seed);
  } else if (fs::exists(default_dataset)) {
    training = io::read_dataset_file(default_dataset.string(), cfg.seed);
  }

  const std::string echo = cfg.echo();
  ensure_dir(cfg.output_dir);
  std::vector<io::NamedReport> reports;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto report = eval::monte_carlo_eval(hypers[i], cfg.eval, training ? &*training : nullptr);
    const std::string label = display_label(files[i]);
    const std::string stem = files[i].stem().string();

    std::ostringstream text;
    io::write_eval_report_text(text, report, label, echo);
    write_output(cfg.output_dir / (stem + ".eval.txt"), text.str());
    std::ostringstream csv;
    csv << "# config=" << echo << '\n';
    io::write_eval_report_csv(csv, report, label);
    write_output(cfg.output_dir / (stem + ".eval.csv"), csv.str());
    reports.push_back({label, report});
  }

  std::ostringstream table;
  io::write_comparison_table(table, reports);
  log << table.str();
  if (reports.size() >= 2) {
    write_output(cfg.output_dir / "comparison.txt", "# config=" + echo + "\n" + table.str());
    if (opts.fixture) {
      const auto records = eval::emit_function_fixture(hypers[0], hypers[1], cfg.fixture);
      std::ostringstream fx;
      io::write_fixture_csv(fx, records, echo);
      write_output(cfg.output_dir / "fixture.csv", fx.str());
    }
  }
  return kOk;
}

int cmd_feasibility(const FeasibilityOptions& opts, double gamma_min, std::ostream& out) {
  if (opts.t_eval < 1) throw InputError("feasibility: t_eval must be at least 1");
  if (!(opts.delta >= 0.0 && opts.delta <= 1.0)) throw InputError("feasibility: delta must lie in [0, 1]");
  if (opts.min_n) {
    if (!(opts.delta > 0.0 && opts.delta < 1.0)) throw InputError("feasibility: --min-n needs delta in (0, 1)");
    const std::size_t n = bounds::min_tasks_for_delta(opts.delta, opts.t_eval);
    if (opts.json) {
      out << json{{"min_n", n}, {"t_eval", opts.t_eval}, {"delta", opts.delta}}.dump() << '\n';
    } else {
      out << "min_n=" << n << " t_eval=" << opts.t_eval << " delta=" << shortest(opts.delta) << '\n';
    }
    return kOk;
  }
  if (opts.n < 1) throw InputError("feasibility: n must be at least 1");
  const auto f = bounds::feasibility_check(bounds::EvalSizes::uniform(opts.n, opts.t_eval), opts.delta, gamma_min);
  if (opts.json) {
    out << json{{"feasible", f.feasible}, {"margin", f.margin},  {"gamma_star", f.gamma_star}, {"p_star", f.p_star},
                {"n", opts.n},           {"t_eval", opts.t_eval}, {"delta", opts.delta}}
               .dump()
        << '\n';
  } else {
    out << "feasible=" << (f.feasible ? "true" : "false") << " margin=" << shortest(f.margin)
        << " gamma_star=" << shortest(f.gamma_star) << " p_star=" << shortest(f.p_star) << " n=" << opts.n
        << " t_eval=" << opts.t_eval << " delta=" << shortest(opts.delta) << '\n';
  }
  return f.feasible ? kOk : kInfeasible;
}

int cmd_plot(const PlotOptions& opts, std::ostream& log) {
  const auto table = io::read_csv_file(opts.input.string());
  fs::path output = opts.output ? *opts.output : fs::path(opts.input).replace_extension(".svg");
  std::string doc;
  if (table.header == io::kTrainLogColumns) {
    doc = svg::train_log_chart(io::train_log_from_csv(table), opts.required);
  } else if (table.header == io::kFixtureColumns) {
    const auto records = io::fixture_from_csv(table);
    if (records.empty()) throw InputError(opts.input.string() + ": fixture CSV has no rows");
    doc = svg::fixture_chart(records);
  } else {
    throw InputError(opts.input.string() + ": header matches neither a training log nor a function fixture");
  }
  if (const auto echo = find_config_echo(opts.input); !echo.empty()) {
    // Keep the run's config with the figure; "--" is not allowed inside XML comments.
    std::string safe = echo;
    for (auto pos = safe.find("--"); pos != std::string::npos; pos = safe.find("--", pos)) safe.replace(pos, 2, "-\\-");
    const auto after_decl = doc.find('\n');
    doc.insert(after_decl == std::string::npos ? 0 : after_decl + 1, "<!-- config=" + safe + " -->\n");
  }
  write_output(output, doc);
  log << "wrote " << output.string() << '\n';
  return kOk;
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const InfeasibleError& e) {
    err << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const NotFoundError& e) {
    err << "not found: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace trustbayes::cli
