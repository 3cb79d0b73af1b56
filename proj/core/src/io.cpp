#include "trustbayes/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "trustbayes/errors.hpp"

namespace trustbayes::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void write_echo(std::ostream& out, std::string_view config_echo) {
  if (!config_echo.empty()) out << "# config=" << config_echo << '\n';
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

double json_real(const nlohmann::json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) throw InputError(std::string("missing numeric field '") + key + "'");
  return it->get<double>();
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view text) {
  const std::string s = trim(text);
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (s.empty() || res.ec != std::errc() || res.ptr != last) throw InputError("not a number: '" + s + "'");
  return value;
}

// ---- hyper record ----

void write_hyper_record(std::ostream& out, const HyperRecord& record, std::string_view config_echo) {
  write_echo(out, config_echo);
  out << "theta=" << format_real(record.hyper.theta) << '\n'
      << "phi1=" << format_real(record.hyper.phi1) << '\n'
      << "phi2=" << format_real(record.hyper.phi2) << '\n';
  if (record.certification) {
    const auto& c = *record.certification;
    out << "certified=" << (c.certified ? "true" : "false") << '\n'
        << "p1_star=" << format_real(c.p1_star) << '\n'
        << "p2_star=" << format_real(c.p2_star) << '\n'
        << "gamma1_star=" << format_real(c.gamma1_star) << '\n'
        << "gamma2_star=" << format_real(c.gamma2_star) << '\n';
  }
}

HyperRecord read_hyper_record(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError("hyper record line " + std::to_string(lineno) + ": expected key=value");
    kv[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  static const char* kKnown[] = {"theta", "phi1", "phi2", "certified", "p1_star", "p2_star", "gamma1_star",
                                 "gamma2_star"};
  for (const auto& [key, value] : kv) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw InputError("hyper record: unknown key '" + key + "'");
    }
  }
  auto need = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InputError(std::string("hyper record: missing key '") + key + "'");
    return parse_real(it->second);
  };
  HyperRecord rec;
  rec.hyper = {need("theta"), need("phi1"), need("phi2")};
  rec.hyper.validate();
  if (kv.count("certified") != 0) {
    train::Certification c;
    const auto& flag = kv["certified"];
    if (flag != "true" && flag != "false") throw InputError("hyper record: certified must be true or false");
    c.certified = flag == "true";
    c.p1_star = need("p1_star");
    c.p2_star = need("p2_star");
    c.gamma1_star = need("gamma1_star");
    c.gamma2_star = need("gamma2_star");
    rec.certification = c;
  }
  return rec;
}

HyperRecord read_hyper_record_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return read_hyper_record(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

// ---- dataset ----

std::string dataset_record(const taskgen::MetaTask& mt) {
  if (mt.data.inputs.rows() != 1) throw InputError("dataset files hold one-dimensional inputs only");
  std::ostringstream os;
  os << "{\"task_id\":" << mt.data.task_id << ",\"d\":" << format_real(mt.task.d) << ",\"alpha\":" << mt.task.alpha
     << ",\"coeffs\":[";
  for (std::size_t m = 0; m < mt.task.terms.size(); ++m) {
    const auto& t = mt.task.terms[m];
    os << (m ? "," : "") << "{\"a\":" << format_real(t.a) << ",\"b\":" << format_real(t.b)
       << ",\"w\":" << format_real(t.w) << ",\"u\":" << format_real(t.u) << ",\"beta\":" << format_real(t.beta)
       << '}';
  }
  os << "],\"x\":[";
  for (Eigen::Index i = 0; i < mt.data.inputs.cols(); ++i) os << (i ? "," : "") << format_real(mt.data.inputs(0, i));
  os << "],\"y\":[";
  for (Eigen::Index i = 0; i < mt.data.outputs.size(); ++i) os << (i ? "," : "") << format_real(mt.data.outputs(i));
  os << "],\"t_tr\":" << mt.data.t_tr << '}';
  return os.str();
}

void write_dataset(std::ostream& out, const taskgen::MetaDataset& meta) {
  for (const auto& mt : meta.tasks) out << dataset_record(mt) << '\n';
}

taskgen::MetaDataset read_dataset(std::istream& in, std::uint64_t seed) {
  taskgen::MetaDataset meta;
  meta.seed = seed;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      static const char* kKeys[] = {"task_id", "d", "alpha", "coeffs", "x", "y", "t_tr"};
      for (const auto& item : j.items()) {
        if (std::find(std::begin(kKeys), std::end(kKeys), item.key()) == std::end(kKeys)) {
          throw InputError("unknown field '" + item.key() + "'");
        }
      }
      taskgen::MetaTask mt;
      mt.data.task_id = j.at("task_id").get<std::uint64_t>();
      mt.task.d = json_real(j, "d");
      mt.task.alpha = j.at("alpha").get<int>();
      const auto& coeffs = j.at("coeffs");
      if (!coeffs.is_array() || coeffs.size() != taskgen::kNumTerms) throw InputError("coeffs must hold 10 entries");
      for (std::size_t m = 0; m < taskgen::kNumTerms; ++m) {
        const auto& c = coeffs[m];
        mt.task.terms[m] = {json_real(c, "a"), json_real(c, "b"), json_real(c, "w"), json_real(c, "u"),
                            json_real(c, "beta")};
      }
      const auto xs = j.at("x").get<std::vector<double>>();
      const auto ys = j.at("y").get<std::vector<double>>();
      if (xs.size() != ys.size()) throw InputError("x and y differ in length");
      mt.data.inputs = Eigen::Map<const Eigen::RowVectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
      mt.data.outputs = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
      mt.data.t_tr = j.at("t_tr").get<std::size_t>();
      if (!mt.task.valid()) throw InputError("invalid task coefficients");
      mt.data.validate();
      meta.tasks.push_back(std::move(mt));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("dataset line " + std::to_string(lineno) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  meta.validate();
  return meta;
}

taskgen::MetaDataset read_dataset_file(const std::string& path, std::uint64_t seed) {
  auto in = open_input(path);
  try {
    return read_dataset(in, seed);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

// ---- CSV ----

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InputError("CSV has no column '" + std::string(name) + "'");
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(t, ',');
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw InputError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(table.header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      try {
        row.push_back(parse_real(f));
      } catch (const InputError& e) {
        throw InputError("CSV line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(lineno);
  }
  if (table.header.empty()) throw InputError("CSV is empty");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return read_csv(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

const std::vector<std::string> kTrainLogColumns = {
    "step",    "nmll",    "smoothed_prior_incl", "smoothed_post_incl", "exact_prior_incl", "exact_post_incl",
    "p1_star", "p2_star", "theta",               "phi1",               "phi2"};

const std::vector<std::string> kFixtureColumns = {"func_id",   "x",          "f",          "a_prior_lo",
                                                  "a_prior_hi", "a_post_lo",  "a_post_hi",  "b_prior_lo",
                                                  "b_prior_hi", "b_post_lo",  "b_post_hi"};

const std::vector<std::string> kEvalReportColumns = {
    "method",         "prior_inclusion", "posterior_inclusion", "mse", "eval_split_prior_inclusion",
    "eval_split_posterior_inclusion", "n_test_tasks", "n_test_inputs", "t_tr_test", "q", "seed", "theta", "phi1",
    "phi2"};

namespace {

void write_header(std::ostream& out, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

void require_header(const CsvTable& table, const std::vector<std::string>& cols, const char* what) {
  if (table.header != cols) throw InputError(std::string("CSV header does not match the ") + what + " layout");
}

std::size_t as_count(double v, std::size_t line) {
  if (!(v >= 0.0) || v != std::floor(v)) {
    throw InputError("CSV line " + std::to_string(line) + ": expected a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

void write_train_log_csv(std::ostream& out, const train::TrainLog& log, std::string_view config_echo) {
  write_echo(out, config_echo);
  write_header(out, kTrainLogColumns);
  for (const auto& r : log.records) {
    out << r.step << ',' << format_real(r.nmll) << ',' << format_real(r.smoothed_prior_incl) << ','
        << format_real(r.smoothed_post_incl) << ',' << format_real(r.exact_prior_incl) << ','
        << format_real(r.exact_post_incl) << ',' << format_real(r.p1_star) << ',' << format_real(r.p2_star) << ','
        << format_real(r.hyper.theta) << ',' << format_real(r.hyper.phi1) << ',' << format_real(r.hyper.phi2)
        << '\n';
  }
}

train::TrainLog train_log_from_csv(const CsvTable& table) {
  require_header(table, kTrainLogColumns, "training log");
  train::TrainLog log;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    train::TrainRecord r;
    r.step = as_count(row[0], table.line_numbers[i]);
    r.nmll = row[1];
    r.smoothed_prior_incl = row[2];
    r.smoothed_post_incl = row[3];
    r.exact_prior_incl = row[4];
    r.exact_post_incl = row[5];
    r.p1_star = row[6];
    r.p2_star = row[7];
    r.hyper = {row[8], row[9], row[10]};
    log.records.push_back(r);
  }
  return log;
}

void write_fixture_csv(std::ostream& out, const std::vector<eval::FixtureRecord>& records,
                       std::string_view config_echo) {
  write_echo(out, config_echo);
  write_header(out, kFixtureColumns);
  for (const auto& r : records) {
    out << r.func_id << ',' << format_real(r.x) << ',' << format_real(r.f);
    for (const auto& iv : {r.a_prior, r.a_post, r.b_prior, r.b_post}) {
      out << ',' << format_real(iv.lo) << ',' << format_real(iv.hi);
    }
    out << '\n';
  }
}

std::vector<eval::FixtureRecord> fixture_from_csv(const CsvTable& table) {
  require_header(table, kFixtureColumns, "function fixture");
  std::vector<eval::FixtureRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    eval::FixtureRecord r;
    r.func_id = as_count(row[0], table.line_numbers[i]);
    r.x = row[1];
    r.f = row[2];
    r.a_prior = {row[3], row[4]};
    r.a_post = {row[5], row[6]};
    r.b_prior = {row[7], row[8]};
    r.b_post = {row[9], row[10]};
    out.push_back(r);
  }
  return out;
}

// ---- reports ----

void write_eval_report_text(std::ostream& out, const eval::EvalReport& report, std::string_view label,
                            std::string_view config_echo) {
  write_echo(out, config_echo);
  const auto& c = report.config;
  out << "method=" << label << '\n'
      << "prior_inclusion=" << format_real(report.prior_inclusion) << '\n'
      << "posterior_inclusion=" << format_real(report.posterior_inclusion) << '\n'
      << "mse=" << format_real(report.mse) << '\n'
      << "eval_split_prior_inclusion=" << format_real(report.eval_split_prior_inclusion) << '\n'
      << "eval_split_posterior_inclusion=" << format_real(report.eval_split_posterior_inclusion) << '\n'
      << "n_test_tasks=" << c.n_test_tasks << '\n'
      << "n_test_inputs=" << c.n_test_inputs << '\n'
      << "t_tr_test=" << c.t_tr_test << '\n'
      << "q=" << format_real(c.q) << '\n'
      << "seed=" << c.seed << '\n'
      << "theta=" << format_real(report.hyper.theta) << '\n'
      << "phi1=" << format_real(report.hyper.phi1) << '\n'
      << "phi2=" << format_real(report.hyper.phi2) << '\n';
}

void write_eval_report_csv(std::ostream& out, const eval::EvalReport& report, std::string_view label) {
  write_header(out, kEvalReportColumns);
  const auto& c = report.config;
  out << label << ',' << format_real(report.prior_inclusion) << ',' << format_real(report.posterior_inclusion) << ','
      << format_real(report.mse) << ',' << format_real(report.eval_split_prior_inclusion) << ','
      << format_real(report.eval_split_posterior_inclusion) << ',' << c.n_test_tasks << ',' << c.n_test_inputs << ','
      << c.t_tr_test << ',' << format_real(c.q) << ',' << c.seed << ',' << format_real(report.hyper.theta) << ','
      << format_real(report.hyper.phi1) << ',' << format_real(report.hyper.phi2) << '\n';
}

void write_comparison_table(std::ostream& out, const std::vector<NamedReport>& reports) {
  constexpr int kLabelWidth = 34;
  constexpr int kColWidth = 14;
  out << std::left << std::setw(kLabelWidth) << "metric";
  for (const auto& r : reports) out << std::right << std::setw(kColWidth) << r.label;
  out << '\n';
  struct Row {
    const char* name;
    double eval::EvalReport::*field;
    int precision;
  };
  const Row rows[] = {
      {"empirical prior inclusion (eval)", &eval::EvalReport::eval_split_prior_inclusion, 3},
      {"empirical post. inclusion (eval)", &eval::EvalReport::eval_split_posterior_inclusion, 3},
      {"P(f(x) in prior interval)", &eval::EvalReport::prior_inclusion, 3},
      {"P(f(x) in posterior interval)", &eval::EvalReport::posterior_inclusion, 3},
      {"MSE", &eval::EvalReport::mse, 2},
  };
  for (const auto& row : rows) {
    out << std::left << std::setw(kLabelWidth) << row.name;
    for (const auto& r : reports) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(row.precision) << r.report.*row.field;
      out << std::right << std::setw(kColWidth) << cell.str();
    }
    out << '\n';
  }
}

void write_file_atomically(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp);
    out << contents;
    if (!out) throw InputError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace trustbayes::io
