#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trustbayes/eval_harness.hpp"
#include "trustbayes/gp.hpp"
#include "trustbayes/meta_train.hpp"
#include "trustbayes/taskgen.hpp"

namespace trustbayes::io {

// Decimal text with 17 significant digits; round-trips every finite double.
std::string format_real(double value);
double parse_real(std::string_view text);

// ---- Hyperparameter record -------------------------------------------------
//
// One `key=value` per line; `#` starts a comment line. Required keys are
// theta, phi1 and phi2 (natural scale). Trained records also carry
// certified, p1_star, p2_star, gamma1_star and gamma2_star.

struct HyperRecord {
  gp::HyperParams hyper;
  std::optional<train::Certification> certification;
};

void write_hyper_record(std::ostream& out, const HyperRecord& record, std::string_view config_echo = {});
HyperRecord read_hyper_record(std::istream& in);
HyperRecord read_hyper_record_file(const std::string& path);

// ---- Dataset (JSON lines) ----------------------------------------------------
//
// {"task_id":0,"d":...,"alpha":1,"coeffs":[{"a":..,"b":..,"w":..,"u":..,"beta":..} x10],
//  "x":[...],"y":[...],"t_tr":20}

std::string dataset_record(const taskgen::MetaTask& mt);
void write_dataset(std::ostream& out, const taskgen::MetaDataset& meta);
// Validates every record; errors name the offending line.
taskgen::MetaDataset read_dataset(std::istream& in, std::uint64_t seed = 0);
taskgen::MetaDataset read_dataset_file(const std::string& path, std::uint64_t seed = 0);

// ---- CSV -----------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  std::size_t column(std::string_view name) const;  // throws InputError when missing
};

// Lines starting with '#' and blank lines are skipped. Every row must have
// as many numeric fields as the header.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

extern const std::vector<std::string> kTrainLogColumns;
extern const std::vector<std::string> kFixtureColumns;
extern const std::vector<std::string> kEvalReportColumns;

void write_train_log_csv(std::ostream& out, const train::TrainLog& log, std::string_view config_echo = {});
train::TrainLog train_log_from_csv(const CsvTable& table);

void write_fixture_csv(std::ostream& out, const std::vector<eval::FixtureRecord>& records,
                       std::string_view config_echo = {});
std::vector<eval::FixtureRecord> fixture_from_csv(const CsvTable& table);

// ---- Evaluation reports --------------------------------------------------------

void write_eval_report_text(std::ostream& out, const eval::EvalReport& report, std::string_view label,
                            std::string_view config_echo = {});
void write_eval_report_csv(std::ostream& out, const eval::EvalReport& report, std::string_view label);

struct NamedReport {
  std::string label;
  eval::EvalReport report;
};

// Metric rows by method columns: the two evaluation-split means, the two
// Monte Carlo inclusion estimates and the MSE.
void write_comparison_table(std::ostream& out, const std::vector<NamedReport>& reports);

// Writes through a temporary file and renames it into place, so a failed
// command never leaves a partial file behind.
void write_file_atomically(const std::string& path, const std::string& contents);

}  // namespace trustbayes::io
