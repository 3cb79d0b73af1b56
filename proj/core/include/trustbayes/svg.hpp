#pragma once

#include <string>
#include <vector>

#include "trustbayes/eval_harness.hpp"
#include "trustbayes/meta_train.hpp"

namespace trustbayes::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

// Grid of line-chart panels, `columns` per row, in one SVG document.
std::string render_panels(const std::vector<Panel>& panels, std::size_t columns, double panel_width = 480.0,
                          double panel_height = 320.0);

// Inclusion-vs-step chart: smoothed and exact prior/posterior inclusion plus
// a dashed reference line at `required`.
std::string train_log_chart(const train::TrainLog& log, double required);

// One panel per function: truth plus prior/posterior bounds for both
// hyperparameter sets.
std::string fixture_chart(const std::vector<eval::FixtureRecord>& records);

}  // namespace trustbayes::svg
