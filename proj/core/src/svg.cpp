#include "trustbayes/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "trustbayes/errors.hpp"

namespace trustbayes::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

void render_panel(std::ostringstream& os, const Panel& p, double ox, double oy, double w, double h) {
  constexpr double kLeft = 56.0, kRight = 12.0, kTop = 28.0, kBottom = 40.0;
  const double pw = w - kLeft - kRight;
  const double ph = h - kTop - kBottom;
  Range xr, yr;
  for (const auto& s : p.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.pad();
  yr.pad();
  auto sx = [&](double x) { return ox + kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return oy + kTop + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph; };

  os << "<g>\n";
  os << "<rect x=\"" << ox + kLeft << "\" y=\"" << oy + kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << ox + w / 2 << "\" y=\"" << oy + 18 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << escape(p.title) << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    os << "<text x=\"" << sx(fx) << "\" y=\"" << oy + kTop + ph + 14
       << "\" text-anchor=\"middle\" font-size=\"10\">" << fx << "</text>\n";
    os << "<text x=\"" << ox + kLeft - 4 << "\" y=\"" << sy(fy) + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
       << fy << "</text>\n";
  }
  if (!p.x_label.empty()) {
    os << "<text x=\"" << ox + kLeft + pw / 2 << "\" y=\"" << oy + h - 6
       << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.x_label) << "</text>\n";
  }
  if (!p.y_label.empty()) {
    os << "<text x=\"" << ox + 12 << "\" y=\"" << oy + kTop + ph / 2 << "\" font-size=\"11\" transform=\"rotate(-90 "
       << ox + 12 << ' ' << oy + kTop + ph / 2 << ")\" text-anchor=\"middle\">" << escape(p.y_label) << "</text>\n";
  }
  double legend_y = oy + kTop + 12;
  for (const auto& s : p.series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.3\"";
    if (s.dashed) os << " stroke-dasharray=\"5,3\"";
    os << " points=\"";
    const std::size_t count = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      os << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
    }
    os << "\"/>\n";
    if (!s.label.empty()) {
      os << "<text x=\"" << ox + kLeft + pw - 6 << "\" y=\"" << legend_y << "\" text-anchor=\"end\" font-size=\"10\" fill=\""
         << s.color << "\">" << escape(s.label) << "</text>\n";
      legend_y += 12;
    }
  }
  os << "</g>\n";
}

}  // namespace

std::string render_panels(const std::vector<Panel>& panels, std::size_t columns, double panel_width,
                          double panel_height) {
  if (panels.empty()) throw InputError("nothing to plot");
  columns = std::max<std::size_t>(1, std::min(columns, panels.size()));
  const std::size_t rows = (panels.size() + columns - 1) / columns;
  const double width = panel_width * static_cast<double>(columns);
  const double height = panel_height * static_cast<double>(rows);

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const double ox = panel_width * static_cast<double>(i % columns);
    const double oy = panel_height * static_cast<double>(i / columns);
    render_panel(os, panels[i], ox, oy, panel_width, panel_height);
  }
  os << "</svg>\n";
  return os.str();
}

std::string train_log_chart(const train::TrainLog& log, double required) {
  if (log.records.empty()) throw InputError("training log has no records");
  Panel p;
  p.title = "Empirical inclusion during meta-training";
  p.x_label = "step";
  p.y_label = "inclusion";
  Series sp{"smoothed prior", {}, {}, "#1f77b4", true};
  Series ss{"smoothed posterior", {}, {}, "#ff7f0e", true};
  Series ep{"exact prior", {}, {}, "#1f77b4", false};
  Series es{"exact posterior", {}, {}, "#ff7f0e", false};
  for (const auto& r : log.records) {
    const double x = static_cast<double>(r.step);
    for (auto* s : {&sp, &ss, &ep, &es}) s->x.push_back(x);
    sp.y.push_back(r.smoothed_prior_incl);
    ss.y.push_back(r.smoothed_post_incl);
    ep.y.push_back(r.exact_prior_incl);
    es.y.push_back(r.exact_post_incl);
  }
  Series threshold{"required", {ep.x.front(), ep.x.back()}, {required, required}, "#d62728", true};
  p.series = {std::move(ep), std::move(es), std::move(sp), std::move(ss), std::move(threshold)};
  return render_panels({p}, 1, 720.0, 420.0);
}

std::string fixture_chart(const std::vector<eval::FixtureRecord>& records) {
  if (records.empty()) throw InputError("fixture has no records");
  std::map<std::size_t, Panel> by_func;
  for (const auto& r : records) {
    auto& p = by_func[r.func_id];
    if (p.series.empty()) {
      p.title = "function " + std::to_string(r.func_id);
      p.x_label = "x";
      p.series = {
          {"f(x)", {}, {}, "#000000", false},
          {"a prior", {}, {}, "#1f77b4", true},   {"", {}, {}, "#1f77b4", true},
          {"a posterior", {}, {}, "#1f77b4", false}, {"", {}, {}, "#1f77b4", false},
          {"b prior", {}, {}, "#d62728", true},   {"", {}, {}, "#d62728", true},
          {"b posterior", {}, {}, "#d62728", false}, {"", {}, {}, "#d62728", false},
      };
    }
    const double ys[] = {r.f,          r.a_prior.lo, r.a_prior.hi, r.a_post.lo, r.a_post.hi,
                         r.b_prior.lo, r.b_prior.hi, r.b_post.lo,  r.b_post.hi};
    for (std::size_t k = 0; k < p.series.size(); ++k) {
      p.series[k].x.push_back(r.x);
      p.series[k].y.push_back(ys[k]);
    }
  }
  std::vector<Panel> panels;
  for (auto& [id, p] : by_func) panels.push_back(std::move(p));
  return render_panels(panels, 2, 480.0, 300.0);
}

}  // namespace trustbayes::svg
