#include "mamp/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mamp/error.hpp"
#include "mamp/train.hpp"

namespace mamp {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != s.size() || s.empty()) {
    throw DataError(path + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

std::vector<MetricRow> read_metric_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open metrics CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "epoch,split,metric,value") {
    throw DataError(path + ":1: expected header 'epoch,split,metric,value'");
  }
  std::vector<MetricRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 4) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(f.size()));
    }
    MetricRow row;
    row.epoch = static_cast<std::size_t>(parse_double(f[0], path, line_no));
    row.split = f[1];
    row.metric = f[2];
    row.value = parse_double(f[3], path, line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AblationRow> read_ablation_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ablation CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "axis,setting,seed,config_hash,probe_accuracy,pretrain_final_loss") {
    throw DataError(path + ":1: expected ablation CSV header");
  }
  std::vector<AblationRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 6) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 6 fields, got " +
                      std::to_string(f.size()));
    }
    AblationRow row;
    row.axis = f[0];
    row.setting = f[1];
    row.seed = static_cast<std::uint64_t>(parse_double(f[2], path, line_no));
    row.config_hash = 0;  // hex string not needed for rendering
    row.probe_accuracy = parse_double(f[4], path, line_no);
    row.pretrain_final_loss = parse_double(f[5], path, line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // sorted by x
};

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    if (c == '&') {
      out += "&amp;";
    } else if (c == '<') {
      out += "&lt;";
    } else if (c == '>') {
      out += "&gt;";
    } else {
      out += c;
    }
  }
  return out;
}

// Minimal deterministic SVG line/point plot. In bar mode, bar_labels (one per
// point of the single series) replace the numeric x-axis ticks.
std::string render_svg(const std::vector<Series>& series, const std::string& x_label,
                       const std::string& y_label, bool bars,
                       const std::vector<std::string>& bar_labels = {}) {
  constexpr double kW = 640, kH = 420, kL = 70, kR = 20, kT = 20, kB = 50;
  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_min > x_max) throw DataError("no data: nothing to plot");
  if (x_max - x_min < 1e-12) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const auto sx = [&](double x) {
    return kL + (x - x_min) / (x_max - x_min) * (kW - kL - kR);
  };
  const auto sy = [&](double y) {
    return kH - kB - (y - y_min) / (y_max - y_min) * (kH - kT - kB);
  };
  const char* colors[] = {"#1f6fb2", "#c23b22", "#2e8540", "#8a5fbf", "#b8860b", "#40808c"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  svg << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  // Axes.
  svg << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\""
      << kH - kB << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
      << "\" stroke=\"black\"/>\n";
  // Ticks: 5 per axis (bar labels replace the numeric x ticks when given).
  for (int i = 0; i <= 4; ++i) {
    const double fy = y_min + (y_max - y_min) * i / 4.0;
    svg << "<line x1=\"" << kL - 5 << "\" y1=\"" << fmt(sy(fy)) << "\" x2=\"" << kL
        << "\" y2=\"" << fmt(sy(fy)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kL - 8 << "\" y=\"" << fmt(sy(fy) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(fy) << "</text>\n";
  }
  if (bars && !bar_labels.empty()) {
    const double slot = (kW - kL - kR) / static_cast<double>(bar_labels.size());
    for (std::size_t i = 0; i < bar_labels.size(); ++i) {
      svg << "<text x=\"" << fmt(kL + slot * (static_cast<double>(i) + 0.5)) << "\" y=\""
          << kH - kB + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
          << xml_escape(bar_labels[i]) << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double fx = x_min + (x_max - x_min) * i / 4.0;
      svg << "<line x1=\"" << fmt(sx(fx)) << "\" y1=\"" << kH - kB << "\" x2=\"" << fmt(sx(fx))
          << "\" y2=\"" << kH - kB + 5 << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << fmt(sx(fx)) << "\" y=\"" << kH - kB + 18
          << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(fx) << "</text>\n";
    }
  }
  svg << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (kT + kH - kB) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 6];
    if (bars) {
      const double slot = (kW - kL - kR) / static_cast<double>(series[s].points.size());
      for (std::size_t i = 0; i < series[s].points.size(); ++i) {
        const double y = series[s].points[i].second;
        const double x0 = kL + slot * (static_cast<double>(i) + 0.2);
        svg << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(sy(y)) << "\" width=\""
            << fmt(slot * 0.6) << "\" height=\"" << fmt(kH - kB - sy(y)) << "\" fill=\""
            << color << "\"/>\n";
      }
    } else {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < series[s].points.size(); ++i) {
        if (i) svg << ' ';
        svg << fmt(sx(series[s].points[i].first)) << ',' << fmt(sy(series[s].points[i].second));
      }
      svg << "\"/>\n";
      for (const auto& [x, y] : series[s].points) {
        svg << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y))
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
      }
    }
    svg << "<text x=\"" << kW - kR - 6 << "\" y=\"" << kT + 14 + 14 * static_cast<double>(s)
        << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << color << "\">"
        << xml_escape(series[s].name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_text_table(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> widths;
  for (const auto& row : cells) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      if (i) out << "  ";
      out << cells[r][i];
      if (i + 1 < cells[r].size()) {
        out << std::string(widths[i] - cells[r][i].size(), ' ');
      }
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < widths.size(); ++i) total += widths[i] + (i ? 2 : 0);
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

// Mean probe accuracy per setting, first-appearance order.
std::vector<std::pair<std::string, double>> setting_means(const std::vector<AblationRow>& rows) {
  std::vector<std::pair<std::string, double>> means;
  std::vector<std::size_t> counts;
  for (const auto& r : rows) {
    const auto it = std::find_if(means.begin(), means.end(),
                                 [&](const auto& m) { return m.first == r.setting; });
    if (it == means.end()) {
      means.emplace_back(r.setting, r.probe_accuracy);
      counts.push_back(1);
    } else {
      it->second += r.probe_accuracy;
      ++counts[static_cast<std::size_t>(it - means.begin())];
    }
  }
  for (std::size_t i = 0; i < means.size(); ++i) {
    means[i].second /= static_cast<double>(counts[i]);
  }
  return means;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace

void render_report(const ReportSpec& spec) {
  if (spec.kind != "loss-curve" && spec.kind != "ratio-sweep" &&
      spec.kind != "schedule-sweep" && spec.kind != "table") {
    throw ConfigError("report: unknown kind '" + spec.kind +
                      "' (expected loss-curve|ratio-sweep|schedule-sweep|table)");
  }
  if (spec.inputs.empty()) throw ConfigError("report: no input CSVs");
  const std::filesystem::path base =
      std::filesystem::path(spec.out_path).replace_extension();
  const std::string text_path = base.string() + ".txt";
  const std::string svg_path = base.string() + ".svg";

  if (spec.kind == "loss-curve") {
    std::vector<Series> series;
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"epoch"});
    std::map<std::size_t, std::vector<std::string>> by_epoch;
    for (const auto& path : spec.inputs) {
      Series s;
      s.name = std::filesystem::path(path).stem().string();
      for (const auto& row : read_metric_rows(path)) {
        if (row.split == "train" && row.metric == "loss") {
          s.points.emplace_back(static_cast<double>(row.epoch), row.value);
        }
      }
      if (s.points.empty()) throw DataError("no data: " + path + " has no train loss rows");
      std::sort(s.points.begin(), s.points.end());
      cells[0].push_back(s.name);
      for (const auto& [x, y] : s.points) {
        auto& row = by_epoch[static_cast<std::size_t>(x)];
        row.resize(spec.inputs.size(), "-");
        row[series.size()] = fmt(y);
      }
      series.push_back(std::move(s));
    }
    for (const auto& [epoch, vals] : by_epoch) {
      std::vector<std::string> row{std::to_string(epoch)};
      row.insert(row.end(), vals.begin(), vals.end());
      row.resize(spec.inputs.size() + 1, "-");
      cells.push_back(std::move(row));
    }
    write_file(text_path, render_text_table(cells));
    write_file(svg_path, render_svg(series, spec.x_label.empty() ? "epoch" : spec.x_label,
                                    spec.y_label.empty() ? "training loss" : spec.y_label,
                                    false));
    return;
  }

  // Remaining kinds consume ablation CSVs.
  std::vector<AblationRow> rows;
  for (const auto& path : spec.inputs) {
    const auto more = read_ablation_rows(path);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  if (rows.empty()) throw DataError("no data: ablation inputs contain no rows");

  if (spec.kind == "ratio-sweep" || spec.kind == "schedule-sweep") {
    const bool ratio = spec.kind == "ratio-sweep";
    std::map<double, std::pair<double, std::size_t>> acc;  // x -> (sum, n)
    for (const auto& r : rows) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(r.setting, &used);
      } catch (const std::exception&) {
        used = std::string::npos;
      }
      if (used != r.setting.size()) {
        throw DataError("report: setting '" + r.setting + "' is not numeric for " + spec.kind);
      }
      acc[x].first += r.probe_accuracy;
      acc[x].second += 1;
    }
    Series s;
    s.name = ratio ? "probe accuracy" : "probe accuracy";
    std::vector<std::vector<std::string>> cells;
    cells.push_back({ratio ? "mask_ratio" : "pretrain_epochs", "mean_probe_accuracy", "runs"});
    for (const auto& [x, sum_n] : acc) {
      const double mean = sum_n.first / static_cast<double>(sum_n.second);
      s.points.emplace_back(x, mean);
      cells.push_back({fmt(x), fmt(mean), std::to_string(sum_n.second)});
    }
    write_file(text_path, render_text_table(cells));
    write_file(
        svg_path,
        render_svg({s},
                   spec.x_label.empty() ? (ratio ? "mask ratio" : "pre-training epochs")
                                        : spec.x_label,
                   spec.y_label.empty() ? "linear probe accuracy" : spec.y_label, false));
    return;
  }

  // kind == "table": every row, then per-setting means and a labeled bar plot.
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"axis", "setting", "seed", "probe_accuracy", "pretrain_final_loss"});
  for (const auto& r : rows) {
    cells.push_back({r.axis, r.setting, std::to_string(r.seed), fmt(r.probe_accuracy),
                     fmt(r.pretrain_final_loss)});
  }
  const auto means = setting_means(rows);
  cells.push_back({"", "", "", "", ""});
  std::vector<std::string> labels;
  Series s;
  s.name = "mean probe accuracy";
  for (std::size_t i = 0; i < means.size(); ++i) {
    cells.push_back({rows[0].axis, means[i].first, "mean", fmt(means[i].second), ""});
    labels.push_back(means[i].first);
    s.points.emplace_back(static_cast<double>(i), means[i].second);
  }
  write_file(text_path, render_text_table(cells));
  write_file(svg_path, render_svg({s}, spec.x_label.empty() ? "setting" : spec.x_label,
                                  spec.y_label.empty() ? "linear probe accuracy" : spec.y_label,
                                  true, labels));
}

}  // namespace mamp
