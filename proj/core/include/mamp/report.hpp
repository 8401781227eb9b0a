#pragma once

#include <string>
#include <vector>

namespace mamp {

// Renders metric/ablation CSVs into an aligned text table plus an SVG plot.
// For an --out value of BASE.ext the outputs are BASE.txt and BASE.svg.
struct ReportSpec {
  std::vector<std::string> inputs;
  std::string kind;  // loss-curve | ratio-sweep | schedule-sweep | table
  std::string out_path;
  std::string x_label;  // optional override
  std::string y_label;
};

void render_report(const ReportSpec& spec);

}  // namespace mamp
