#pragma once

#include <string>
#include <vector>

namespace capde {

// Deterministic SVG text output (no timestamps) so plots can be diffed.
std::string svg_line_plot(const std::string& title, const std::vector<double>& xs,
                          const std::vector<double>& ys, bool log_y = true);
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values);

// Render loss curves and per-environment bars from the CSVs in a run
// directory into <dir>/plots/. Empty or missing CSVs are skipped.
void emit_plots(const std::string& run_dir);

}  // namespace capde
