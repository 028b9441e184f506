#include "capde/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "capde/csv.hpp"
#include "capde/errors.hpp"

namespace capde {

namespace {

constexpr double kW = 640, kH = 400;
constexpr double kL = 70, kR = 20, kT = 40, kB = 40;  // margins

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string header(const std::string& title) {
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
    s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         title + "</text>\n";
    s += "<line x1=\"" + fmt(kL) + "\" y1=\"" + fmt(kH - kB) + "\" x2=\"" + fmt(kW - kR) + "\" y2=\"" +
         fmt(kH - kB) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + fmt(kL) + "\" y1=\"" + fmt(kT) + "\" x2=\"" + fmt(kL) + "\" y2=\"" +
         fmt(kH - kB) + "\" stroke=\"black\"/>\n";
    return s;
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::vector<double>& xs,
                          const std::vector<double>& ys, bool log_y) {
    if (xs.size() != ys.size() || xs.empty()) throw ShapeError("svg_line_plot: bad series");
    bool positive = true;
    for (double y : ys)
        if (!(y > 0.0)) positive = false;
    const bool uselog = log_y && positive;

    auto ty = [&](double y) { return uselog ? std::log10(y) : y; };
    double xmin = xs[0], xmax = xs[0], ymin = ty(ys[0]), ymax = ty(ys[0]);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xmin = std::min(xmin, xs[i]);
        xmax = std::max(xmax, xs[i]);
        ymin = std::min(ymin, ty(ys[i]));
        ymax = std::max(ymax, ty(ys[i]));
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;

    auto px = [&](double x) { return kL + (x - xmin) / (xmax - xmin) * (kW - kL - kR); };
    auto py = [&](double y) { return kH - kB - (ty(y) - ymin) / (ymax - ymin) * (kH - kT - kB); };

    std::string s = header(title);
    s += "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += " ";
        s += fmt(px(xs[i])) + "," + fmt(py(ys[i]));
    }
    s += "\"/>\n";

    const std::string ylab_hi = uselog ? "1e" + fmt(ymax) : fmt(ymax);
    const std::string ylab_lo = uselog ? "1e" + fmt(ymin) : fmt(ymin);
    s += "<text x=\"8\" y=\"" + fmt(kT + 6) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
         ylab_hi + "</text>\n";
    s += "<text x=\"8\" y=\"" + fmt(kH - kB) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
         ylab_lo + "</text>\n";
    s += "<text x=\"" + fmt(kL) + "\" y=\"" + fmt(kH - 12) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(xmin) + "</text>\n";
    s += "<text x=\"" + fmt(kW - kR) + "\" y=\"" + fmt(kH - 12) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(xmax) +
         "</text>\n";
    s += "</svg>\n";
    return s;
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
    if (labels.size() != values.size() || labels.empty()) throw ShapeError("svg_bar_chart: bad series");
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, v);
    if (vmax <= 0.0) vmax = 1.0;

    std::string s = header(title);
    const double span = kW - kL - kR;
    const double bw = span / (2.0 * labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double x = kL + span * (2.0 * i + 0.5) / (2.0 * labels.size());
        const double h = values[i] / vmax * (kH - kT - kB);
        s += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(kH - kB - h) + "\" width=\"" + fmt(bw) +
             "\" height=\"" + fmt(h) + "\" fill=\"#2980b9\"/>\n";
        s += "<text x=\"" + fmt(x + bw / 2) + "\" y=\"" + fmt(kH - kB + 14) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + labels[i] +
             "</text>\n";
        s += "<text x=\"" + fmt(x + bw / 2) + "\" y=\"" + fmt(kH - kB - h - 4) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(values[i]) +
             "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

void emit_plots(const std::string& run_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(run_dir) / "plots");

    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(fs::path(run_dir) / "plots" / name, std::ios::trunc);
        out << content;
    };

    for (const char* phase : {"train", "adapt"}) {
        const fs::path csv = fs::path(run_dir) / (std::string(phase) + "_log.csv");
        if (!fs::exists(csv)) continue;
        auto rows = read_metrics_csv(csv.string());
        std::vector<double> xs, ys;
        for (const auto& r : rows)
            if (r.metric == "loss") {
                xs.push_back(static_cast<double>(r.step));
                ys.push_back(r.value);
            }
        if (xs.empty()) {
            std::cerr << "plot: no loss rows in " << csv << ", skipping\n";
            continue;
        }
        write(std::string(phase) + "_loss.svg",
              svg_line_plot(std::string(phase) + " loss", xs, ys));
    }

    const fs::path metrics = fs::path(run_dir) / "metrics.csv";
    if (fs::exists(metrics)) {
        auto rows = read_metrics_csv(metrics.string());
        for (const char* horizon : {"in_range", "out_range"}) {
            std::vector<std::string> labels;
            std::vector<double> values;
            for (const auto& r : rows)
                if (r.metric == "relative_mse" && r.horizon == horizon && r.env_id != "aggregate") {
                    labels.push_back(r.env_id);
                    values.push_back(r.value);
                }
            if (labels.empty()) continue;
            write(std::string("relative_mse_") + horizon + ".svg",
                  svg_bar_chart(std::string("relative MSE per environment (") + horizon + ")", labels,
                                values));
        }
    }
}

}  // namespace capde
