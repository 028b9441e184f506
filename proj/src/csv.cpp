#include "capde/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "capde/errors.hpp"

namespace capde {

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw MissingInputError("cannot open for writing: " + path);
    out << "run_id,phase,env_id,horizon,metric,value,step\n";
    char buf[40];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.value);
        out << r.run_id << ',' << r.phase << ',' << r.env_id << ',' << r.horizon << ',' << r.metric
            << ',' << buf << ',' << r.step << '\n';
    }
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) return {};
    std::vector<MetricRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        MetricRow r;
        std::string value, step;
        if (!std::getline(ls, r.run_id, ',') || !std::getline(ls, r.phase, ',') ||
            !std::getline(ls, r.env_id, ',') || !std::getline(ls, r.horizon, ',') ||
            !std::getline(ls, r.metric, ',') || !std::getline(ls, value, ',') ||
            !std::getline(ls, step))
            throw TruncationError("malformed csv row in " + path + ": " + line);
        r.value = std::stod(value);
        r.step = std::stoull(step);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace capde
