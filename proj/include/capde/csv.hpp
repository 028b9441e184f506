#pragma once

#include <string>
#include <vector>

namespace capde {

struct MetricRow {
    std::string run_id, phase, env_id, horizon, metric;
    double value = 0.0;
    std::size_t step = 0;
};

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(const std::string& path);

}  // namespace capde
