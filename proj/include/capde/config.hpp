#pragma once

#include <map>
#include <string>

#include "capde/meta.hpp"

namespace capde {

// Everything a run needs, parsed from a flat-key config file
// (`train.lr = 1e-2` style). Unknown keys are rejected.
struct RunConfig {
    std::string run_id = "run";
    std::uint64_t seed = 1;
    std::string out_dir;

    std::string data_train, data_eval_in, data_adapt, data_eval_out;

    TrainConfig train;
    bool plots = true;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Canonical sorted key=value rendering of the resolved configuration.
std::string dump_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace capde
