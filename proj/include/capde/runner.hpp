#pragma once

#include "capde/config.hpp"
#include "capde/datagen.hpp"

namespace capde {

// Checkpoint = container with every ParamStore entry plus a metadata block
// (config hash, RNG seed, frozen-name list, backbone description).
void write_checkpoint(const ParamStore& store, const RunConfig& cfg, const std::string& path);
struct Checkpoint {
    ParamStore store;
    std::map<std::string, std::string> meta;
};
Checkpoint read_checkpoint(const std::string& path);

struct GenerateArgs {
    PdeKind kind = PdeKind::pendulum;
    GenOptions opt;
    std::string out;
    bool force = false;
    std::string avoid_path;  // dataset whose envs adaptation draws must avoid
};

void cmd_generate(const GenerateArgs& args);

// Each command materializes a run directory: resolved config, checkpoints,
// CSV logs/metrics, and (when enabled) SVG plots.
void cmd_train(RunConfig cfg);
void cmd_adapt(RunConfig cfg, const std::string& checkpoint_path);
// Returns false when the out-range >= in-range error-accumulation check
// fails (the caller turns that into a nonzero exit).
bool cmd_evaluate(RunConfig cfg, const std::string& checkpoint_path);
void cmd_ablate_init(RunConfig cfg, const std::vector<InitKind>& inits, int jobs = 1);
void cmd_ablate_codedim(RunConfig cfg, const std::vector<std::size_t>& dims, int jobs = 1);
void cmd_plot(const std::string& run_dir);

// Resolve the backbone against the training dataset exactly as cmd_train
// does (shared by adapt/evaluate so configs stay consistent).
void resolve_for_dataset(RunConfig& cfg, const TrajectoryDataset& ds);

std::string out_root();

}  // namespace capde
