#pragma once

#include "capde/loss.hpp"
#include "capde/optim.hpp"

namespace capde {

enum class AdaptMode { context_only, extended_lowrank, context_physics };

const char* adapt_mode_name(AdaptMode m);
AdaptMode parse_adapt_mode(const std::string& s);

struct TrainConfig {
    BackboneSpec backbone;
    LossConfig loss;
    std::size_t batch = 8;
    std::size_t epochs = 2000;  // one optimizer step per epoch
    double lr = 1e-2;
    double sched_threshold = 0.01;
    int sched_patience = 250;
    double sched_decay = 0.9;
    double sched_min_lr = 1e-5;
    bool per_env_batches = false;  // default: mixed-environment batches
    std::uint64_t seed = 1;
    InitKind lowrank_init = InitKind::orthogonal;

    bool hybrid = false;
    CoeffStrategy strategy = CoeffStrategy::per_env;
    CombineMode combine = CombineMode::additive;

    std::size_t adapt_epochs = 500;
    double adapt_lr = 1e-2;
    int adapt_plateau_patience = 50;
    double adapt_plateau_threshold = 1e-4;
    AdaptMode adapt_mode = AdaptMode::context_only;
};

// Fill in backbone kind/channels from the dataset (kind by PDE, channels by
// state shape and history) and the hybrid composition mode.
void resolve_backbone(TrainConfig& cfg, const TrajectoryDataset& data);

// Build the model (+ physics) and register every trainable array, contexts
// included (zero-initialized, one per training environment).
Dynamics build_dynamics(const TrainConfig& cfg, const TrajectoryDataset& data, ParamStore& store);

struct LogRow {
    std::size_t step;
    double loss;
    double lr;
};

struct TrainResult {
    ParamStore params;  // best checkpoint by training loss
    Dynamics dyn;
    std::vector<LogRow> log;
    double best_loss = 0.0;
    std::size_t steps_run = 0;
    bool aborted = false;         // NaN loss encountered
    std::size_t abort_epoch = 0;  // valid when aborted
};

TrainResult train(const TrajectoryDataset& data, const TrainConfig& cfg);

struct AdaptResult {
    ParamStore params;  // trained store + new contexts (+ new per-env physics)
    Dynamics dyn;
    std::vector<LogRow> log;
    std::size_t plateau_step = 0;  // first step the early-stop plateau fired
    bool plateaued = false;
    std::uint64_t shared_checksum_before = 0;
    std::uint64_t shared_checksum_after = 0;
};

// Context-only (default), extended low-rank, or context+physics adaptation
// on the new environments of `adapt_data`; for non-conditioned baselines the
// final layer is fine-tuned instead. Shared parameters are verified
// bit-identical afterwards.
AdaptResult adapt(const ParamStore& trained, const TrainConfig& cfg,
                  const TrajectoryDataset& adapt_data);

enum class Horizon { in_range, out_range };

struct EnvMetric {
    std::string env_id;
    double value;
    std::size_t n_traj;
};

struct EvalReport {
    std::string split;    // in_d | out_d
    std::string horizon;  // in_range | out_range
    std::vector<EnvMetric> per_env;
    double aggregate = 0.0;
};

// Roll out every evaluation trajectory from its initial state (or history)
// and report the relative MSE per environment and aggregated.
EvalReport evaluate(const ParamStore& params, const TrainConfig& cfg,
                    const TrajectoryDataset& eval_data, Horizon horizon);

struct AblationRow {
    std::string label;
    double final_train_loss = 0.0;
    double eval_rel_mse = 0.0;
    std::size_t param_count = 0;
    double wall_ms = 0.0;
    bool failed = false;
};

std::vector<AblationRow> ablate_init(const TrajectoryDataset& train_data,
                                     const TrajectoryDataset& eval_data, TrainConfig cfg,
                                     const std::vector<InitKind>& inits, int jobs = 1);

std::vector<AblationRow> ablate_code_dim(const TrajectoryDataset& train_data,
                                         const TrajectoryDataset& eval_data, TrainConfig cfg,
                                         const std::vector<std::size_t>& dims, int jobs = 1);

// Closed-form count of the conditioning parameters added by code dimension r.
std::size_t conditioning_param_increment(const BackboneSpec& spec);

}  // namespace capde
