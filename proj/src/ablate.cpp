#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "capde/meta.hpp"

namespace capde {

namespace {

AblationRow run_once(const std::string& label, const TrajectoryDataset& train_data,
                     const TrajectoryDataset& eval_data, const TrainConfig& cfg) {
    AblationRow row;
    row.label = label;
    row.param_count = backbone_param_count(cfg.backbone);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        TrainResult tr = train(train_data, cfg);
        if (tr.aborted || tr.log.empty()) {
            row.failed = true;
            row.final_train_loss = std::nan("");
            row.eval_rel_mse = std::nan("");
        } else {
            row.final_train_loss = tr.best_loss;
            row.eval_rel_mse = evaluate(tr.params, cfg, eval_data, Horizon::in_range).aggregate;
        }
    } catch (const std::exception&) {
        // a failed run (e.g. NaN) is recorded, not fatal
        row.failed = true;
        row.final_train_loss = std::nan("");
        row.eval_rel_mse = std::nan("");
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return row;
}

// Runs are independent (own stores, own RNG streams), so they can go wide.
std::vector<AblationRow> run_all(const TrajectoryDataset& train_data,
                                 const TrajectoryDataset& eval_data,
                                 const std::vector<std::pair<std::string, TrainConfig>>& runs,
                                 int jobs) {
    std::vector<AblationRow> rows(runs.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < runs.size(); ++i)
            rows[i] = run_once(runs[i].first, train_data, eval_data, runs[i].second);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < runs.size(); i = next.fetch_add(1))
                rows[i] = run_once(runs[i].first, train_data, eval_data, runs[i].second);
        });
    for (auto& t : workers) t.join();
    return rows;
}

}  // namespace

std::vector<AblationRow> ablate_init(const TrajectoryDataset& train_data,
                                     const TrajectoryDataset& eval_data, TrainConfig cfg,
                                     const std::vector<InitKind>& inits, int jobs) {
    std::vector<std::pair<std::string, TrainConfig>> runs;
    for (InitKind k : inits) {
        cfg.lowrank_init = k;
        runs.emplace_back(init_kind_name(k), cfg);
    }
    return run_all(train_data, eval_data, runs, jobs);
}

std::vector<AblationRow> ablate_code_dim(const TrajectoryDataset& train_data,
                                         const TrajectoryDataset& eval_data, TrainConfig cfg,
                                         const std::vector<std::size_t>& dims, int jobs) {
    std::vector<std::pair<std::string, TrainConfig>> runs;
    for (std::size_t r : dims) {
        cfg.backbone.context_dim = r;
        runs.emplace_back("r=" + std::to_string(r), cfg);
    }
    return run_all(train_data, eval_data, runs, jobs);
}

std::size_t conditioning_param_increment(const BackboneSpec& spec) {
    BackboneSpec off = spec;
    off.conditioned = false;
    return backbone_param_count(spec) - backbone_param_count(off);
}

}  // namespace capde
