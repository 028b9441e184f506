#include "capde/runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "capde/container.hpp"
#include "capde/csv.hpp"
#include "capde/svgplot.hpp"

namespace capde {

namespace fs = std::filesystem;

std::string out_root() {
    const char* env = std::getenv("CAPDE_OUT_ROOT");
    return env ? env : ".";
}

void write_checkpoint(const ParamStore& store, const RunConfig& cfg, const std::string& path) {
    Container c;
    c.meta["type"] = "checkpoint";
    c.meta["config_hash"] = std::to_string(config_hash(cfg));
    c.meta["seed"] = std::to_string(cfg.seed);
    std::string frozen;
    for (const auto& name : store.frozen()) {
        if (!frozen.empty()) frozen += ";";
        frozen += name;
    }
    c.meta["frozen"] = frozen;
    c.meta["backbone"] = backbone_kind_name(cfg.train.backbone.kind);
    for (const auto& [name, tensor] : store.entries()) c.put_array(name, tensor);
    write_container(c, path);
}

Checkpoint read_checkpoint(const std::string& path) {
    Container c = read_container(path);
    if (c.meta_or("type", "") != "checkpoint") throw VersionError("not a checkpoint container: " + path);
    Checkpoint ck;
    ck.meta = c.meta;
    for (const auto& [name, tensor] : c.arrays) ck.store.create(name, tensor);
    std::istringstream fr(c.meta_or("frozen", ""));
    std::string name;
    while (std::getline(fr, name, ';'))
        if (!name.empty()) ck.store.freeze(name);
    return ck;
}

void cmd_generate(const GenerateArgs& args) {
    if (fs::exists(args.out) && !args.force)
        throw UsageError("output exists (use --force to overwrite): " + args.out);
    GenOptions opt = args.opt;
    if (!args.avoid_path.empty()) {
        TrajectoryDataset avoid_ds = read_dataset(args.avoid_path);
        opt.avoid = avoid_ds.envs;
    }
    TrajectoryDataset ds = generate_dataset(args.kind, opt);
    if (!fs::path(args.out).parent_path().empty())
        fs::create_directories(fs::path(args.out).parent_path());
    write_dataset(ds, args.out);

    const fs::path index = fs::path(out_root()) / "datasets.index";
    std::ofstream idx(index, std::ios::app);
    idx << args.out << " kind=" << pde_kind_name(args.kind) << " split=" << ds.split
        << " envs=" << ds.n_envs() << " trajs=" << ds.n_trajs() << " frames=" << ds.n_frames()
        << " seed=" << ds.seed << "\n";
}

void resolve_for_dataset(RunConfig& cfg, const TrajectoryDataset& ds) {
    cfg.train.seed = cfg.seed;
    resolve_backbone(cfg.train, ds);
}

namespace {

fs::path prepare_run_dir(RunConfig& cfg, const std::string& phase) {
    if (cfg.out_dir.empty())
        cfg.out_dir = (fs::path(out_root()) / (cfg.run_id + "_" + phase)).string();
    fs::create_directories(cfg.out_dir);
    return cfg.out_dir;
}

void echo_config(const RunConfig& cfg) {
    std::ofstream out(fs::path(cfg.out_dir) / "config.resolved", std::ios::trunc);
    out << dump_config(cfg);
}

void write_log_csv(const RunConfig& cfg, const std::string& phase,
                   const std::vector<LogRow>& log) {
    std::vector<MetricRow> rows;
    for (const auto& r : log) {
        rows.push_back({cfg.run_id, phase, "-", "-", "loss", r.loss, r.step});
        rows.push_back({cfg.run_id, phase, "-", "-", "lr", r.lr, r.step});
    }
    write_metrics_csv((fs::path(cfg.out_dir) / (phase + "_log.csv")).string(), rows);
}

std::vector<MetricRow> report_rows(const RunConfig& cfg, const std::string& phase,
                                   const EvalReport& rep, std::size_t step) {
    std::vector<MetricRow> rows;
    for (const auto& m : rep.per_env)
        rows.push_back({cfg.run_id, phase, m.env_id, rep.horizon, "relative_mse", m.value, step});
    rows.push_back({cfg.run_id, phase, "aggregate", rep.horizon, "relative_mse", rep.aggregate, step});
    return rows;
}

}  // namespace

void cmd_train(RunConfig cfg) {
    if (cfg.data_train.empty()) throw UsageError("config needs data.train");
    TrajectoryDataset data = read_dataset(cfg.data_train);
    resolve_for_dataset(cfg, data);
    prepare_run_dir(cfg, "train");
    echo_config(cfg);

    TrainResult res = train(data, cfg.train);
    write_checkpoint(res.params, cfg, (fs::path(cfg.out_dir) / "checkpoint.bin").string());
    write_log_csv(cfg, "train", res.log);
    if (cfg.plots) emit_plots(cfg.out_dir);
    if (res.aborted)
        throw DivergenceError("training loss diverged at epoch " + std::to_string(res.abort_epoch) +
                              " (last checkpoint written to " + cfg.out_dir + ")");
}

void cmd_adapt(RunConfig cfg, const std::string& checkpoint_path) {
    if (cfg.data_adapt.empty()) throw UsageError("config needs data.adapt");
    if (!fs::exists(checkpoint_path))
        throw MissingInputError("no training checkpoint at " + checkpoint_path);
    Checkpoint ck = read_checkpoint(checkpoint_path);
    TrajectoryDataset data = read_dataset(cfg.data_adapt);
    resolve_for_dataset(cfg, data);
    prepare_run_dir(cfg, "adapt");
    echo_config(cfg);

    AdaptResult res = adapt(ck.store, cfg.train, data);
    write_checkpoint(res.params, cfg, (fs::path(cfg.out_dir) / "checkpoint_adapted.bin").string());
    write_log_csv(cfg, "adapt", res.log);

    std::vector<MetricRow> rows;
    rows.push_back({cfg.run_id, "adapt", "-", "-", "plateau_step",
                    static_cast<double>(res.plateau_step), res.log.size()});
    rows.push_back({cfg.run_id, "adapt", "-", "-", "shared_params_intact",
                    res.shared_checksum_before == res.shared_checksum_after ? 1.0 : 0.0,
                    res.log.size()});
    write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), rows);
    if (cfg.plots) emit_plots(cfg.out_dir);
}

bool cmd_evaluate(RunConfig cfg, const std::string& checkpoint_path) {
    if (!fs::exists(checkpoint_path))
        throw MissingInputError("no checkpoint at " + checkpoint_path);
    Checkpoint ck = read_checkpoint(checkpoint_path);

    std::vector<MetricRow> rows;
    bool order_ok = true;
    auto eval_one = [&](const std::string& path, const std::string& phase) {
        if (path.empty()) return;
        TrajectoryDataset data = read_dataset(path);
        resolve_for_dataset(cfg, data);
        EvalReport in_rep = evaluate(ck.store, cfg.train, data, Horizon::in_range);
        auto r1 = report_rows(cfg, phase, in_rep, 0);
        rows.insert(rows.end(), r1.begin(), r1.end());
        // out-range needs frames past the training horizon
        if (data.t_grid.back() > data.train_horizon + 1e-9) {
            EvalReport out_rep = evaluate(ck.store, cfg.train, data, Horizon::out_range);
            auto r2 = report_rows(cfg, phase, out_rep, 0);
            rows.insert(rows.end(), r2.begin(), r2.end());
            const bool ok = out_rep.aggregate >= in_rep.aggregate;
            rows.push_back({cfg.run_id, phase, "aggregate", "-", "out_range_ge_in_range",
                            ok ? 1.0 : 0.0, 0});
            order_ok = order_ok && ok;
        }
    };

    prepare_run_dir(cfg, "eval");
    echo_config(cfg);
    eval_one(cfg.data_eval_in, "eval_in");
    eval_one(cfg.data_eval_out, "eval_out");
    if (rows.empty()) throw UsageError("config needs data.eval_in and/or data.eval_out");
    write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), rows);
    if (cfg.plots) emit_plots(cfg.out_dir);
    return order_ok;
}

namespace {

void write_ablation_outputs(const RunConfig& cfg, const std::vector<AblationRow>& rows) {
    std::vector<MetricRow> metric_rows, timing_rows;
    for (const auto& r : rows) {
        metric_rows.push_back({cfg.run_id, "ablate", r.label, "-", "final_train_loss",
                               r.final_train_loss, 0});
        metric_rows.push_back({cfg.run_id, "ablate", r.label, "-", "eval_relative_mse",
                               r.eval_rel_mse, 0});
        metric_rows.push_back({cfg.run_id, "ablate", r.label, "-", "param_count",
                               static_cast<double>(r.param_count), 0});
        metric_rows.push_back({cfg.run_id, "ablate", r.label, "-", "failed", r.failed ? 1.0 : 0.0, 0});
        timing_rows.push_back({cfg.run_id, "ablate", r.label, "-", "wall_ms", r.wall_ms, 0});
    }
    write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), metric_rows);
    write_metrics_csv((fs::path(cfg.out_dir) / "timing.csv").string(), timing_rows);
}

std::pair<TrajectoryDataset, TrajectoryDataset> load_ablation_data(RunConfig& cfg) {
    if (cfg.data_train.empty() || cfg.data_eval_in.empty())
        throw UsageError("ablations need data.train and data.eval_in");
    TrajectoryDataset train_data = read_dataset(cfg.data_train);
    TrajectoryDataset eval_data = read_dataset(cfg.data_eval_in);
    resolve_for_dataset(cfg, train_data);
    return {std::move(train_data), std::move(eval_data)};
}

}  // namespace

void cmd_ablate_init(RunConfig cfg, const std::vector<InitKind>& inits, int jobs) {
    auto [train_data, eval_data] = load_ablation_data(cfg);
    prepare_run_dir(cfg, "ablate_init");
    echo_config(cfg);
    write_ablation_outputs(cfg, ablate_init(train_data, eval_data, cfg.train, inits, jobs));
}

void cmd_ablate_codedim(RunConfig cfg, const std::vector<std::size_t>& dims, int jobs) {
    auto [train_data, eval_data] = load_ablation_data(cfg);
    prepare_run_dir(cfg, "ablate_codedim");
    echo_config(cfg);
    write_ablation_outputs(cfg, ablate_code_dim(train_data, eval_data, cfg.train, dims, jobs));
}

void cmd_plot(const std::string& run_dir) {
    if (!fs::exists(run_dir)) throw MissingInputError("no run directory: " + run_dir);
    emit_plots(run_dir);
}

}  // namespace capde
