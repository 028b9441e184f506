#include <CLI11.hpp>
#include <iostream>

#include "capde/runner.hpp"

using namespace capde;

namespace {

RunConfig load_run_config(const std::string& config_path, const std::string& out_override,
                          const std::map<std::string, std::string>& data_overrides) {
    RunConfig cfg = parse_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    auto apply = [&](const char* key, std::string& field) {
        auto it = data_overrides.find(key);
        if (it != data_overrides.end() && !it->second.empty()) field = it->second;
    };
    apply("train", cfg.data_train);
    apply("eval_in", cfg.data_eval_in);
    apply("adapt", cfg.data_adapt);
    apply("eval_out", cfg.data_eval_out);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive-conditioning PDE solver toolkit"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "simulate a multi-environment dataset");
    std::string g_kind, g_pool = "train", g_out, g_sampling, g_avoid;
    GenerateArgs gargs;
    double g_horizon = 0.0, g_dt = 0.0;
    gen->add_option("--kind", g_kind, "pendulum|gray_scott|burgers|combined")->required();
    gen->add_option("--pool", g_pool, "train|eval|adapt|eval-out (eval = new ICs on train envs)");
    gen->add_option("--envs", gargs.opt.n_envs, "number of environments (0 = default)");
    gen->add_option("--trajs", gargs.opt.n_trajs, "trajectories per environment (0 = default)");
    gen->add_option("--seed", gargs.opt.seed, "RNG seed")->required();
    gen->add_option("--out", g_out, "output dataset path")->required();
    gen->add_option("--sampling", g_sampling, "grid|range (default per kind)");
    gen->add_option("--horizon", g_horizon, "time horizon override");
    gen->add_option("--dt", g_dt, "save step override");
    gen->add_option("--jobs", gargs.opt.jobs, "parallel workers");
    gen->add_option("--avoid", g_avoid, "dataset whose environments adaptation draws must avoid");
    gen->add_flag("--force", gargs.force, "overwrite an existing output file");

    // train / adapt / evaluate / ablations / plot
    std::string config_path, out_dir, checkpoint_path, run_dir;
    std::map<std::string, std::string> data_overrides;
    auto add_common = [&](CLI::App* cmd, bool needs_ckpt) {
        cmd->add_option("--config", config_path, "flat-key run config")->required();
        cmd->add_option("--out", out_dir, "run directory");
        cmd->add_option("--data-train", data_overrides["train"], "override data.train");
        cmd->add_option("--data-eval-in", data_overrides["eval_in"], "override data.eval_in");
        cmd->add_option("--data-adapt", data_overrides["adapt"], "override data.adapt");
        cmd->add_option("--data-eval-out", data_overrides["eval_out"], "override data.eval_out");
        if (needs_ckpt)
            cmd->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    };
    auto* tr = app.add_subcommand("train", "joint training of shared weights and contexts");
    add_common(tr, false);
    auto* ad = app.add_subcommand("adapt", "one-shot adaptation to new environments");
    add_common(ad, true);
    auto* ev = app.add_subcommand("evaluate", "in/out-range relative MSE reports");
    add_common(ev, true);
    auto* ai = app.add_subcommand("ablate-init", "low-rank initialization sweep");
    add_common(ai, false);
    int ablate_jobs = 1;
    ai->add_option("--jobs", ablate_jobs, "parallel sub-runs");
    std::vector<std::string> init_names{"kaiming", "xavier", "lora", "orthogonal"};
    ai->add_option("--inits", init_names, "initializations to sweep");
    auto* ac = app.add_subcommand("ablate-codedim", "context dimension sweep");
    add_common(ac, false);
    ac->add_option("--jobs", ablate_jobs, "parallel sub-runs");
    std::vector<std::size_t> dims{1, 2, 4, 8, 16};
    ac->add_option("--dims", dims, "context dimensions to sweep");
    auto* pl = app.add_subcommand("plot", "re-render SVG plots for a run directory");
    pl->add_option("--run", run_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            gargs.kind = parse_pde_kind(g_kind);
            if (g_pool == "train") gargs.opt.split = "train";
            else if (g_pool == "eval" || g_pool == "eval-in") gargs.opt.split = "eval_in";
            else if (g_pool == "adapt") gargs.opt.split = "adapt";
            else if (g_pool == "eval-out") gargs.opt.split = "eval_out";
            else throw UsageError("pool must be train, eval, adapt, or eval-out");
            if (gargs.opt.n_envs == 0 && gen->count("--envs"))
                throw UsageError("--envs must be at least 1");
            if (!g_sampling.empty()) {
                if (g_sampling == "grid") gargs.opt.sampling = SamplingMode::grid;
                else if (g_sampling == "range") gargs.opt.sampling = SamplingMode::range;
                else throw UsageError("--sampling must be grid or range");
            } else if (gargs.kind == PdeKind::combined) {
                gargs.opt.sampling = SamplingMode::range;
            }
            gargs.opt.horizon = g_horizon;
            gargs.opt.dt_save = g_dt;
            gargs.out = g_out;
            gargs.avoid_path = g_avoid;
            cmd_generate(gargs);
        } else if (tr->parsed()) {
            cmd_train(load_run_config(config_path, out_dir, data_overrides));
        } else if (ad->parsed()) {
            cmd_adapt(load_run_config(config_path, out_dir, data_overrides), checkpoint_path);
        } else if (ev->parsed()) {
            if (!cmd_evaluate(load_run_config(config_path, out_dir, data_overrides),
                              checkpoint_path)) {
                std::cerr << "evaluate: out-range error is below in-range error "
                             "(error-accumulation check failed)\n";
                return static_cast<int>(ExitCode::invariant_breach);
            }
        } else if (ai->parsed()) {
            std::vector<InitKind> inits;
            for (const auto& n : init_names) inits.push_back(parse_init_kind(n));
            cmd_ablate_init(load_run_config(config_path, out_dir, data_overrides), inits, ablate_jobs);
        } else if (ac->parsed()) {
            cmd_ablate_codedim(load_run_config(config_path, out_dir, data_overrides), dims, ablate_jobs);
        } else if (pl->parsed()) {
            cmd_plot(run_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(exit_code_for(e));
    }
    return 0;
}
