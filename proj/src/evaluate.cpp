#include <cmath>

#include "capde/meta.hpp"

namespace capde {

namespace {

// frame index of the in-range / out-range boundary (largest t <= T)
std::size_t horizon_split(const TrajectoryDataset& ds) {
    std::size_t idx = ds.n_frames() - 1;
    for (std::size_t k = 0; k < ds.n_frames(); ++k)
        if (ds.t_grid[k] <= ds.train_horizon + 1e-9) idx = k;
    return idx;
}

}  // namespace

EvalReport evaluate(const ParamStore& params, const TrainConfig& cfg,
                    const TrajectoryDataset& eval_data, Horizon horizon) {
    eval_data.validate();
    Dynamics dyn;
    dyn.model = Model::attach(cfg.backbone);
    if (cfg.hybrid) {
        HybridSpec phys;
        switch (eval_data.kind) {
            case PdeKind::pendulum: phys.kind = PhysicsKind::pendulum; break;
            case PdeKind::gray_scott: phys.kind = PhysicsKind::gray_scott; break;
            case PdeKind::burgers: phys.kind = PhysicsKind::burgers; break;
            default: throw UsageError("unsupported hybrid kind");
        }
        phys.strategy = cfg.strategy;
        phys.combine = cfg.combine;
        if (eval_data.kind == PdeKind::burgers)
            phys.dx = eval_data.envs[0].domain.extent / eval_data.envs[0].domain.points;
        dyn.hybrid = true;
        dyn.hyb = HybridModel(dyn.model, phys);
    }

    const std::size_t split_idx = horizon_split(eval_data);
    const std::size_t first =
        horizon == Horizon::in_range ? 1 : split_idx + 1;  // frame 0 is the given IC
    const std::size_t last = horizon == Horizon::in_range ? split_idx : eval_data.n_frames() - 1;
    if (first > last) throw ShapeError("evaluation dataset has no frames in the requested horizon");
    const std::size_t H = cfg.loss.rollout == RolloutMode::onestep ? cfg.loss.history : 1;
    if (std::max(first, H) > last)
        throw ShapeError("history window leaves no frames to score in the requested horizon");

    EvalReport report;
    report.split = eval_data.split == "eval_out" || eval_data.split == "adapt" ? "out_d" : "in_d";
    report.horizon = horizon == Horizon::in_range ? "in_range" : "out_range";

    const std::size_t state = eval_data.state_numel();
    std::vector<double> all_env_values;
    for (std::size_t e = 0; e < eval_data.n_envs(); ++e) {
        const std::string& env_id = eval_data.envs[e].id;
        // strict context lookup happens inside context_var
        Tape t;
        VarMap vars;
        for (const auto& [name, tensor] : params.entries()) vars[name] = t.constant(tensor);
        Var c = context_var(t, vars, dyn, env_id);
        Var theta{};
        if (dyn.hybrid) theta = dyn.hyb.physics_params_for_env(t, vars, env_id, c);

        // batch every trajectory of this environment into one rollout
        std::vector<WindowRef> windows;
        for (std::size_t j = 0; j < eval_data.n_trajs(); ++j) windows.push_back({e, j, 0});

        std::vector<Tensor> preds;  // one (B, state...) tensor per predicted frame index
        if (cfg.loss.rollout == RolloutMode::node) {
            Var u0 = t.constant(stack_states(eval_data, windows, 0));
            std::vector<double> grid(eval_data.t_grid.begin(), eval_data.t_grid.begin() + last + 1);
            RhsFn rhs = make_env_rhs(t, vars, dyn, c, theta);
            auto traj = rollout_node(t, rhs, u0, grid, cfg.loss.substeps);
            for (std::size_t k = 0; k <= last; ++k) preds.push_back(t.val(traj[k]));
        } else {
            Var h0 = t.constant(stack_history(eval_data, windows, H));
            const std::size_t channels = eval_data.n_channels();
            BoundModel net = dyn.model.bind(t, vars, c);
            StepFn step = [net, H, channels](Tape& tt, Var h) {
                Var last = tt.slice_axis1(h, (H - 1) * channels, H * channels);
                return tt.add(last, net.forward(tt, h));
            };
            auto out = rollout_onestep(t, step, h0, H, eval_data.n_channels(),
                                       static_cast<int>(last - H + 1));
            for (std::size_t k = 0; k < H; ++k) preds.push_back(stack_states(eval_data, windows, k));
            for (const Var& v : out) preds.push_back(t.val(v));
        }

        std::vector<double> per_traj;
        const std::size_t lo = std::max(first, H);
        for (std::size_t j = 0; j < windows.size(); ++j) {
            Tensor truth({(last - lo + 1) * state});
            Tensor pred({(last - lo + 1) * state});
            for (std::size_t k = lo; k <= last; ++k) {
                std::copy_n(eval_data.state_ptr(e, j, k), state,
                            truth.data.begin() + (k - lo) * state);
                std::copy_n(preds[k].data.begin() + j * state, state,
                            pred.data.begin() + (k - lo) * state);
            }
            per_traj.push_back(relative_mse(truth, pred));
        }
        report.per_env.push_back({env_id, relative_mse_mean(per_traj), per_traj.size()});
        all_env_values.push_back(report.per_env.back().value);
    }
    report.aggregate = relative_mse_mean(all_env_values);
    return report;
}

}  // namespace capde
