#include "capde/loss.hpp"

#include <cmath>
#include <map>

namespace capde {

std::size_t LossConfig::window_frames(std::size_t n_frames) const {
    if (n_frames < 2) throw ShapeError("dataset must hold at least two frames");
    if (rollout == RolloutMode::node) {
        const std::size_t full = n_frames - 1;
        return teacher_forcing > 0 ? std::min<std::size_t>(teacher_forcing, full) : full;
    }
    const std::size_t max_steps = n_frames > history ? n_frames - history : 0;
    if (max_steps == 0) throw ShapeError("dataset too short for the history window");
    return teacher_forcing > 0 ? std::min<std::size_t>(teacher_forcing, max_steps) : 1;
}

Tensor stack_states(const TrajectoryDataset& ds, const std::vector<WindowRef>& windows,
                    std::size_t offset) {
    const std::size_t state = ds.state_numel();
    std::vector<std::size_t> shape{windows.size()};
    for (auto d : ds.state_shape()) shape.push_back(d);
    Tensor out(shape);
    for (std::size_t b = 0; b < windows.size(); ++b) {
        const WindowRef& w = windows[b];
        std::copy_n(ds.state_ptr(w.env, w.traj, w.start + offset), state, out.data.begin() + b * state);
    }
    return out;
}

Tensor stack_history(const TrajectoryDataset& ds, const std::vector<WindowRef>& windows,
                     std::size_t history) {
    const std::size_t state = ds.state_numel();
    const auto sshape = ds.state_shape();
    std::vector<std::size_t> shape{windows.size(), history * sshape[0]};
    for (std::size_t i = 1; i < sshape.size(); ++i) shape.push_back(sshape[i]);
    Tensor out(shape);
    for (std::size_t b = 0; b < windows.size(); ++b) {
        const WindowRef& w = windows[b];
        for (std::size_t h = 0; h < history; ++h)
            std::copy_n(ds.state_ptr(w.env, w.traj, w.start + h), state,
                        out.data.begin() + (b * history + h) * state);
    }
    return out;
}

Var context_var(Tape& t, const VarMap& vars, const Dynamics& dyn, const std::string& env_id) {
    if (!dyn.conditioned()) return t.constant(Tensor::zeros({1}));
    auto it = vars.find("ctx/" + env_id);
    if (it == vars.end()) throw MissingInputError("no context for environment: " + env_id);
    return it->second;
}

RhsFn make_env_rhs(Tape& t, const VarMap& vars, const Dynamics& dyn, Var c, Var theta_e) {
    BoundModel net = dyn.model.bind(t, vars, c);
    if (dyn.hybrid)
        return [&dyn, net, theta_e](Tape& tt, Var u, double time) {
            return dyn.hyb.rhs(tt, net, u, time, theta_e);
        };
    return [net](Tape& tt, Var u, double time) {
        (void)time;
        return net.forward(tt, u);
    };
}

Var trajectory_loss(Tape& t, const VarMap& vars, const Dynamics& dyn, const TrajectoryDataset& ds,
                    const std::vector<WindowRef>& batch, const LossConfig& cfg) {
    if (batch.empty()) throw ShapeError("trajectory_loss: empty batch");
    const std::size_t K = cfg.window_frames(ds.n_frames());

    // group windows by environment so each group shares one context; node
    // rollouts also share the absolute time grid, so keep starts together
    // (hybrid forcing is time-dependent)
    std::map<std::pair<std::size_t, std::size_t>, std::vector<WindowRef>> groups;
    for (const WindowRef& w : batch)
        groups[{w.env, cfg.rollout == RolloutMode::node ? w.start : 0}].push_back(w);

    Var acc = t.constant(Tensor::scalar(0.0));
    for (const auto& [key, windows] : groups) {
        const std::size_t env_idx = key.first;
        const std::string& env_id = ds.envs[env_idx].id;
        Var c = context_var(t, vars, dyn, env_id);
        Var theta{};
        if (dyn.hybrid) theta = dyn.hyb.physics_params_for_env(t, vars, env_id, c);

        if (cfg.rollout == RolloutMode::node) {
            Var u0 = t.constant(stack_states(ds, windows, 0));
            std::vector<double> grid(K + 1);
            for (std::size_t j = 0; j <= K; ++j) grid[j] = ds.t_grid[windows[0].start + j];
            RhsFn rhs = make_env_rhs(t, vars, dyn, c, theta);
            std::vector<Var> traj;
            try {
                traj = rollout_node(t, rhs, u0, grid, cfg.substeps);
            } catch (const DivergenceError& e) {
                throw DivergenceError("env " + env_id + " traj " + std::to_string(windows[0].traj) +
                                      ": " + e.what());
            }
            for (std::size_t j = 1; j <= K; ++j)
                acc = t.add(acc, t.sum_squares(t.sub(traj[j], t.constant(stack_states(ds, windows, j)))));
        } else {
            Var h0 = t.constant(stack_history(ds, windows, cfg.history));
            const std::size_t channels = ds.n_channels();
            const std::size_t H = cfg.history;
            BoundModel net = dyn.model.bind(t, vars, c);
            // the network predicts the next-state residual; the step adds it
            // to the newest history frame
            StepFn step = [net, H, channels](Tape& tt, Var h) {
                Var last = tt.slice_axis1(h, (H - 1) * channels, H * channels);
                return tt.add(last, net.forward(tt, h));
            };
            std::vector<Var> preds;
            try {
                preds = rollout_onestep(t, step, h0, cfg.history, channels, static_cast<int>(K));
            } catch (const DivergenceError& e) {
                throw DivergenceError("env " + env_id + " traj " + std::to_string(windows[0].traj) +
                                      ": " + e.what());
            }
            for (std::size_t j = 0; j < K; ++j)
                acc = t.add(acc, t.sum_squares(t.sub(preds[j],
                                                     t.constant(stack_states(ds, windows,
                                                                             cfg.history + j)))));
        }
    }
    const double total = static_cast<double>(batch.size()) * static_cast<double>(K) *
                         static_cast<double>(ds.state_numel());
    return t.scale(acc, 1.0 / total);
}

double relative_mse(const Tensor& truth, const Tensor& pred) {
    check_same_shape(truth, pred, "relative_mse");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.numel(); ++i) {
        const double d = truth.data[i] - pred.data[i];
        num += d * d;
        den += truth.data[i] * truth.data[i];
    }
    if (den <= 0.0) throw InvariantError("relative_mse: ground-truth trajectory has zero norm");
    return num / den;
}

double relative_mse_mean(const std::vector<double>& per_traj) {
    if (per_traj.empty()) throw InvariantError("relative_mse_mean: empty batch");
    double acc = 0.0;
    for (double x : per_traj) acc += x;
    return acc / static_cast<double>(per_traj.size());
}

}  // namespace capde
