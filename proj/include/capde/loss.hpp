#pragma once

#include "capde/dataset.hpp"
#include "capde/dynamics.hpp"
#include "capde/physics.hpp"

namespace capde {

enum class RolloutMode { node, onestep };

struct LossConfig {
    RolloutMode rollout = RolloutMode::node;
    int substeps = 2;        // RK4 sub-steps per saved frame (node mode)
    int teacher_forcing = 0; // window length in frames; 0 = whole trajectory (node) / 1 step (onestep)
    std::size_t history = 1; // H past states fed to one-step models

    // effective rollout length in frames for a dataset with n_frames stored
    std::size_t window_frames(std::size_t n_frames) const;
};

// One batch element: roll from (env, traj) at frame `start`.
struct WindowRef {
    std::size_t env, traj, start;
};

// The trainable dynamics: a plain conditioned/unconditioned network or a
// physics-aware hybrid around it.
struct Dynamics {
    Model model;
    bool hybrid = false;
    HybridModel hyb;

    bool conditioned() const { return model.spec().conditioned; }
};

// Mean squared error between rollouts and stored ground truth over every
// predicted frame, spatial point, and channel of the batch (frame 0 of each
// window is the teacher-forced start and is not scored).
Var trajectory_loss(Tape& t, const VarMap& vars, const Dynamics& dyn, const TrajectoryDataset& ds,
                    const std::vector<WindowRef>& batch, const LossConfig& cfg);

// Per-trajectory squared-norm ratio ||y - yhat||^2 / ||y||^2.
double relative_mse(const Tensor& truth, const Tensor& pred);
double relative_mse_mean(const std::vector<double>& per_traj);

// Stack ground-truth states of several windows into one batch tensor:
// frame `offset` of each window, shaped (B, C, space...).
Tensor stack_states(const TrajectoryDataset& ds, const std::vector<WindowRef>& windows,
                    std::size_t offset);
// Stack H consecutive frames as channels, oldest first: (B, H*C, space...).
Tensor stack_history(const TrajectoryDataset& ds, const std::vector<WindowRef>& windows,
                     std::size_t history);

// Context var for an environment (zero constant for unconditioned models).
Var context_var(Tape& t, const VarMap& vars, const Dynamics& dyn, const std::string& env_id);

// Right-hand side closure for one environment of a dataset; the neural part
// is bound to its context once, up front.
RhsFn make_env_rhs(Tape& t, const VarMap& vars, const Dynamics& dyn, Var c, Var theta_e);

}  // namespace capde
