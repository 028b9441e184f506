#pragma once

#include <string>
#include <vector>

#include "capde/envs.hpp"
#include "capde/tensor.hpp"

namespace capde {

// Trajectories on a shared uniform grid: u[env, traj, time, channel, space...]
// plus per-environment specs and generation provenance.
struct TrajectoryDataset {
    PdeKind kind = PdeKind::pendulum;
    std::string split = "train";  // train | eval_in | adapt | eval_out
    std::vector<EnvironmentSpec> envs;
    Tensor u;
    std::vector<double> t_grid;
    double dt = 0.0;
    double ds = 0.0;
    std::size_t spatial_dims = 0;
    double train_horizon = 0.0;  // T; frames past it form the out-range slice
    std::uint64_t seed = 0;
    std::string generator_version = "1";

    std::size_t n_envs() const { return u.shape[0]; }
    std::size_t n_trajs() const { return u.shape[1]; }
    std::size_t n_frames() const { return u.shape[2]; }
    std::size_t n_channels() const { return u.shape[3]; }
    // elements per state = channels * spatial points
    std::size_t state_numel() const;
    std::vector<std::size_t> state_shape() const;  // (C, space...)

    // copy of one stored state, shaped (C, space...)
    Tensor state(std::size_t env, std::size_t traj, std::size_t frame) const;
    const double* state_ptr(std::size_t env, std::size_t traj, std::size_t frame) const;

    void validate() const;
};

void write_dataset(const TrajectoryDataset& ds, const std::string& path);
TrajectoryDataset read_dataset(const std::string& path);

}  // namespace capde
