#pragma once

#include "capde/dataset.hpp"
#include "capde/rng.hpp"

namespace capde {

struct GenOptions {
    std::size_t n_envs = 0;   // 0 -> per-kind default
    std::size_t n_trajs = 0;  // 0 -> per-split default
    std::uint64_t seed = 0;
    std::string split = "train";  // train | eval_in | adapt | eval_out
    SamplingMode sampling = SamplingMode::grid;
    double horizon = 0.0;  // 0 -> default (doubled on eval splits)
    double dt_save = 0.0;  // 0 -> default
    int jobs = 1;
    std::vector<EnvironmentSpec> avoid;  // train envs to exclude from adapt draws

    // resolution / accuracy knobs
    std::size_t gs_points = 32;
    std::size_t burgers_les_points = 256;
    std::size_t burgers_dns_points = 2048;
    std::size_t combined_points = 256;
    double burgers_k0 = 2.0;
    double gs_tol = 1e-8;
    double pendulum_micro_dt = 1e-3;
    double micro_scale = 1.0;  // scales internal micro steps (refinement hook)
};

TrajectoryDataset generate_dataset(PdeKind kind, GenOptions opt);

// --- simulators, shared by generate_dataset and the test oracles ---

// Full damped/driven dynamics integrated at micro_dt, sampled on t_grid.
// Returns (time, 2) rows of [theta, theta_dot].
Tensor simulate_pendulum(const EnvironmentSpec& env, double theta0, double theta_dot0,
                         const std::vector<double>& t_grid, double micro_dt);

// Pearson-style background with seeded rectangular perturbation patches.
Tensor gray_scott_ic(const DomainSpec& dom, RngStream& rng, bool homogeneous = false);
// Adaptive embedded RK45 ground truth at the given tolerance; (time,2,H,W).
Tensor simulate_gray_scott(const EnvironmentSpec& env, const Tensor& ic,
                           const std::vector<double>& t_grid, double tol);

// E(k) table for the energy-spectrum initial condition.
std::vector<double> burgers_energy_spectrum(double k0, std::size_t n_points);
std::vector<double> burgers_spectrum_ic(double k0, std::size_t n_points, RngStream& rng);

// Pseudo-spectral DNS with 2/3 dealiasing and integrating-factor diffusion;
// each saved frame is low-passed and decimated onto les_points. (time,1,les).
Tensor simulate_burgers(const EnvironmentSpec& env, const std::vector<double>& ic_dns,
                        const std::vector<double>& t_grid, std::size_t les_points,
                        double micro_scale);

// Sharp spectral low-pass below target/2 then stride decimation.
std::vector<double> spectral_filter_downsample(const std::vector<double>& field, std::size_t target);

std::vector<double> combined_ic(double domain_len, std::size_t n, RngStream& rng);
// Integrating-factor RK4 on the dealiased spectral grid; (time,1,n).
Tensor simulate_combined(const EnvironmentSpec& env, const std::vector<double>& ic,
                         const std::vector<double>& t_grid, double micro_scale);

std::vector<double> default_time_grid(PdeKind kind, const std::string& split, double horizon,
                                      double dt_save);

}  // namespace capde
