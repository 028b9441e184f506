#pragma once

#include <functional>
#include <vector>

#include "capde/tape.hpp"

namespace capde {

// Differentiable right-hand side: (state, time) -> time derivative, recorded
// on the caller's tape. State layout is (B, d) or (B, C, space...).
using RhsFn = std::function<Var(Tape&, Var u, double t)>;

// One classical 4-stage Runge-Kutta step. Throws DivergenceError when any
// stage produces non-finite values.
Var rk4_step(Tape& t, const RhsFn& rhs, Var u, double time, double dt);

// Value-level twin for plain (non-differentiable) integration.
using RhsValueFn = std::function<Tensor(const Tensor& u, double t)>;
Tensor rk4_step(const RhsValueFn& rhs, const Tensor& u, double time, double dt);

// Neural-ODE style rollout: trajectory[k] = RK4 sub-stepping from
// trajectory[k-1]; trajectory[0] = u0. Fully differentiable.
std::vector<Var> rollout_node(Tape& t, const RhsFn& rhs, Var u0, const std::vector<double>& t_grid,
                              int substeps);

// Autoregressive one-step rollout with a sliding window of H past states of
// C channels each. history0 is (B, H*C, space...); returns the n_steps
// predicted states, each (B, C, space...).
using StepFn = std::function<Var(Tape&, Var history)>;
std::vector<Var> rollout_onestep(Tape& t, const StepFn& step, Var history0, std::size_t history,
                                 std::size_t channels, int n_steps);

void check_finite(const Tensor& t, const char* what);

}  // namespace capde
