#include "capde/dynamics.hpp"

#include <cmath>

#include "capde/errors.hpp"

namespace capde {

void check_finite(const Tensor& t, const char* what) {
    for (double x : t.data)
        if (!std::isfinite(x)) throw DivergenceError(std::string(what) + " produced non-finite values");
}

Var rk4_step(Tape& t, const RhsFn& rhs, Var u, double time, double dt) {
    if (!(dt > 0.0)) throw ShapeError("rk4_step: dt must be positive");
    Var k1 = rhs(t, u, time);
    check_finite(t.val(k1), "rk4 stage 1");
    Var k2 = rhs(t, t.add(u, t.scale(k1, dt / 2.0)), time + dt / 2.0);
    check_finite(t.val(k2), "rk4 stage 2");
    Var k3 = rhs(t, t.add(u, t.scale(k2, dt / 2.0)), time + dt / 2.0);
    check_finite(t.val(k3), "rk4 stage 3");
    Var k4 = rhs(t, t.add(u, t.scale(k3, dt)), time + dt);
    check_finite(t.val(k4), "rk4 stage 4");
    Var ksum = t.add(t.add(k1, t.scale(k2, 2.0)), t.add(t.scale(k3, 2.0), k4));
    return t.add(u, t.scale(ksum, dt / 6.0));
}

Tensor rk4_step(const RhsValueFn& rhs, const Tensor& u, double time, double dt) {
    if (!(dt > 0.0)) throw ShapeError("rk4_step: dt must be positive");
    auto axpy = [](const Tensor& a, double s, const Tensor& b) {
        Tensor out = a;
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += s * b.data[i];
        return out;
    };
    Tensor k1 = rhs(u, time);
    check_finite(k1, "rk4 stage 1");
    Tensor k2 = rhs(axpy(u, dt / 2.0, k1), time + dt / 2.0);
    check_finite(k2, "rk4 stage 2");
    Tensor k3 = rhs(axpy(u, dt / 2.0, k2), time + dt / 2.0);
    check_finite(k3, "rk4 stage 3");
    Tensor k4 = rhs(axpy(u, dt, k3), time + dt);
    check_finite(k4, "rk4 stage 4");
    Tensor out = u;
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] += dt / 6.0 * (k1.data[i] + 2.0 * k2.data[i] + 2.0 * k3.data[i] + k4.data[i]);
    return out;
}

std::vector<Var> rollout_node(Tape& t, const RhsFn& rhs, Var u0, const std::vector<double>& t_grid,
                              int substeps) {
    if (t_grid.empty()) throw ShapeError("rollout_node: empty time grid");
    if (substeps < 1) throw ShapeError("rollout_node: substeps must be >= 1");
    std::vector<Var> traj;
    traj.reserve(t_grid.size());
    traj.push_back(u0);
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        const double t0 = t_grid[k - 1], t1 = t_grid[k];
        if (!(t1 > t0)) throw ShapeError("rollout_node: time grid must be increasing");
        const double dt = (t1 - t0) / substeps;
        Var u = traj.back();
        for (int s = 0; s < substeps; ++s) {
            try {
                u = rk4_step(t, rhs, u, t0 + s * dt, dt);
            } catch (const DivergenceError& e) {
                throw DivergenceError("rollout diverged at frame " + std::to_string(k) + " substep " +
                                      std::to_string(s) + ": " + e.what());
            }
        }
        traj.push_back(u);
    }
    return traj;
}

std::vector<Var> rollout_onestep(Tape& t, const StepFn& step, Var history0, std::size_t history,
                                 std::size_t channels, int n_steps) {
    if (history < 1) throw ShapeError("rollout_onestep: history must be >= 1");
    const std::vector<std::size_t> h0_shape = t.val(history0).shape;
    if (h0_shape.size() < 2 || h0_shape[1] != history * channels)
        throw ShapeError("rollout_onestep: history axis must hold H*C channels");
    std::vector<Var> preds;
    preds.reserve(std::max(n_steps, 0));
    Var h = history0;
    for (int i = 0; i < n_steps; ++i) {
        Var next = step(t, h);
        const Tensor& nv = t.val(next);
        if (nv.rank() != h0_shape.size() || nv.shape[1] != channels)
            throw ShapeError("rollout_onestep: step output must have C channels");
        try {
            check_finite(nv, "one-step prediction");
        } catch (const DivergenceError& e) {
            throw DivergenceError("rollout diverged at step " + std::to_string(i) + ": " + e.what());
        }
        preds.push_back(next);
        h = history > 1 ? t.concat_axis1(t.slice_axis1(h, channels, history * channels), next) : next;
    }
    return preds;
}

}  // namespace capde
