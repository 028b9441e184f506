#include "capde/physics.hpp"

#include <cmath>

namespace capde {

const char* physics_kind_name(PhysicsKind k) {
    switch (k) {
        case PhysicsKind::none: return "none";
        case PhysicsKind::pendulum: return "pendulum";
        case PhysicsKind::gray_scott: return "gray_scott";
        case PhysicsKind::burgers: return "burgers";
    }
    return "?";
}

PhysicsKind parse_physics_kind(const std::string& s) {
    if (s == "none") return PhysicsKind::none;
    if (s == "pendulum") return PhysicsKind::pendulum;
    if (s == "gray_scott") return PhysicsKind::gray_scott;
    if (s == "burgers") return PhysicsKind::burgers;
    throw UsageError("unknown physics kind: " + s);
}

namespace {

// pick element i of a length-n coefficient vector as a broadcastable scalar
Var coeff_at(Tape& t, Var vec, std::size_t i, std::size_t n) {
    Var row = t.reshape(vec, {1, n});
    return t.reshape(t.slice_axis1(row, i, i + 1), {1});
}

}  // namespace

Var pendulum_known_rhs(Tape& t, Var state, Var coeffs, double time) {
    const Tensor& s = t.val(state);
    if (s.rank() != 2 || s.shape[1] != 2) throw ShapeError("pendulum rhs: state must be (B,2)");
    Var theta = t.slice_axis1(state, 0, 1);
    Var theta_dot = t.slice_axis1(state, 1, 2);
    Var w0sq = coeff_at(t, coeffs, 0, 3);
    Var F = coeff_at(t, coeffs, 1, 3);
    Var wf = coeff_at(t, coeffs, 2, 3);
    // theta_ddot = -omega0^2 sin(theta) + F cos(w_f t)
    Var restoring = t.neg(t.mul(w0sq, t.sin(theta)));
    Var forcing = t.mul(F, t.cos(t.scale(wf, time)));
    Var theta_ddot = t.add(restoring, forcing);
    return t.concat_axis1(theta_dot, theta_ddot);
}

Var periodic_laplacian_2d(Tape& t, Var field_1ch, double ds) {
    const double w = 1.0 / (ds * ds);
    Tensor kernel({9, 1});
    kernel.data = {0, w, 0, w, -4.0 * w, w, 0, w, 0};
    return t.conv_circular_2d(field_1ch, t.constant(kernel), 3, 3);
}

Var periodic_dx_1d(Tape& t, Var field_1ch, double dx) {
    Tensor kernel({3, 1});
    kernel.data = {-1.0 / (2.0 * dx), 0.0, 1.0 / (2.0 * dx)};
    return t.conv_circular_1d(field_1ch, t.constant(kernel), 3);
}

Var periodic_dxx_1d(Tape& t, Var field_1ch, double dx) {
    const double w = 1.0 / (dx * dx);
    Tensor kernel({3, 1});
    kernel.data = {w, -2.0 * w, w};
    return t.conv_circular_1d(field_1ch, t.constant(kernel), 3);
}

Var gray_scott_rhs(Tape& t, Var uv, Var coeffs, const GrayScottConsts& gs) {
    const Tensor& s = t.val(uv);
    if (s.rank() != 4 || s.shape[1] != 2) throw ShapeError("gray-scott rhs: state must be (B,2,H,W)");
    Var u = t.slice_axis1(uv, 0, 1);
    Var v = t.slice_axis1(uv, 1, 2);
    Var F = coeff_at(t, coeffs, 0, 2);
    Var k = coeff_at(t, coeffs, 1, 2);
    Var uvv = t.mul(u, t.mul(v, v));
    // du/dt = D_u lap(u) - u v^2 + F (1 - u)
    Var du = t.add(t.sub(t.scale(periodic_laplacian_2d(t, u, gs.ds), gs.D_u), uvv),
                   t.mul(F, t.sub(t.constant(Tensor::scalar(1.0)), u)));
    // dv/dt = D_v lap(v) + u v^2 - (F + k) v
    Var dv = t.sub(t.add(t.scale(periodic_laplacian_2d(t, v, gs.ds), gs.D_v), uvv),
                   t.mul(t.add(F, k), v));
    return t.concat_axis1(du, dv);
}

Var burgers_known_rhs(Tape& t, Var u, Var coeffs, double dx) {
    const Tensor& s = t.val(u);
    if (s.rank() != 3 || s.shape[1] != 1) throw ShapeError("burgers rhs: state must be (B,1,L)");
    Var nu = coeff_at(t, coeffs, 0, 1);
    Var flux = t.scale(t.mul(u, u), 0.5);
    Var advection = t.neg(periodic_dx_1d(t, flux, dx));
    Var diffusion = t.mul(nu, periodic_dxx_1d(t, u, dx));
    return t.add(advection, diffusion);
}

std::size_t HybridSpec::n_coeffs() const {
    switch (kind) {
        case PhysicsKind::pendulum: return 3;
        case PhysicsKind::gray_scott: return 2;
        case PhysicsKind::burgers: return 1;
        case PhysicsKind::none: return 0;
    }
    return 0;
}

std::vector<std::string> HybridSpec::coeff_names() const {
    switch (kind) {
        case PhysicsKind::pendulum: return {"omega0_sq", "F", "w_f"};
        case PhysicsKind::gray_scott: return {"F", "k"};
        case PhysicsKind::burgers: return {"nu"};
        case PhysicsKind::none: return {};
    }
    return {};
}

std::vector<double> HybridSpec::init_values() const {
    switch (kind) {
        case PhysicsKind::pendulum: return {0.1, 0.2, 0.5};
        case PhysicsKind::gray_scott: return {5e-2, 5e-2};
        case PhysicsKind::burgers: return {1e-2};
        case PhysicsKind::none: return {};
    }
    return {};
}

void HybridModel::install_physics_params(ParamStore& store, const std::vector<std::string>& env_ids,
                                         std::size_t context_dim) const {
    if (phys_.kind == PhysicsKind::none) return;
    const std::size_t n = phys_.n_coeffs();
    Tensor init({n}, phys_.init_values());
    if (phys_.strategy == CoeffStrategy::shared_projection) {
        store.create("phys/theta", init);
        store.create("phys/Wp", Tensor::zeros({context_dim, n}));
    } else {
        for (const auto& id : env_ids) store.create(env_param_name(id), init);
    }
}

Var HybridModel::physics_params_for_env(Tape& t, const VarMap& vars, const std::string& env_id,
                                        Var c) const {
    if (phys_.kind == PhysicsKind::none) throw InvariantError("no physics configured");
    const std::size_t n = phys_.n_coeffs();
    if (phys_.strategy == CoeffStrategy::shared_projection) {
        Var theta = vars.at("phys/theta");
        Var wp = vars.at("phys/Wp");
        const std::size_t r = t.val(wp).shape[0];
        Var proj = t.reshape(t.matmul(t.reshape(c, {1, r}), wp), {n});
        return t.add(theta, proj);
    }
    auto it = vars.find(env_param_name(env_id));
    if (it == vars.end())
        throw MissingInputError("no physics parameters for environment: " + env_id);
    return it->second;
}

Var HybridModel::rhs(Tape& t, const VarMap& vars, Var u, double time, Var c, Var theta_e) const {
    return rhs(t, neural_.bind(t, vars, c), u, time, theta_e);
}

Var HybridModel::rhs(Tape& t, const BoundModel& net, Var u, double time, Var theta_e) const {
    Var gp;
    switch (phys_.kind) {
        case PhysicsKind::pendulum: gp = pendulum_known_rhs(t, u, theta_e, time); break;
        case PhysicsKind::gray_scott: gp = gray_scott_rhs(t, u, theta_e, phys_.gs); break;
        case PhysicsKind::burgers: gp = burgers_known_rhs(t, u, theta_e, phys_.dx); break;
        case PhysicsKind::none: return net.forward(t, u);
    }
    if (phys_.combine == CombineMode::additive) return t.add(gp, net.forward(t, u));
    return net.forward(t, t.concat_axis1(u, gp));
}

}  // namespace capde
