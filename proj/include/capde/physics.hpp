#pragma once

#include <string>
#include <vector>

#include "capde/backbone.hpp"
#include "capde/tape.hpp"

namespace capde {

enum class PhysicsKind { none, pendulum, gray_scott, burgers };
enum class CoeffStrategy { shared_projection, per_env };  // strategy 1 / strategy 2
enum class CombineMode { additive, composed };

const char* physics_kind_name(PhysicsKind k);
PhysicsKind parse_physics_kind(const std::string& s);

struct GrayScottConsts {
    double D_u = 0.2097;
    double D_v = 0.105;
    double ds = 2.0;
};

// --- known-physics right-hand sides, built from tape primitives so that
// --- coefficient gradients flow through rollouts ---

// state (B,2) = [theta, theta_dot]; coeffs (3,) = [omega0_sq, F, w_f].
// The damping term is deliberately absent from the known part.
Var pendulum_known_rhs(Tape& t, Var state, Var coeffs, double time);

// uv (B,2,H,W); coeffs (2,) = [F, k]; D_u, D_v fixed; 5-point periodic Laplacian.
Var gray_scott_rhs(Tape& t, Var uv, Var coeffs, const GrayScottConsts& gs);

// u (B,1,L); coeffs (1,) = [nu]; conservative advection -d/dx(u^2/2) plus
// nu * u_xx, both by centered differences on a periodic grid.
Var burgers_known_rhs(Tape& t, Var u, Var coeffs, double dx);

// Fixed-stencil helpers (constant kernels recorded on the tape).
Var periodic_laplacian_2d(Tape& t, Var field_1ch, double ds);
Var periodic_dx_1d(Tape& t, Var field_1ch, double dx);
Var periodic_dxx_1d(Tape& t, Var field_1ch, double dx);

// Physics-aware model: known-physics RHS with per-environment coefficients
// plus the neural correction, combined additively or by channel composition.
struct HybridSpec {
    PhysicsKind kind = PhysicsKind::none;
    CoeffStrategy strategy = CoeffStrategy::per_env;
    CombineMode combine = CombineMode::additive;
    GrayScottConsts gs;
    double dx = 1.0;  // burgers grid spacing

    std::size_t n_coeffs() const;
    std::vector<std::string> coeff_names() const;
    std::vector<double> init_values() const;
};

class HybridModel {
  public:
    HybridModel() = default;
    HybridModel(Model neural, HybridSpec phys) : neural_(std::move(neural)), phys_(phys) {}

    // Register the trainable physics parameters for the given environments:
    // strategy 1 creates shared "phys/theta" and "phys/Wp"; strategy 2
    // creates one "phys/env/<id>" vector per environment (Table-style inits).
    void install_physics_params(ParamStore& store, const std::vector<std::string>& env_ids,
                                std::size_t context_dim) const;
    static std::string env_param_name(const std::string& env_id) { return "phys/env/" + env_id; }

    // theta_p^e: strategy 1 -> theta + Wp^T c; strategy 2 -> the per-env entry.
    Var physics_params_for_env(Tape& t, const VarMap& vars, const std::string& env_id, Var c) const;

    // Full hybrid derivative at (u, t) with resolved coefficients theta_e.
    Var rhs(Tape& t, const VarMap& vars, Var u, double time, Var c, Var theta_e) const;
    // Same, with the neural part already bound to its context.
    Var rhs(Tape& t, const BoundModel& net, Var u, double time, Var theta_e) const;

    const Model& neural() const { return neural_; }
    const HybridSpec& phys() const { return phys_; }

  private:
    Model neural_;
    HybridSpec phys_;
};

}  // namespace capde
