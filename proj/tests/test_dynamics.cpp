#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "capde/dynamics.hpp"
#include "capde/optim.hpp"
#include "capde/physics.hpp"
#include "capde/rng.hpp"
#include "capde/spectral.hpp"
#include "test_util.hpp"

using namespace capde;

namespace {

Tensor random_field(std::vector<std::size_t> shape, int seed, double scale = 1.0) {
    RngStream rng(seed, "dynamics/field");
    Tensor t(std::move(shape));
    for (auto& x : t.data) x = scale * rng.normal();
    return t;
}

// value-level convenience: integrate with the tape rollout using constants
std::vector<Tensor> rollout_values(const RhsFn& rhs, const Tensor& u0,
                                   const std::vector<double>& grid, int substeps) {
    Tape t;
    auto traj = rollout_node(t, rhs, t.constant(u0), grid, substeps);
    std::vector<Tensor> out;
    for (Var v : traj) out.push_back(t.val(v));
    return out;
}

}  // namespace

TEST_CASE("rk4_step: zero rhs leaves the state unchanged") {
    Tensor u = random_field({2, 3}, 1);
    Tensor out = rk4_step([](const Tensor& s, double) { return Tensor::zeros(s.shape); }, u, 0.0, 0.1);
    CHECK(out.data == u.data);
}

TEST_CASE("rk4_step: u'=u over dt=0.1 gives the degree-4 Taylor of e^0.1") {
    Tensor u = Tensor::scalar(1.0);
    Tensor out = rk4_step([](const Tensor& s, double) { return s; }, u, 0.0, 0.1);
    const double dt = 0.1;
    const double taylor = 1.0 + dt + dt * dt / 2 + dt * dt * dt / 6 + dt * dt * dt * dt / 24;
    CHECK(out.data[0] == doctest::Approx(taylor).epsilon(1e-15));
}

TEST_CASE("rk4_step: divergence raises with stage information") {
    Tensor u = Tensor::scalar(1.0);
    CHECK_THROWS_AS(rk4_step([](const Tensor& s, double) { return Tensor::scalar(std::nan("")); }, u,
                             0.0, 0.1),
                    DivergenceError);
}

TEST_CASE("rk4: fourth-order convergence on u' = -u and the undamped pendulum") {
    // u' = -u on [0,1]
    auto decay = [](const Tensor& s, double) {
        Tensor d = s;
        for (auto& x : d.data) x = -x;
        return d;
    };
    auto global_err = [&](double dt) {
        Tensor u = Tensor::scalar(1.0);
        const int n = static_cast<int>(std::lround(1.0 / dt));
        for (int i = 0; i < n; ++i) u = rk4_step(decay, u, i * dt, dt);
        return std::abs(u.data[0] - std::exp(-1.0));
    };
    const double e1 = global_err(0.1), e2 = global_err(0.05), e3 = global_err(0.025);
    const double s12 = std::log2(e1 / e2), s23 = std::log2(e2 / e3);
    CHECK(s12 > 3.7);
    CHECK(s12 < 4.3);
    CHECK(s23 > 3.7);
    CHECK(s23 < 4.3);

    // undamped unforced pendulum, measured against a fine reference
    const double w0sq = 0.49;
    auto pend = [&](const Tensor& s, double) {
        Tensor d({2});
        d.data[0] = s.data[1];
        d.data[1] = -w0sq * std::sin(s.data[0]);
        return d;
    };
    auto pend_final = [&](double dt) {
        Tensor s({2}, {0.6, 0.0});
        const int n = static_cast<int>(std::lround(10.0 / dt));
        for (int i = 0; i < n; ++i) s = rk4_step(pend, s, i * dt, dt);
        return s;
    };
    Tensor ref = pend_final(0.0005);
    auto perr = [&](double dt) {
        Tensor s = pend_final(dt);
        return std::max(std::abs(s.data[0] - ref.data[0]), std::abs(s.data[1] - ref.data[1]));
    };
    const double p12 = std::log2(perr(0.1) / perr(0.05));
    const double p23 = std::log2(perr(0.05) / perr(0.025));
    CHECK(p12 > 3.7);
    CHECK(p12 < 4.3);
    CHECK(p23 > 3.7);
    CHECK(p23 < 4.3);
}

TEST_CASE("pendulum energy: undamped unforced drift < 1e-5 over [0,25] at dt=0.01") {
    const double w0sq = 0.49;
    auto pend = [&](const Tensor& s, double) {
        Tensor d({2});
        d.data[0] = s.data[1];
        d.data[1] = -w0sq * std::sin(s.data[0]);
        return d;
    };
    auto energy = [&](const Tensor& s) {
        return 0.5 * s.data[1] * s.data[1] - w0sq * std::cos(s.data[0]);
    };
    Tensor s({2}, {0.5, 0.3});
    const double e0 = energy(s);
    double worst = 0.0;
    const double dt = 0.01;
    for (int i = 0; i < 2500; ++i) {
        s = rk4_step(pend, s, i * dt, dt);
        worst = std::max(worst, std::abs(energy(s) - e0));
    }
    CHECK(worst / std::abs(e0) < 1e-5);
}

TEST_CASE("rollout_node: zero rhs gives a constant trajectory; one point returns [u0]") {
    Tensor u0 = random_field({1, 4}, 3);
    auto zero = [](Tape& t, Var u, double) { return t.scale(u, 0.0); };
    auto traj = rollout_values(zero, u0, {0.0, 0.5, 1.0}, 4);
    REQUIRE(traj.size() == 3);
    for (const auto& s : traj) CHECK(s.data == u0.data);
    auto single = rollout_values(zero, u0, {0.0}, 4);
    REQUIRE(single.size() == 1);
    CHECK(single[0].data == u0.data);
}

TEST_CASE("rollout_node: small-angle pendulum matches cos(w0 t) within 1e-3 over [0,25]") {
    const double w0 = 0.7, w0sq = w0 * w0, theta0 = 0.01;
    Tensor coeffs({3}, {w0sq, 0.0, 0.0});
    auto rhs = [&](Tape& t, Var u, double time) {
        return pendulum_known_rhs(t, u, t.constant(coeffs), time);
    };
    std::vector<double> grid;
    for (int i = 0; i <= 50; ++i) grid.push_back(0.5 * i);
    Tensor u0({1, 2}, {theta0, 0.0});
    auto traj = rollout_values(rhs, u0, grid, 25);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        worst = std::max(worst, std::abs(traj[k].data[0] - theta0 * std::cos(w0 * grid[k])));
    CHECK(worst < 1e-3);
}

TEST_CASE("rollout_onestep: identity stepper continues the last frame; n=0 gives nothing") {
    Tape t;
    Tensor h0 = random_field({1, 6}, 5);  // H=3 of a 2-channel state
    auto last_frame = [](Tape& tt, Var h) { return tt.slice_axis1(h, 4, 6); };
    auto preds = rollout_onestep(t, last_frame, t.constant(h0), 3, 2, 4);
    REQUIRE(preds.size() == 4);
    for (const auto& p : preds) {
        CHECK(t.val(p).data[0] == h0.data[4]);
        CHECK(t.val(p).data[1] == h0.data[5]);
    }
    CHECK(rollout_onestep(t, last_frame, t.constant(h0), 3, 2, 0).empty());
}

TEST_CASE("rollout_onestep: exact linear map gives the closed-form geometric decay") {
    Tape t;
    Tensor h0({1, 1}, {2.0});
    auto halve = [](Tape& tt, Var h) { return tt.scale(h, 0.5); };
    auto preds = rollout_onestep(t, halve, t.constant(h0), 1, 1, 20);
    for (int k = 0; k < 20; ++k)
        CHECK(std::abs(t.val(preds[k]).data[0] - 2.0 * std::pow(0.5, k + 1)) < 1e-10);
}

TEST_CASE("rhs_pendulum_known: equilibrium and sin(pi/2) checks") {
    Tape t;
    Tensor coeffs({3}, {1.0, 0.0, 0.5});
    Var s0 = t.constant(Tensor({1, 2}, {0.0, 0.0}));
    Tensor d0 = t.val(pendulum_known_rhs(t, s0, t.constant(coeffs), 0.0));
    CHECK(d0.data[0] == 0.0);
    CHECK(d0.data[1] == 0.0);
    Var s1 = t.constant(Tensor({1, 2}, {M_PI / 2.0, 0.0}));
    Tensor d1 = t.val(pendulum_known_rhs(t, s1, t.constant(coeffs), 0.0));
    CHECK(d1.data[1] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("rhs_pendulum_known: energy conserved to 1e-6 under rk4 rollout with F=0") {
    Tensor coeffs({3}, {0.49, 0.0, 0.0});
    auto rhs = [&](Tape& t, Var u, double time) {
        return pendulum_known_rhs(t, u, t.constant(coeffs), time);
    };
    std::vector<double> grid;
    for (int i = 0; i <= 50; ++i) grid.push_back(0.5 * i);
    Tensor u0({1, 2}, {0.4, 0.2});
    auto traj = rollout_values(rhs, u0, grid, 50);  // dt = 0.01
    auto energy = [&](const Tensor& s) {
        return 0.5 * s.data[1] * s.data[1] - 0.49 * std::cos(s.data[0]);
    };
    const double e0 = energy(traj[0]);
    for (const auto& s : traj) CHECK(std::abs(energy(s) - e0) < 1e-6);
}

TEST_CASE("gray_scott_rhs: homogeneous fixed point is stationary") {
    Tape t;
    Tensor uv({1, 2, 6, 6});
    for (std::size_t i = 0; i < 36; ++i) uv.data[i] = 1.0;  // u=1, v=0
    Tensor coeffs({2}, {0.03, 0.062});
    Tensor d = t.val(gray_scott_rhs(t, t.constant(uv), t.constant(coeffs), GrayScottConsts{}));
    for (double x : d.data) CHECK(std::abs(x) < 1e-15);
}

TEST_CASE("gray_scott_rhs: constant fields reduce to reaction-only values") {
    Tape t;
    const double u0 = 0.7, v0 = 0.2, F = 0.035, k = 0.06;
    Tensor uv({1, 2, 5, 5});
    for (std::size_t i = 0; i < 25; ++i) uv.data[i] = u0;
    for (std::size_t i = 25; i < 50; ++i) uv.data[i] = v0;
    Tensor coeffs({2}, {F, k});
    Tensor d = t.val(gray_scott_rhs(t, t.constant(uv), t.constant(coeffs), GrayScottConsts{}));
    const double du = -u0 * v0 * v0 + F * (1.0 - u0);
    const double dv = u0 * v0 * v0 - (F + k) * v0;
    for (std::size_t i = 0; i < 25; ++i) CHECK(d.data[i] == doctest::Approx(du).epsilon(1e-12));
    for (std::size_t i = 25; i < 50; ++i) CHECK(d.data[i] == doctest::Approx(dv).epsilon(1e-12));
}

TEST_CASE("periodic laplacian matches the dense circulant-matrix oracle") {
    const std::size_t H = 6, W = 6, N = H * W;
    const double ds = 2.0;
    Tensor f = random_field({1, 1, H, W}, 7);
    Tape t;
    Tensor lap = t.val(periodic_laplacian_2d(t, t.constant(f), ds));

    // dense circulant matrix of the 5-point stencil
    std::vector<double> M(N * N, 0.0);
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
            const std::size_t row = i * W + j;
            M[row * N + row] = -4.0 / (ds * ds);
            M[row * N + ((i + 1) % H) * W + j] += 1.0 / (ds * ds);
            M[row * N + ((i + H - 1) % H) * W + j] += 1.0 / (ds * ds);
            M[row * N + i * W + (j + 1) % W] += 1.0 / (ds * ds);
            M[row * N + i * W + (j + W - 1) % W] += 1.0 / (ds * ds);
        }
    for (std::size_t r = 0; r < N; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < N; ++c) acc += M[r * N + c] * f.data[c];
        CHECK(std::abs(lap.data[r] - acc) < 1e-12);
    }
}

TEST_CASE("rhs_burgers_known: constant field maps to zero") {
    Tape t;
    Tensor u = Tensor::full({1, 1, 16}, 0.8);
    Tensor coeffs({1}, {0.1});
    Tensor d = t.val(burgers_known_rhs(t, t.constant(u), t.constant(coeffs), 0.1));
    for (double x : d.data) CHECK(std::abs(x) < 1e-13);
}

TEST_CASE("rhs_burgers_known: u=sin(x), nu=0 approaches -sin cos at second order") {
    auto err_at = [](std::size_t n) {
        const double dx = 2.0 * M_PI / n;
        Tensor u({1, 1, n});
        for (std::size_t i = 0; i < n; ++i) u.data[i] = std::sin(i * dx);
        Tape t;
        Tensor coeffs({1}, {0.0});
        Tensor d = t.val(burgers_known_rhs(t, t.constant(u), t.constant(coeffs), dx));
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = i * dx;
            worst = std::max(worst, std::abs(d.data[i] + std::sin(x) * std::cos(x)));
        }
        return worst;
    };
    const double e64 = err_at(64), e128 = err_at(128);
    CHECK(e64 < 1e-2);
    CHECK(e64 / e128 > 3.5);
    CHECK(e64 / e128 < 4.5);
}

TEST_CASE("rhs_burgers_known: conservative form conserves the discrete integral") {
    Tensor u = random_field({1, 1, 32}, 9);
    Tape t;
    Tensor coeffs({1}, {0.0});
    Tensor d = t.val(burgers_known_rhs(t, t.constant(u), t.constant(coeffs), 0.19634954));
    double sum = 0.0;
    for (double x : d.data) sum += x;
    CHECK(std::abs(sum) < 1e-10);
}

TEST_CASE("rhs_combined: heat-only case decays a single mode at rate beta k^2") {
    const std::size_t n = 64;
    const double L = 16.0, beta = 0.3;
    const double k_phys = 2.0 * M_PI * 3.0 / L;  // mode index 3
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = std::sin(k_phys * (L * i / n));
    std::vector<double> du = rhs_combined(u, 0.0, beta, 0.0, 0.0, L);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(std::abs(du[i] + beta * k_phys * k_phys * u[i]) < 1e-10);
}

TEST_CASE("rhs_combined: constant field maps to zero; alpha-only matches burgers flux form") {
    const std::size_t n = 64;
    std::vector<double> c(n, 1.3);
    for (double x : rhs_combined(c, 1.0, 0.2, 0.3, 0.4, 16.0)) CHECK(std::abs(x) < 1e-12);

    // alpha=1, beta=delta=gamma=0: -d/dx(u^2); compare with spectral derivative
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = std::sin(2.0 * M_PI * 2.0 * i / n);
    std::vector<double> du = rhs_combined(u, 1.0, 0.0, 0.0, 0.0, 16.0, false);
    std::vector<double> usq(n);
    for (std::size_t i = 0; i < n; ++i) usq[i] = u[i] * u[i];
    std::vector<double> ref = spectral_derivative(usq, 1, 16.0);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(du[i] + ref[i]) < 1e-10);
}

TEST_CASE("hybrid_rhs: zero neural part gives pure physics; zero coefficients give pure data") {
    BackboneSpec bb;
    bb.kind = BackboneKind::mlp;
    bb.depth = 2;
    bb.width = 8;
    bb.in_channels = 2;
    bb.out_channels = 2;
    bb.context_dim = 3;
    ParamStore store;
    Model net = Model::build(bb, 3, store);
    // zero the final layer so the neural map is exactly zero
    const std::size_t last = bb.depth - 1;
    for (const char* f : {"W", "A", "B", "b2"})
        store.set(net.param_name(last, f), Tensor::zeros(store.get(net.param_name(last, f)).shape));

    HybridSpec phys;
    phys.kind = PhysicsKind::pendulum;
    phys.strategy = CoeffStrategy::per_env;
    HybridModel hybrid(net, phys);
    store.create(HybridModel::env_param_name("tr0"), Tensor({3}, {0.49, 0.1, 0.6}));

    Tape t;
    VarMap vars;
    for (const auto& name : store.names()) vars[name] = t.constant(store.get(name));
    Var u = t.constant(Tensor({1, 2}, {0.3, -0.2}));
    Var c = t.constant(Tensor::zeros({3}));
    Var theta = hybrid.physics_params_for_env(t, vars, "tr0", c);
    Tensor d = t.val(hybrid.rhs(t, vars, u, 1.2, c, theta));
    Tensor dp = t.val(pendulum_known_rhs(t, u, t.constant(Tensor({3}, {0.49, 0.1, 0.6})), 1.2));
    CHECK(max_abs_diff(d, dp) == 0.0);

    // zero physics coefficients: the pendulum known part vanishes identically
    store.set(HybridModel::env_param_name("tr0"), Tensor::zeros({3}));
    Tape t2;
    VarMap vars2;
    for (const auto& name : store.names()) vars2[name] = t2.constant(store.get(name));
    Var u2 = t2.constant(Tensor({1, 2}, {0.3, -0.2}));
    Var c2 = t2.constant(Tensor::zeros({3}));
    Var theta2 = hybrid.physics_params_for_env(t2, vars2, "tr0", c2);
    Tensor d2 = t2.val(hybrid.rhs(t2, vars2, u2, 1.2, c2, theta2));
    CHECK(d2.data[0] == doctest::Approx(-0.2));  // theta_dot passthrough
    CHECK(d2.data[1] == 0.0);
}

TEST_CASE("hybrid_rhs: gradient w.r.t. nu through a 5-step rollout passes finite differences") {
    BackboneSpec bb;
    bb.kind = BackboneKind::conv1d;
    bb.depth = 2;
    bb.width = 4;
    bb.kernel = 3;
    bb.in_channels = 1;
    bb.out_channels = 1;
    bb.context_dim = 2;
    ParamStore store;
    Model net = Model::build(bb, 5, store);
    HybridSpec phys;
    phys.kind = PhysicsKind::burgers;
    phys.strategy = CoeffStrategy::per_env;
    phys.dx = 2.0 * M_PI / 12.0;
    HybridModel hybrid(net, phys);
    store.create(HybridModel::env_param_name("e"), Tensor({1}, {0.05}));
    store.create("c", Tensor({2}, {0.1, -0.3}));

    Tensor u0({1, 1, 12});
    for (std::size_t i = 0; i < 12; ++i) u0.data[i] = std::sin(2.0 * M_PI * i / 12.0);
    Tensor target = random_field({1, 1, 12}, 21, 0.1);

    auto loss_fn = [&](Tape& t, const VarMap& v) {
        Var c = v.at("c");
        Var theta = hybrid.physics_params_for_env(t, v, "e", c);
        auto rhs = [&](Tape& tt, Var u, double time) { return hybrid.rhs(tt, v, u, time, c, theta); };
        auto traj = rollout_node(t, rhs, t.constant(u0), {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}, 1);
        return t.mean(t.sum_squares(t.sub(traj.back(), t.constant(target))));
    };
    // check every trainable direction, nu and c included
    CHECK(testutil::grad_check(store, loss_fn, 1e-6) < 1e-4);
}

TEST_CASE("physics_params_for_env: strategy-1 projection and strategy-2 lookup") {
    BackboneSpec bb;
    bb.kind = BackboneKind::mlp;
    bb.depth = 2;
    bb.width = 4;
    bb.in_channels = 2;
    bb.out_channels = 2;
    bb.context_dim = 2;
    ParamStore store;
    Model net = Model::build(bb, 7, store);

    HybridSpec phys;
    phys.kind = PhysicsKind::pendulum;
    phys.strategy = CoeffStrategy::shared_projection;
    HybridModel hybrid(net, phys);
    hybrid.install_physics_params(store, {"tr0"}, bb.context_dim);
    CHECK(store.get("phys/theta").data == std::vector<double>{0.1, 0.2, 0.5});

    Tape t;
    VarMap vars;
    for (const auto& name : store.names()) vars[name] = t.constant(store.get(name));
    // c = 0 -> theta_p exactly (Wp starts at zero regardless)
    Tensor th0 = t.val(hybrid.physics_params_for_env(t, vars, "tr0", t.constant(Tensor::zeros({2}))));
    CHECK(th0.data == std::vector<double>{0.1, 0.2, 0.5});
    // Wp = 0 -> theta_p for any context
    Tensor th1 =
        t.val(hybrid.physics_params_for_env(t, vars, "tr0", t.constant(Tensor({2}, {1.0, -2.0}))));
    CHECK(th1.data == std::vector<double>{0.1, 0.2, 0.5});

    // strategy 2 rejects unknown environments
    HybridSpec p2 = phys;
    p2.strategy = CoeffStrategy::per_env;
    HybridModel h2(net, p2);
    ParamStore s2;
    Model::build(bb, 7, s2);
    h2.install_physics_params(s2, {"tr0"}, bb.context_dim);
    Tape t2;
    VarMap v2;
    for (const auto& name : s2.names()) v2[name] = t2.constant(s2.get(name));
    CHECK_THROWS_AS(h2.physics_params_for_env(t2, v2, "nope", t2.constant(Tensor::zeros({2}))),
                    MissingInputError);
}

TEST_CASE("strategy 2: gradient descent recovers driven-pendulum coefficients") {
    // ground truth from the known physics; estimate starts at the default inits
    const std::vector<double> truth_vals{0.5, 0.15, 0.7};
    Tensor truth_coeffs({3}, truth_vals);
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.5 * i);
    Tensor u0({1, 2}, {0.9, 0.4});
    Tape tg;
    auto truth_rhs = [&](Tape& t, Var u, double time) {
        return pendulum_known_rhs(t, u, t.constant(truth_coeffs), time);
    };
    auto truth_traj = rollout_node(tg, truth_rhs, tg.constant(u0), grid, 4);
    std::vector<Tensor> truth;
    for (Var v : truth_traj) truth.push_back(tg.val(v));

    ParamStore store;
    store.create("phys/env/e", Tensor({3}, {0.1, 0.2, 0.5}));
    auto mae = [&] {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) acc += std::abs(store.get("phys/env/e").data[i] - truth_vals[i]);
        return acc / 3.0;
    };
    const double mae0 = mae();
    AdamState adam;
    for (int step = 0; step < 400; ++step) {
        auto lg = grad(store, [&](Tape& t, const VarMap& v) {
            auto rhs = [&](Tape& tt, Var u, double time) {
                return pendulum_known_rhs(tt, u, v.at("phys/env/e"), time);
            };
            auto traj = rollout_node(t, rhs, t.constant(u0), grid, 4);
            Var acc = t.constant(Tensor::scalar(0.0));
            for (std::size_t k = 1; k < traj.size(); ++k)
                acc = t.add(acc, t.sum_squares(t.sub(traj[k], t.constant(truth[k]))));
            return t.scale(acc, 1.0 / static_cast<double>(traj.size() - 1));
        });
        adam_step(store, lg.grads, adam, 1e-2);
    }
    const double est = store.get("phys/env/e").data[0];
    CHECK(std::abs(est - 0.5) < std::abs(0.1 - 0.5) * 0.2);
    CHECK(mae() < 0.2 * mae0);
}
