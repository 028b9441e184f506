#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "capde/datagen.hpp"
#include "capde/meta.hpp"

using namespace capde;

namespace {

// tiny dataset holder with hand-set trajectories (pendulum layout: (time, 2))
TrajectoryDataset make_manual_dataset(std::size_t n_envs, std::size_t n_trajs, std::size_t frames,
                                      double dt) {
    TrajectoryDataset ds;
    ds.kind = PdeKind::pendulum;
    ds.split = "train";
    ds.u = Tensor({n_envs, n_trajs, frames, 2});
    ds.t_grid.resize(frames);
    for (std::size_t k = 0; k < frames; ++k) ds.t_grid[k] = dt * k;
    ds.dt = dt;
    ds.train_horizon = dt * (frames - 1);
    for (std::size_t e = 0; e < n_envs; ++e) {
        EnvironmentSpec env;
        env.kind = PdeKind::pendulum;
        env.id = "tr" + std::to_string(e);
        env.coeffs = {{"omega0", 0.5}, {"alpha", 0.0}, {"F", 0.0}, {"w_f", 0.0}};
        ds.envs.push_back(env);
    }
    return ds;
}

TrainConfig small_pendulum_cfg(std::uint64_t seed = 1) {
    TrainConfig cfg;
    cfg.backbone.kind = BackboneKind::mlp;
    cfg.backbone.depth = 3;
    cfg.backbone.width = 16;
    cfg.backbone.context_dim = 4;
    cfg.loss.rollout = RolloutMode::node;
    cfg.loss.substeps = 2;
    cfg.loss.teacher_forcing = 5;
    cfg.batch = 4;
    cfg.epochs = 500;
    cfg.lr = 1e-2;
    cfg.seed = seed;
    return cfg;
}

TrajectoryDataset slice_env(const TrajectoryDataset& ds, std::size_t env, const std::string& split) {
    TrajectoryDataset out = ds;
    out.split = split;
    out.envs = {ds.envs[env]};
    std::vector<std::size_t> shape = ds.u.shape;
    shape[0] = 1;
    out.u = Tensor(shape);
    const std::size_t block = ds.u.numel() / ds.n_envs();
    std::copy_n(ds.u.data.begin() + env * block, block, out.u.data.begin());
    return out;
}

// a model whose every parameter is zero: the rhs (and one-step map) is 0
ParamStore zero_store(const TrainConfig& cfg, const TrajectoryDataset& ds, Dynamics& dyn) {
    ParamStore store;
    dyn = build_dynamics(cfg, ds, store);
    for (const auto& name : store.names()) store.set(name, Tensor::zeros(store.get(name).shape));
    return store;
}

}  // namespace

TEST_CASE("relative_mse: fixed points, hand value, zero-norm guard, scale invariance") {
    Tensor y({2}, {3.0, 4.0});
    CHECK(relative_mse(y, y) == 0.0);
    CHECK(relative_mse(y, Tensor({2}, {0.0, 0.0})) == doctest::Approx(1.0));
    CHECK(relative_mse(y, Tensor({2}, {3.0, 0.0})) == doctest::Approx(0.64));
    CHECK_THROWS_AS(relative_mse(Tensor({2}, {0.0, 0.0}), y), InvariantError);

    const double base = relative_mse(y, Tensor({2}, {2.5, 4.5}));
    for (double lam : {2.0, -0.3, 1e6}) {
        Tensor ys({2}, {3.0 * lam, 4.0 * lam});
        Tensor ps({2}, {2.5 * lam, 4.5 * lam});
        CHECK(std::abs(relative_mse(ys, ps) - base) < 1e-12);
    }
}

TEST_CASE("trajectory_loss: exact model gives zero; constant offset gives eps^2") {
    TrajectoryDataset ds = make_manual_dataset(1, 2, 6, 0.5);
    // constant trajectories: value 0.7 everywhere
    for (auto& x : ds.u.data) x = 0.7;

    TrainConfig cfg = small_pendulum_cfg();
    resolve_backbone(cfg, ds);
    Dynamics dyn;
    ParamStore store = zero_store(cfg, ds, dyn);

    std::vector<WindowRef> batch{{0, 0, 0}, {0, 1, 0}};
    LossConfig lc = cfg.loss;
    lc.teacher_forcing = 0;
    const double zero_loss = eval_loss(store, [&](Tape& t, const VarMap& v) {
        return trajectory_loss(t, v, dyn, ds, batch, lc);
    });
    CHECK(zero_loss == 0.0);

    // truth = prediction + eps on every scored entry
    const double eps = 0.35;
    for (std::size_t e = 0; e < 1; ++e)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 1; k < 6; ++k) {
                double* p = const_cast<double*>(ds.state_ptr(e, j, k));
                p[0] = 0.7 + eps;
                p[1] = 0.7 + eps;
            }
    const double eps_loss = eval_loss(store, [&](Tape& t, const VarMap& v) {
        return trajectory_loss(t, v, dyn, ds, batch, lc);
    });
    CHECK(eps_loss == doctest::Approx(eps * eps).epsilon(1e-12));
}

TEST_CASE("trajectory_loss: hand-computed value for a 2-state linear closed form") {
    // truth follows u_i(t) = u0_i exp(lambda_i t); the zero model predicts u0
    TrajectoryDataset ds = make_manual_dataset(1, 1, 5, 0.25);
    const double l1 = -1.0, l2 = -2.0, u1 = 0.8, u2 = -0.6;
    for (std::size_t k = 0; k < 5; ++k) {
        double* p = const_cast<double*>(ds.state_ptr(0, 0, k));
        p[0] = u1 * std::exp(l1 * ds.t_grid[k]);
        p[1] = u2 * std::exp(l2 * ds.t_grid[k]);
    }
    TrainConfig cfg = small_pendulum_cfg();
    resolve_backbone(cfg, ds);
    Dynamics dyn;
    ParamStore store = zero_store(cfg, ds, dyn);
    LossConfig lc = cfg.loss;
    lc.teacher_forcing = 0;
    std::vector<WindowRef> batch{{0, 0, 0}};
    const double loss = eval_loss(store, [&](Tape& t, const VarMap& v) {
        return trajectory_loss(t, v, dyn, ds, batch, lc);
    });
    double expect = 0.0;
    for (std::size_t k = 1; k < 5; ++k) {
        expect += std::pow(u1 * std::exp(l1 * ds.t_grid[k]) - u1, 2);
        expect += std::pow(u2 * std::exp(l2 * ds.t_grid[k]) - u2, 2);
    }
    expect /= 4.0 * 2.0;  // frames x channels
    CHECK(std::abs(loss - expect) < 1e-12);
}

TEST_CASE("train: structural stability, convergence smoke, and determinism") {
    GenOptions gen;
    gen.seed = 5;
    gen.n_envs = 2;
    gen.n_trajs = 4;
    TrajectoryDataset data = generate_dataset(PdeKind::pendulum, gen);

    TrainConfig cfg = small_pendulum_cfg(7);
    resolve_backbone(cfg, data);
    TrainResult a = train(data, cfg);
    CHECK_FALSE(a.aborted);
    REQUIRE(a.log.size() == cfg.epochs);

    // layer shapes and context count unchanged by training
    CHECK(a.params.get("layers/0/W").shape == std::vector<std::size_t>{2, 16});
    CHECK(a.params.names_with_prefix("ctx/").size() == 2);

    // convergence smoke: final (best) loss well under the starting loss
    CHECK(a.best_loss < 0.01 * a.log.front().loss);

    TrainResult b = train(data, cfg);
    REQUIRE(b.log.size() == a.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
    CHECK(a.params.checksum() == b.params.checksum());
}

TEST_CASE("train: divergence aborts with the epoch index and keeps a checkpoint") {
    GenOptions gen;
    gen.seed = 6;
    gen.n_envs = 1;
    gen.n_trajs = 2;
    TrajectoryDataset data = generate_dataset(PdeKind::pendulum, gen);
    TrainConfig cfg = small_pendulum_cfg(8);
    resolve_backbone(cfg, data);
    cfg.lr = 1e12;  // force blow-up
    cfg.epochs = 200;
    TrainResult r = train(data, cfg);
    CHECK(r.aborted);
    CHECK(r.abort_epoch < 200);
    CHECK(r.params.size() > 0);
}

TEST_CASE("adapt: context-only keeps every shared parameter bit-identical") {
    GenOptions gen;
    gen.seed = 11;
    gen.n_envs = 2;
    gen.n_trajs = 4;
    TrajectoryDataset data = generate_dataset(PdeKind::pendulum, gen);
    TrainConfig cfg = small_pendulum_cfg(9);
    resolve_backbone(cfg, data);
    cfg.epochs = 300;
    TrainResult tr = train(data, cfg);

    GenOptions agen;
    agen.seed = 11;
    agen.split = "adapt";
    agen.n_envs = 2;
    TrajectoryDataset adata = generate_dataset(PdeKind::pendulum, agen);
    TrainConfig acfg = cfg;
    acfg.adapt_epochs = 60;
    AdaptResult ar = adapt(tr.params, acfg, adata);

    CHECK(ar.shared_checksum_before == ar.shared_checksum_after);
    // explicit bitwise comparison of a weight array
    CHECK(ar.params.get("layers/1/W").data == tr.params.get("layers/1/W").data);
    CHECK(ar.params.get("ctx/tr0").data == tr.params.get("ctx/tr0").data);
    // new contexts exist and moved away from the mean init
    CHECK(ar.params.has("ctx/ad0"));
    CHECK(ar.params.has("ctx/ad1"));
    ContextTable trained_ctx = ContextTable::from_store(tr.params);
    CHECK(max_abs_diff(ar.params.get("ctx/ad0"), trained_ctx.mean()) > 0.0);
    CHECK(ar.log.size() <= acfg.adapt_epochs);
}

TEST_CASE("adapt: self-adaptation on a training environment recovers its loss level") {
    GenOptions gen;
    gen.seed = 13;
    gen.n_envs = 2;
    gen.n_trajs = 4;
    TrajectoryDataset data = generate_dataset(PdeKind::pendulum, gen);
    TrainConfig cfg = small_pendulum_cfg(10);
    resolve_backbone(cfg, data);
    cfg.epochs = 600;
    TrainResult tr = train(data, cfg);

    // per-env training loss of env 0 with its trained context
    TrajectoryDataset env0 = slice_env(data, 0, "train");
    std::vector<WindowRef> wins;
    for (std::size_t j = 0; j < env0.n_trajs(); ++j)
        for (std::size_t s = 0; s + 5 < env0.n_frames(); s += 5) wins.push_back({0, j, s});
    const double train_env_loss = eval_loss(tr.params, [&](Tape& t, const VarMap& v) {
        return trajectory_loss(t, v, tr.dyn, env0, wins, cfg.loss);
    });

    // adapt a fresh context on the same environment's data
    TrajectoryDataset as_new = slice_env(data, 0, "adapt");
    as_new.envs[0].id = "ad_self";
    TrainConfig acfg = cfg;
    acfg.adapt_epochs = 500;
    AdaptResult ar = adapt(tr.params, acfg, as_new);
    const double adapted_loss = eval_loss(ar.params, [&](Tape& t, const VarMap& v) {
        TrajectoryDataset tmp = as_new;
        std::vector<WindowRef> w2 = wins;
        return trajectory_loss(t, v, ar.dyn, tmp, w2, cfg.loss);
    });
    CHECK(adapted_loss <= train_env_loss * 1.5 + 1e-9);
}

TEST_CASE("adapt: non-conditioned baseline fine-tunes only the last layer") {
    GenOptions gen;
    gen.seed = 17;
    gen.n_envs = 2;
    gen.n_trajs = 2;
    TrajectoryDataset data = generate_dataset(PdeKind::pendulum, gen);
    TrainConfig cfg = small_pendulum_cfg(12);
    cfg.backbone.conditioned = false;
    resolve_backbone(cfg, data);
    cfg.epochs = 100;
    TrainResult tr = train(data, cfg);

    GenOptions agen;
    agen.seed = 17;
    agen.split = "adapt";
    agen.n_envs = 1;
    TrajectoryDataset adata = generate_dataset(PdeKind::pendulum, agen);
    TrainConfig acfg = cfg;
    acfg.adapt_epochs = 40;
    AdaptResult ar = adapt(tr.params, acfg, adata);
    CHECK(ar.params.get("layers/0/W").data == tr.params.get("layers/0/W").data);
    CHECK(ar.params.get("layers/1/W").data == tr.params.get("layers/1/W").data);
    CHECK(ar.params.get("layers/2/W").data != tr.params.get("layers/2/W").data);
}

TEST_CASE("adapt: strategy-2 hybrid learns per-env physics jointly with the context") {
    GenOptions gen;
    gen.seed = 37;
    gen.n_envs = 2;
    gen.n_trajs = 4;
    TrajectoryDataset data = generate_dataset(PdeKind::pendulum, gen);
    TrainConfig cfg = small_pendulum_cfg(21);
    cfg.hybrid = true;
    cfg.strategy = CoeffStrategy::per_env;
    resolve_backbone(cfg, data);
    cfg.epochs = 150;
    TrainResult tr = train(data, cfg);
    CHECK(tr.params.has("phys/env/tr0"));

    GenOptions agen;
    agen.seed = 37;
    agen.split = "adapt";
    agen.n_envs = 1;
    TrajectoryDataset adata = generate_dataset(PdeKind::pendulum, agen);
    TrainConfig acfg = cfg;
    acfg.adapt_epochs = 40;
    CHECK_THROWS_AS(adapt(tr.params, acfg, adata), UsageError);  // context-only cannot resolve physics

    acfg.adapt_mode = AdaptMode::context_physics;
    AdaptResult ar = adapt(tr.params, acfg, adata);
    CHECK(ar.params.has("phys/env/ad0"));
    CHECK(ar.shared_checksum_before == ar.shared_checksum_after);
    // trained envs' physics stayed frozen; the new env's moved off its init
    CHECK(ar.params.get("phys/env/tr0").data == tr.params.get("phys/env/tr0").data);
    Tensor mean = Tensor::zeros({3});
    for (const char* id : {"tr0", "tr1"})
        for (int i = 0; i < 3; ++i)
            mean.data[i] += tr.params.get(std::string("phys/env/") + id).data[i] / 2.0;
    CHECK(max_abs_diff(ar.params.get("phys/env/ad0"), mean) > 0.0);
}

TEST_CASE("adapt: extended mode also unfreezes the low-rank factors") {
    GenOptions gen;
    gen.seed = 29;
    gen.n_envs = 2;
    gen.n_trajs = 2;
    TrajectoryDataset data = generate_dataset(PdeKind::pendulum, gen);
    TrainConfig cfg = small_pendulum_cfg(22);
    resolve_backbone(cfg, data);
    cfg.epochs = 120;
    TrainResult tr = train(data, cfg);

    GenOptions agen;
    agen.seed = 29;
    agen.split = "adapt";
    agen.n_envs = 1;
    TrajectoryDataset adata = generate_dataset(PdeKind::pendulum, agen);
    TrainConfig acfg = cfg;
    acfg.adapt_epochs = 50;
    acfg.adapt_mode = AdaptMode::extended_lowrank;
    AdaptResult ar = adapt(tr.params, acfg, adata);
    CHECK(ar.params.get("layers/0/A").data != tr.params.get("layers/0/A").data);
    CHECK(ar.params.get("layers/0/B").data != tr.params.get("layers/0/B").data);
    CHECK(ar.params.get("layers/0/W").data == tr.params.get("layers/0/W").data);
    CHECK(ar.params.get("layers/0/b2").data == tr.params.get("layers/0/b2").data);
    CHECK(ar.shared_checksum_before == ar.shared_checksum_after);
}

TEST_CASE("evaluate: zero model on constant data scores zero; aggregate is the env mean") {
    TrajectoryDataset ds = make_manual_dataset(3, 2, 7, 0.5);
    for (auto& x : ds.u.data) x = 0.9;
    ds.split = "eval_in";
    ds.train_horizon = 1.5;  // frames 0..3 in range, 4..6 out range

    TrainConfig cfg = small_pendulum_cfg();
    resolve_backbone(cfg, ds);
    Dynamics dyn;
    ParamStore store = zero_store(cfg, ds, dyn);

    EvalReport rep = evaluate(store, cfg, ds, Horizon::in_range);
    CHECK(rep.per_env.size() == 3);
    for (const auto& m : rep.per_env) CHECK(m.value == 0.0);
    CHECK(rep.aggregate == 0.0);

    // aggregate bookkeeping with nonzero values
    for (std::size_t k = 1; k < 7; ++k) {
        double* p = const_cast<double*>(ds.state_ptr(1, 0, k));
        p[0] = 1.3;
    }
    EvalReport rep2 = evaluate(store, cfg, ds, Horizon::in_range);
    double mean = 0.0;
    for (const auto& m : rep2.per_env) mean += m.value;
    mean /= rep2.per_env.size();
    CHECK(std::abs(rep2.aggregate - mean) < 1e-12);

    // missing context is an error, not a silent zero
    store.erase("ctx/tr1");
    CHECK_THROWS_AS(evaluate(store, cfg, ds, Horizon::in_range), MissingInputError);
}

TEST_CASE("ablate_init: one row per init, determinism across invocations") {
    GenOptions gen;
    gen.seed = 19;
    gen.n_envs = 2;
    gen.n_trajs = 2;
    TrajectoryDataset data = generate_dataset(PdeKind::pendulum, gen);
    GenOptions egen = gen;
    egen.split = "eval_in";
    egen.n_trajs = 2;
    TrajectoryDataset eval_data = generate_dataset(PdeKind::pendulum, egen);

    TrainConfig cfg = small_pendulum_cfg(14);
    resolve_backbone(cfg, data);
    cfg.epochs = 40;
    const std::vector<InitKind> inits{InitKind::kaiming, InitKind::xavier, InitKind::lora,
                                      InitKind::orthogonal};
    auto rows = ablate_init(data, eval_data, cfg, inits);
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(rows[i].label == init_kind_name(inits[i]));
    auto rows2 = ablate_init(data, eval_data, cfg, inits);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(rows[i].final_train_loss == rows2[i].final_train_loss);
        CHECK(rows[i].eval_rel_mse == rows2[i].eval_rel_mse);
        CHECK(rows[i].wall_ms > 0.0);
    }
}

TEST_CASE("ablate_code_dim: requested dims and closed-form parameter counts") {
    GenOptions gen;
    gen.seed = 23;
    gen.n_envs = 2;
    gen.n_trajs = 2;
    TrajectoryDataset data = generate_dataset(PdeKind::pendulum, gen);
    GenOptions egen = gen;
    egen.split = "eval_in";
    egen.n_trajs = 2;
    TrajectoryDataset eval_data = generate_dataset(PdeKind::pendulum, egen);

    TrainConfig cfg = small_pendulum_cfg(15);
    resolve_backbone(cfg, data);
    cfg.epochs = 10;
    const std::vector<std::size_t> dims{1, 2, 4, 8, 16};
    auto rows = ablate_code_dim(data, eval_data, cfg, dims);
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(rows[i].label == "r=" + std::to_string(dims[i]));
        BackboneSpec spec = cfg.backbone;
        spec.context_dim = dims[i];
        // param count = unconditioned count + sum over layers of (d_in r + 2 r d_out)
        std::size_t expect = 0;
        std::size_t taps = 1;
        std::vector<std::pair<std::size_t, std::size_t>> ls{{2, 16}, {16, 16}, {16, 2}};
        for (auto [din, dout] : ls)
            expect += din * taps * dout + dout + dims[i] * (din * taps + 2 * dout);
        CHECK(rows[i].param_count == expect);
        CHECK(conditioning_param_increment(spec) ==
              dims[i] * ((2 + 2 * 16) + 2 * (16 + 16 + 2)));
    }
    // the conditioning increment grows linearly in r
    for (std::size_t i = 1; i < 5; ++i) {
        const std::size_t inc0 = rows[i].param_count - rows[0].param_count;
        BackboneSpec s1 = cfg.backbone, s0 = cfg.backbone;
        s1.context_dim = dims[i];
        s0.context_dim = dims[0];
        CHECK(inc0 == conditioning_param_increment(s1) - conditioning_param_increment(s0));
    }
}
