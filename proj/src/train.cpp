#include <cmath>
#include <limits>

#include "capde/meta.hpp"
#include "capde/rng.hpp"

namespace capde {

const char* adapt_mode_name(AdaptMode m) {
    switch (m) {
        case AdaptMode::context_only: return "context";
        case AdaptMode::extended_lowrank: return "extended";
        case AdaptMode::context_physics: return "context_physics";
    }
    return "?";
}

AdaptMode parse_adapt_mode(const std::string& s) {
    if (s == "context") return AdaptMode::context_only;
    if (s == "extended") return AdaptMode::extended_lowrank;
    if (s == "context_physics") return AdaptMode::context_physics;
    throw UsageError("unknown adapt mode: " + s);
}

void resolve_backbone(TrainConfig& cfg, const TrajectoryDataset& data) {
    switch (data.kind) {
        case PdeKind::pendulum: cfg.backbone.kind = BackboneKind::mlp; break;
        case PdeKind::gray_scott: cfg.backbone.kind = BackboneKind::conv2d; break;
        case PdeKind::burgers:
        case PdeKind::combined: cfg.backbone.kind = BackboneKind::conv1d; break;
    }
    const std::size_t channels = data.n_channels();
    const std::size_t history = cfg.loss.rollout == RolloutMode::onestep ? cfg.loss.history : 1;
    cfg.backbone.out_channels = channels;
    cfg.backbone.in_channels = channels * history;
    if (cfg.hybrid && cfg.combine == CombineMode::composed) {
        if (cfg.loss.rollout != RolloutMode::node)
            throw UsageError("composed hybrid requires node rollout");
        cfg.backbone.in_channels = 2 * channels;  // [u || G_p(u)]
    }
}

Dynamics build_dynamics(const TrainConfig& cfg, const TrajectoryDataset& data, ParamStore& store) {
    Dynamics dyn;
    dyn.model = Model::build(cfg.backbone, cfg.seed, store, cfg.lowrank_init);
    if (cfg.hybrid) {
        HybridSpec phys;
        switch (data.kind) {
            case PdeKind::pendulum: phys.kind = PhysicsKind::pendulum; break;
            case PdeKind::gray_scott: phys.kind = PhysicsKind::gray_scott; break;
            case PdeKind::burgers: phys.kind = PhysicsKind::burgers; break;
            case PdeKind::combined:
                throw UsageError("no known-physics model is available for the combined equation");
        }
        phys.strategy = cfg.strategy;
        phys.combine = cfg.combine;
        if (data.kind == PdeKind::burgers)
            phys.dx = data.envs[0].domain.extent / data.envs[0].domain.points;
        dyn.hybrid = true;
        dyn.hyb = HybridModel(dyn.model, phys);
        std::vector<std::string> env_ids;
        for (const auto& e : data.envs) env_ids.push_back(e.id);
        dyn.hyb.install_physics_params(store, env_ids, cfg.backbone.context_dim);
    }
    if (cfg.backbone.conditioned) {
        std::vector<std::string> env_ids;
        for (const auto& e : data.envs) env_ids.push_back(e.id);
        ContextTable::init_training(cfg.backbone.context_dim, env_ids).install(store);
    }
    return dyn;
}

namespace {

std::vector<WindowRef> sample_batch(const TrajectoryDataset& ds, const TrainConfig& cfg,
                                    RngStream& rng) {
    const std::size_t K = cfg.loss.window_frames(ds.n_frames());
    std::size_t max_start;
    if (cfg.loss.rollout == RolloutMode::node) {
        max_start = ds.n_frames() - 1 - K;
    } else {
        max_start = ds.n_frames() - K - cfg.loss.history;
    }
    std::vector<WindowRef> batch;
    const std::size_t env_fixed = cfg.per_env_batches ? rng.uniform_int(ds.n_envs()) : 0;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
        WindowRef w;
        w.env = cfg.per_env_batches ? env_fixed : rng.uniform_int(ds.n_envs());
        w.traj = rng.uniform_int(ds.n_trajs());
        w.start = rng.uniform_int(max_start + 1);
        batch.push_back(w);
    }
    return batch;
}

}  // namespace

TrainResult train(const TrajectoryDataset& data, const TrainConfig& cfg) {
    data.validate();
    TrainResult res;
    ParamStore store;
    res.dyn = build_dynamics(cfg, data, store);

    AdamState adam;
    PlateauScheduler sched(cfg.lr, cfg.sched_threshold, cfg.sched_patience, cfg.sched_decay,
                           cfg.sched_min_lr);
    RngStream batch_rng(cfg.seed, "train/batches");

    res.params = store;
    res.best_loss = std::numeric_limits<double>::infinity();
    double lr = cfg.lr;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto batch = sample_batch(data, cfg, batch_rng);
        LossAndGrad lg;
        try {
            lg = grad(store, [&](Tape& t, const VarMap& vars) {
                return trajectory_loss(t, vars, res.dyn, data, batch, cfg.loss);
            });
        } catch (const DivergenceError&) {
            res.aborted = true;
            res.abort_epoch = epoch;
            break;
        }
        if (!std::isfinite(lg.loss)) {
            res.aborted = true;
            res.abort_epoch = epoch;
            break;
        }
        adam_step(store, lg.grads, adam, lr);
        res.log.push_back({epoch, lg.loss, lr});
        if (lg.loss < res.best_loss) {
            res.best_loss = lg.loss;
            res.params = store;
        }
        lr = sched.step(lg.loss);
        res.steps_run = epoch + 1;
    }
    return res;
}

AdaptResult adapt(const ParamStore& trained, const TrainConfig& cfg,
                  const TrajectoryDataset& adapt_data) {
    adapt_data.validate();
    AdaptResult res;
    res.params = trained;
    ParamStore& store = res.params;

    res.dyn.model = Model::attach(cfg.backbone);
    if (cfg.hybrid) {
        HybridSpec phys;
        switch (adapt_data.kind) {
            case PdeKind::pendulum: phys.kind = PhysicsKind::pendulum; break;
            case PdeKind::gray_scott: phys.kind = PhysicsKind::gray_scott; break;
            case PdeKind::burgers: phys.kind = PhysicsKind::burgers; break;
            default: throw UsageError("unsupported hybrid kind");
        }
        phys.strategy = cfg.strategy;
        phys.combine = cfg.combine;
        if (adapt_data.kind == PdeKind::burgers)
            phys.dx = adapt_data.envs[0].domain.extent / adapt_data.envs[0].domain.points;
        res.dyn.hybrid = true;
        res.dyn.hyb = HybridModel(res.dyn.model, phys);
    }

    store.freeze_all();
    std::vector<std::string> new_ids;
    for (const auto& e : adapt_data.envs) new_ids.push_back(e.id);

    // strategy 2 has no way to resolve a new environment's coefficients from
    // the context alone; they must be learned jointly
    if (cfg.hybrid && cfg.strategy == CoeffStrategy::per_env &&
        cfg.adapt_mode != AdaptMode::context_physics)
        throw UsageError("strategy-2 hybrid adaptation requires adapt.mode = context_physics");

    if (cfg.backbone.conditioned) {
        ContextTable trained_ctx = ContextTable::from_store(store);
        if (trained_ctx.size() == 0) throw MissingInputError("checkpoint holds no trained contexts");
        ContextTable fresh = ContextTable::init_adaptation(trained_ctx, new_ids);
        for (const auto& [id, c] : fresh.entries()) {
            const std::string name = "ctx/" + id;
            if (store.has(name)) store.erase(name);
            store.create(name, c);
        }
        if (cfg.adapt_mode == AdaptMode::extended_lowrank) {
            for (std::size_t i = 0; i < cfg.backbone.depth; ++i) {
                store.unfreeze(res.dyn.model.param_name(i, "A"));
                store.unfreeze(res.dyn.model.param_name(i, "B"));
            }
        }
        if (cfg.adapt_mode == AdaptMode::context_physics && cfg.hybrid &&
            cfg.strategy == CoeffStrategy::per_env) {
            // start each new environment from the mean of the trained ones
            std::vector<std::string> trained_phys = store.names_with_prefix("phys/env/");
            if (trained_phys.empty()) throw MissingInputError("checkpoint holds no physics parameters");
            Tensor mean = Tensor::zeros(store.get(trained_phys[0]).shape);
            for (const auto& n : trained_phys)
                for (std::size_t i = 0; i < mean.numel(); ++i) mean.data[i] += store.get(n).data[i];
            for (auto& x : mean.data) x /= static_cast<double>(trained_phys.size());
            for (const auto& id : new_ids) {
                const std::string name = HybridModel::env_param_name(id);
                if (store.has(name)) store.erase(name);
                store.create(name, mean);
            }
        }
    } else {
        // non-conditioned baseline: fine-tune the last layer on the new data
        const std::size_t last = cfg.backbone.depth - 1;
        store.unfreeze(res.dyn.model.param_name(last, "W"));
        store.unfreeze(res.dyn.model.param_name(last, "b1"));
    }

    auto is_shared = [&](const std::string& name) { return store.is_frozen(name); };
    res.shared_checksum_before = store.checksum(is_shared);

    AdamState adam;
    RngStream batch_rng(cfg.seed, "adapt/batches");
    TrainConfig acfg = cfg;
    acfg.batch = std::min<std::size_t>(cfg.batch, adapt_data.n_trajs() * adapt_data.n_envs());

    double best = std::numeric_limits<double>::infinity();
    int flat = 0;
    for (std::size_t epoch = 0; epoch < cfg.adapt_epochs; ++epoch) {
        auto batch = sample_batch(adapt_data, acfg, batch_rng);
        LossAndGrad lg = grad(store, [&](Tape& t, const VarMap& vars) {
            return trajectory_loss(t, vars, res.dyn, adapt_data, batch, cfg.loss);
        });
        if (!std::isfinite(lg.loss))
            throw DivergenceError("adaptation loss became non-finite at step " + std::to_string(epoch));
        adam_step(store, lg.grads, adam, cfg.adapt_lr);
        res.log.push_back({epoch, lg.loss, cfg.adapt_lr});
        if (lg.loss < best * (1.0 - cfg.adapt_plateau_threshold)) {
            best = lg.loss;
            flat = 0;
        } else if (++flat >= cfg.adapt_plateau_patience) {
            res.plateaued = true;
            res.plateau_step = epoch;
            break;
        }
    }
    if (!res.plateaued) res.plateau_step = res.log.size();

    res.shared_checksum_after = store.checksum(is_shared);
    if (res.shared_checksum_before != res.shared_checksum_after)
        throw InvariantError("adaptation mutated frozen shared parameters");
    return res;
}

}  // namespace capde
