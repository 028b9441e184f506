#include "capde/dataset.hpp"

#include <json.hpp>

#include "capde/container.hpp"

namespace capde {

using nlohmann::json;

std::size_t TrajectoryDataset::state_numel() const {
    std::size_t n = 1;
    for (std::size_t i = 3; i < u.rank(); ++i) n *= u.shape[i];
    return n;
}

std::vector<std::size_t> TrajectoryDataset::state_shape() const {
    return std::vector<std::size_t>(u.shape.begin() + 3, u.shape.end());
}

const double* TrajectoryDataset::state_ptr(std::size_t env, std::size_t traj, std::size_t frame) const {
    const std::size_t n = state_numel();
    return u.data.data() + ((env * n_trajs() + traj) * n_frames() + frame) * n;
}

Tensor TrajectoryDataset::state(std::size_t env, std::size_t traj, std::size_t frame) const {
    Tensor out(state_shape());
    const double* p = state_ptr(env, traj, frame);
    std::copy_n(p, out.numel(), out.data.begin());
    return out;
}

void TrajectoryDataset::validate() const {
    if (u.rank() < 4) throw ShapeError("dataset tensor must be [env,traj,time,channel,...]");
    if (u.shape[0] != envs.size()) throw ShapeError("dataset env axis does not match env specs");
    if (t_grid.size() != n_frames()) throw ShapeError("dataset time grid does not match frame axis");
    if (u.rank() - 4 != spatial_dims) throw ShapeError("dataset spatial rank mismatch");
}

void write_dataset(const TrajectoryDataset& ds, const std::string& path) {
    ds.validate();
    Container c;
    c.meta["type"] = "dataset";
    c.meta["kind"] = pde_kind_name(ds.kind);
    c.meta["split"] = ds.split;
    c.meta["seed"] = std::to_string(ds.seed);
    c.meta["generator_version"] = ds.generator_version;

    json envs = json::array();
    for (const auto& e : ds.envs) {
        json je;
        je["id"] = e.id;
        je["pool"] = e.pool;
        je["forcing"] = e.forcing;
        je["coeffs"] = e.coeffs;
        je["domain"] = {{"extent", e.domain.extent},
                        {"points", e.domain.points},
                        {"dims", e.domain.dims},
                        {"periodic", e.domain.periodic}};
        envs.push_back(je);
    }
    c.meta["envs"] = envs.dump();

    c.put_array("u", ds.u);
    c.put_array("t_grid", Tensor({ds.t_grid.size()}, ds.t_grid));
    c.put_array("grid_meta", Tensor({3}, {ds.dt, ds.ds, ds.train_horizon}));
    write_container(c, path);
}

TrajectoryDataset read_dataset(const std::string& path) {
    Container c = read_container(path);
    if (c.meta_or("type", "") != "dataset") throw VersionError("not a dataset container: " + path);
    TrajectoryDataset ds;
    ds.kind = parse_pde_kind(c.meta_or("kind", ""));
    ds.split = c.meta_or("split", "train");
    ds.seed = std::stoull(c.meta_or("seed", "0"));
    ds.generator_version = c.meta_or("generator_version", "?");
    ds.u = c.array("u");
    const Tensor& tg = c.array("t_grid");
    ds.t_grid = tg.data;
    const Tensor& gm = c.array("grid_meta");
    ds.dt = gm.data[0];
    ds.ds = gm.data[1];
    ds.train_horizon = gm.data[2];
    ds.spatial_dims = ds.u.rank() - 4;

    json envs = json::parse(c.meta_or("envs", "[]"));
    for (const auto& je : envs) {
        EnvironmentSpec e;
        e.id = je.at("id").get<std::string>();
        e.kind = ds.kind;
        e.pool = je.at("pool").get<std::string>();
        e.forcing = je.at("forcing").get<std::string>();
        e.coeffs = je.at("coeffs").get<std::map<std::string, double>>();
        const auto& jd = je.at("domain");
        e.domain.extent = jd.at("extent").get<double>();
        e.domain.points = jd.at("points").get<std::size_t>();
        e.domain.dims = jd.at("dims").get<std::size_t>();
        e.domain.periodic = jd.at("periodic").get<bool>();
        ds.envs.push_back(std::move(e));
    }
    ds.validate();
    return ds;
}

}  // namespace capde
