#include "capde/layers.hpp"

#include <cmath>

namespace capde {

void AdaptiveLayerParams::validate() const {
    if (W.rank() != 2 || A.rank() != 2 || B.rank() != 2 || b2.rank() != 2 || b1.rank() != 1)
        throw ShapeError("adaptive layer: bad ranks");
    const std::size_t di = W.shape[0], dout = W.shape[1], rr = A.shape[1];
    if (rr < 1) throw ShapeError("adaptive layer: r must be >= 1");
    if (A.shape[0] != di || B.shape[0] != rr || B.shape[1] != dout || b1.shape[0] != dout ||
        b2.shape[0] != rr || b2.shape[1] != dout)
        throw ShapeError("adaptive layer: inconsistent shapes");
}

std::size_t ConvSpec::taps() const {
    if (kernel % 2 == 0) throw ShapeError("conv kernel must be odd");
    std::size_t t = kernel;
    for (std::size_t i = 1; i < spatial_rank; ++i) t *= kernel;
    return t;
}

Var effective_weight(Tape& t, const LayerVars& l, Var c) {
    return t.add(l.W, t.matmul(t.scale_columns(l.A, c), l.B));
}

Var effective_bias(Tape& t, const LayerVars& l, Var c) {
    const std::size_t r = t.val(l.b2).shape[0];
    const std::size_t d_out = t.val(l.b2).shape[1];
    Var crow = t.reshape(c, {1, r});
    Var cb = t.reshape(t.matmul(crow, l.b2), {d_out});
    return t.add(l.b1, cb);
}

Var adaptive_linear_forward(Tape& t, Var x, const LayerVars& l, Var c) {
    Var w = effective_weight(t, l, c);
    Var b = effective_bias(t, l, c);
    return t.add_bias(t.matmul(x, w), b);
}

Var adaptive_conv_forward(Tape& t, Var x, const LayerVars& l, Var c, const ConvSpec& spec) {
    const std::size_t taps = spec.taps();
    const std::vector<std::size_t> xs = t.val(x).shape;
    if (xs.size() != 2 + spec.spatial_rank)
        throw ShapeError("adaptive_conv_forward: field rank does not match spatial rank");
    const std::size_t c_in = xs[1];
    if (t.val(l.W).shape[0] != c_in * taps)
        throw ShapeError("adaptive_conv_forward: layer d_in != C_in * kernel taps");
    Var w = effective_weight(t, l, c);
    Var b = effective_bias(t, l, c);
    Var y = spec.spatial_rank == 1 ? t.conv_circular_1d(x, w, spec.kernel)
                                   : t.conv_circular_2d(x, w, spec.kernel, spec.kernel);
    return t.add_bias(y, b);
}

namespace {

LayerVars to_vars(Tape& t, const AdaptiveLayerParams& l) {
    l.validate();
    return LayerVars{t.constant(l.W), t.constant(l.A), t.constant(l.B), t.constant(l.b1),
                     t.constant(l.b2)};
}

}  // namespace

Tensor effective_weight(const AdaptiveLayerParams& l, const Tensor& c) {
    Tape t;
    LayerVars v = to_vars(t, l);
    if (c.numel() != l.r()) throw ShapeError("effective_weight: context dim != r");
    return t.val(effective_weight(t, v, t.constant(c)));
}

Tensor adaptive_linear_forward(const Tensor& x, const AdaptiveLayerParams& l, const Tensor& c) {
    Tape t;
    LayerVars v = to_vars(t, l);
    Tensor xb = x.rank() == 1 ? Tensor({1, x.shape[0]}, x.data) : x;
    Tensor out = t.val(adaptive_linear_forward(t, t.constant(xb), v, t.constant(c)));
    if (x.rank() == 1) return Tensor({out.shape[1]}, out.data);
    return out;
}

Tensor adaptive_conv_forward(const Tensor& x, const AdaptiveLayerParams& l, const Tensor& c,
                             const ConvSpec& spec) {
    Tape t;
    LayerVars v = to_vars(t, l);
    bool batched = x.rank() == 2 + spec.spatial_rank;
    Tensor xb = x;
    if (!batched) {
        std::vector<std::size_t> s{1};
        s.insert(s.end(), x.shape.begin(), x.shape.end());
        xb = Tensor(s, x.data);
    }
    Tensor out = t.val(adaptive_conv_forward(t, t.constant(xb), v, t.constant(c), spec));
    if (!batched)
        return Tensor(std::vector<std::size_t>(out.shape.begin() + 1, out.shape.end()), out.data);
    return out;
}

ContextTable ContextTable::init_training(std::size_t r, const std::vector<std::string>& env_ids) {
    if (r < 1) throw ShapeError("context dim must be >= 1");
    ContextTable table(r);
    for (const auto& id : env_ids) {
        if (table.ctx_.count(id)) throw InvariantError("duplicate environment id: " + id);
        table.ctx_.emplace(id, Tensor::zeros({r}));
    }
    return table;
}

ContextTable ContextTable::init_adaptation(const ContextTable& trained,
                                           const std::vector<std::string>& new_env_ids) {
    if (trained.size() == 0) throw InvariantError("cannot adapt from an empty context table");
    Tensor cbar = trained.mean();
    ContextTable table(trained.r());
    for (const auto& id : new_env_ids) {
        if (table.ctx_.count(id)) throw InvariantError("duplicate environment id: " + id);
        table.ctx_.emplace(id, cbar);
    }
    return table;
}

const Tensor& ContextTable::get(const std::string& env_id) const {
    auto it = ctx_.find(env_id);
    if (it == ctx_.end()) throw MissingInputError("no context for environment: " + env_id);
    return it->second;
}

void ContextTable::set(const std::string& env_id, Tensor c) {
    if (c.numel() != r_) throw ShapeError("context dim mismatch for " + env_id);
    ctx_[env_id] = Tensor({r_}, c.data);
}

Tensor ContextTable::mean() const {
    if (ctx_.empty()) throw InvariantError("mean of empty context table");
    Tensor m = Tensor::zeros({r_});
    for (const auto& [_, c] : ctx_)
        for (std::size_t i = 0; i < r_; ++i) m.data[i] += c.data[i];
    for (auto& x : m.data) x /= static_cast<double>(ctx_.size());
    return m;
}

void ContextTable::install(ParamStore& store, const std::string& prefix) const {
    for (const auto& [id, c] : ctx_) store.create(prefix + id, c);
}

ContextTable ContextTable::from_store(const ParamStore& store, const std::string& prefix) {
    ContextTable table;
    for (const auto& name : store.names_with_prefix(prefix)) {
        const Tensor& c = store.get(name);
        if (table.r_ == 0) table.r_ = c.numel();
        table.ctx_.emplace(name.substr(prefix.size()), Tensor({table.r_}, c.data));
    }
    return table;
}

}  // namespace capde
