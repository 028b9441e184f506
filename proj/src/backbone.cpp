#include "capde/backbone.hpp"

#include "capde/rng.hpp"

namespace capde {

const char* backbone_kind_name(BackboneKind k) {
    switch (k) {
        case BackboneKind::mlp: return "mlp";
        case BackboneKind::conv1d: return "conv1d";
        case BackboneKind::conv2d: return "conv2d";
    }
    return "?";
}

BackboneKind parse_backbone_kind(const std::string& s) {
    if (s == "mlp") return BackboneKind::mlp;
    if (s == "conv1d") return BackboneKind::conv1d;
    if (s == "conv2d") return BackboneKind::conv2d;
    throw UsageError("unknown backbone kind: " + s);
}

void BackboneSpec::validate() const {
    if (depth < 2) throw ShapeError("backbone depth must be >= 2");
    if (width < 1) throw ShapeError("backbone width must be >= 1");
    if (in_channels < 1 || out_channels < 1) throw ShapeError("backbone channels must be >= 1");
    if (context_dim < 1) throw ShapeError("context_dim must be >= 1");
    if (kind != BackboneKind::mlp && kernel % 2 == 0) throw ShapeError("conv kernel must be odd");
}

namespace {

std::vector<LayerShape> layer_shapes(const BackboneSpec& spec) {
    std::size_t taps = 1;
    if (spec.kind == BackboneKind::conv1d) taps = spec.kernel;
    if (spec.kind == BackboneKind::conv2d) taps = spec.kernel * spec.kernel;
    std::vector<LayerShape> out;
    for (std::size_t i = 0; i < spec.depth; ++i) {
        const std::size_t c_in = (i == 0) ? spec.in_channels : spec.width;
        const std::size_t c_out = (i + 1 == spec.depth) ? spec.out_channels : spec.width;
        out.push_back(LayerShape{c_in * taps, c_out, c_in, c_out});
    }
    return out;
}

}  // namespace

Model Model::build(const BackboneSpec& spec, std::uint64_t seed, ParamStore& store,
                   InitKind lowrank_init, const std::string& prefix) {
    spec.validate();
    Model m = attach(spec, prefix);
    const std::size_t r = spec.context_dim;
    for (std::size_t i = 0; i < m.shapes_.size(); ++i) {
        const LayerShape& s = m.shapes_[i];
        // Independent streams per parameter so the plain variant draws the
        // same W as the conditioned one under the same seed.
        RngStream rw(seed, m.param_name(i, "W"));
        store.create(m.param_name(i, "W"), kaiming_init(s.d_in, s.d_out, rw));
        store.create(m.param_name(i, "b1"), Tensor::zeros({s.d_out}));
        if (spec.conditioned) {
            RngStream ra(seed, m.param_name(i, "A"));
            RngStream rb(seed, m.param_name(i, "B"));
            store.create(m.param_name(i, "A"), lowrank_a_init(lowrank_init, s.d_in, r, ra));
            store.create(m.param_name(i, "B"), lowrank_b_init(lowrank_init, r, s.d_out, rb));
            store.create(m.param_name(i, "b2"), Tensor::zeros({r, s.d_out}));
        }
    }
    return m;
}

Model Model::attach(const BackboneSpec& spec, const std::string& prefix) {
    spec.validate();
    Model m;
    m.spec_ = spec;
    m.shapes_ = layer_shapes(spec);
    m.prefix_ = prefix;
    return m;
}

std::string Model::param_name(std::size_t layer, const char* field) const {
    return prefix_ + "/" + std::to_string(layer) + "/" + field;
}

std::vector<std::string> Model::param_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < shapes_.size(); ++i) {
        out.push_back(param_name(i, "W"));
        out.push_back(param_name(i, "b1"));
        if (spec_.conditioned) {
            out.push_back(param_name(i, "A"));
            out.push_back(param_name(i, "B"));
            out.push_back(param_name(i, "b2"));
        }
    }
    return out;
}

BoundModel Model::bind(Tape& t, const VarMap& vars, Var c) const {
    if (spec_.conditioned && t.val(c).numel() != spec_.context_dim)
        throw ShapeError("model bind: context dim mismatch");
    BoundModel bound;
    bound.model_ = this;
    for (std::size_t i = 0; i < shapes_.size(); ++i) {
        Var W = vars.at(param_name(i, "W"));
        Var b1 = vars.at(param_name(i, "b1"));
        if (spec_.conditioned) {
            LayerVars l{W, vars.at(param_name(i, "A")), vars.at(param_name(i, "B")), b1,
                        vars.at(param_name(i, "b2"))};
            bound.layers_.push_back({effective_weight(t, l, c), effective_bias(t, l, c)});
        } else {
            bound.layers_.push_back({W, b1});
        }
    }
    return bound;
}

Var BoundModel::forward(Tape& t, Var u) const {
    const BackboneSpec& spec = model_->spec();
    const std::size_t expected_rank =
        spec.kind == BackboneKind::mlp ? 2 : (spec.kind == BackboneKind::conv1d ? 3 : 4);
    if (t.val(u).rank() != expected_rank)
        throw ShapeError("model_forward: input rank " + std::to_string(t.val(u).rank()) +
                         " does not match backbone kind");
    Var h = u;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (spec.kind == BackboneKind::mlp)
            h = t.matmul(h, layers_[i].w);
        else if (spec.kind == BackboneKind::conv1d)
            h = t.conv_circular_1d(h, layers_[i].w, spec.kernel);
        else
            h = t.conv_circular_2d(h, layers_[i].w, spec.kernel, spec.kernel);
        h = t.add_bias(h, layers_[i].b);
        if (i + 1 < layers_.size()) h = t.swish(h);
    }
    return h;
}

Var Model::forward(Tape& t, const VarMap& vars, Var u, Var c) const {
    return bind(t, vars, c).forward(t, u);
}

Tensor Model::forward_value(const ParamStore& store, const Tensor& u, const Tensor& c) const {
    Tape t;
    VarMap vars;
    for (const auto& name : param_names()) vars[name] = t.constant(store.get(name));
    Var cv = t.constant(c);
    return t.val(forward(t, vars, t.constant(u), cv));
}

std::size_t Model::param_count() const { return backbone_param_count(spec_); }

std::size_t backbone_param_count(const BackboneSpec& spec) {
    spec.validate();
    std::size_t total = 0;
    const std::size_t r = spec.context_dim;
    for (const LayerShape& s : layer_shapes(spec)) {
        total += s.d_in * s.d_out + s.d_out;  // W, b1
        if (spec.conditioned) total += s.d_in * r + r * s.d_out + r * s.d_out;  // A, B, b2
    }
    return total;
}

}  // namespace capde
