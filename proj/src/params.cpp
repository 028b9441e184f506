#include "capde/params.hpp"

#include <cstring>

namespace capde {

void ParamStore::create(const std::string& name, Tensor value) {
    if (entries_.count(name)) throw InvariantError("parameter already exists: " + name);
    entries_.emplace(name, std::move(value));
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw MissingInputError("unknown parameter: " + name);
    return it->second;
}

void ParamStore::set(const std::string& name, Tensor value) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw MissingInputError("unknown parameter: " + name);
    if (it->second.shape != value.shape)
        throw ShapeError("parameter shape is immutable: " + name + " " + shape_str(it->second.shape) +
                         " vs " + shape_str(value.shape));
    it->second = std::move(value);
}

Tensor& ParamStore::ref(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw MissingInputError("unknown parameter: " + name);
    return it->second;
}

void ParamStore::erase(const std::string& name) {
    entries_.erase(name);
    frozen_.erase(name);
}

void ParamStore::freeze(const std::string& name) {
    if (!entries_.count(name)) throw MissingInputError("cannot freeze unknown parameter: " + name);
    frozen_.insert(name);
}

void ParamStore::unfreeze(const std::string& name) { frozen_.erase(name); }

void ParamStore::freeze_all() {
    for (const auto& [name, _] : entries_) frozen_.insert(name);
}

void ParamStore::unfreeze_matching(const std::string& prefix) {
    for (const auto& [name, _] : entries_)
        if (name.rfind(prefix, 0) == 0) frozen_.erase(name);
}

void ParamStore::freeze_matching(const std::string& prefix) {
    for (const auto& [name, _] : entries_)
        if (name.rfind(prefix, 0) == 0) frozen_.insert(name);
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, _] : entries_)
        if (name.rfind(prefix, 0) == 0) out.push_back(name);
    return out;
}

std::uint64_t ParamStore::checksum(const std::function<bool(const std::string&)>& keep) const {
    std::uint64_t h = 0xCBF29CE484222325ull;
    auto mix_bytes = [&h](const void* p, std::size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001B3ull;
        }
    };
    for (const auto& [name, t] : entries_) {
        if (keep && !keep(name)) continue;
        mix_bytes(name.data(), name.size());
        mix_bytes(t.data.data(), t.data.size() * sizeof(double));
    }
    return h;
}

const Tensor& GradientMap::get(const std::string& name) const {
    auto it = g.find(name);
    if (it == g.end()) throw MissingInputError("no gradient for: " + name);
    return it->second;
}

namespace {
thread_local int g_grad_depth = 0;

struct GradDepthGuard {
    GradDepthGuard() {
        if (g_grad_depth > 0)
            throw InvariantError("nested gradient computation is not supported (first-order engine)");
        ++g_grad_depth;
    }
    ~GradDepthGuard() { --g_grad_depth; }
};
}  // namespace

LossAndGrad grad(const ParamStore& params, const std::function<Var(Tape&, const VarMap&)>& loss_fn) {
    GradDepthGuard guard;
    Tape tape;
    VarMap vars;
    for (const auto& [name, tensor] : params.entries()) {
        if (params.is_frozen(name))
            vars[name] = tape.constant(tensor);
        else
            vars[name] = tape.input(tensor);
    }
    Var loss = loss_fn(tape, vars);
    if (tape.val(loss).numel() != 1) throw ShapeError("loss must be scalar");
    tape.backward(loss);

    LossAndGrad out;
    out.loss = tape.val(loss).data[0];
    for (const auto& [name, tensor] : params.entries()) {
        if (params.is_frozen(name)) continue;
        Var v = vars.at(name);
        if (tape.has_grad(v))
            out.grads.g.emplace(name, tape.grad(v));
        else
            out.grads.g.emplace(name, Tensor::zeros(tensor.shape));
    }
    return out;
}

double eval_loss(const ParamStore& params, const std::function<Var(Tape&, const VarMap&)>& loss_fn) {
    Tape tape;
    VarMap vars;
    for (const auto& [name, tensor] : params.entries()) vars[name] = tape.constant(tensor);
    Var loss = loss_fn(tape, vars);
    if (tape.val(loss).numel() != 1) throw ShapeError("loss must be scalar");
    return tape.val(loss).data[0];
}

}  // namespace capde
