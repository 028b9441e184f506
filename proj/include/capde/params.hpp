#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "capde/tape.hpp"
#include "capde/tensor.hpp"

namespace capde {

// Flat registry of named arrays. Names are unique, shapes immutable after
// creation, iteration order is lexicographic (deterministic).
class ParamStore {
  public:
    void create(const std::string& name, Tensor value);
    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    const Tensor& get(const std::string& name) const;
    // In-place update; the new value must keep the registered shape.
    void set(const std::string& name, Tensor value);
    Tensor& ref(const std::string& name);
    void erase(const std::string& name);

    void freeze(const std::string& name);
    void unfreeze(const std::string& name);
    bool is_frozen(const std::string& name) const { return frozen_.count(name) != 0; }
    const std::set<std::string>& frozen() const { return frozen_; }
    void freeze_all();
    void unfreeze_matching(const std::string& prefix);
    void freeze_matching(const std::string& prefix);

    std::vector<std::string> names() const;
    std::vector<std::string> names_with_prefix(const std::string& prefix) const;
    std::size_t size() const { return entries_.size(); }

    const std::map<std::string, Tensor>& entries() const { return entries_; }

    // FNV-1a over the raw bytes of every entry whose name passes the filter;
    // used to verify that adaptation leaves shared parameters bit-identical.
    std::uint64_t checksum(const std::function<bool(const std::string&)>& keep = nullptr) const;

  private:
    std::map<std::string, Tensor> entries_;
    std::set<std::string> frozen_;
};

// Per-name gradients; holds exactly the non-frozen entries, shapes matching.
struct GradientMap {
    std::map<std::string, Tensor> g;

    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const { return g.count(name) != 0; }
};

using VarMap = std::map<std::string, Var>;

struct LossAndGrad {
    double loss = 0.0;
    GradientMap grads;
};

// Record loss_fn on a fresh tape (non-frozen entries as differentiable
// inputs, frozen entries as constants), run the reverse sweep, and collect
// gradients for every non-frozen name. Nested calls are rejected: the
// engine is strictly first-order.
LossAndGrad grad(const ParamStore& params,
                 const std::function<Var(Tape&, const VarMap&)>& loss_fn);

// Evaluate without gradients (constants only); cheaper, same tape semantics.
double eval_loss(const ParamStore& params,
                 const std::function<Var(Tape&, const VarMap&)>& loss_fn);

}  // namespace capde
