#pragma once

#include <string>
#include <vector>

#include "capde/init.hpp"
#include "capde/layers.hpp"
#include "capde/params.hpp"

namespace capde {

enum class BackboneKind { mlp, conv1d, conv2d };

const char* backbone_kind_name(BackboneKind k);
BackboneKind parse_backbone_kind(const std::string& s);

struct BackboneSpec {
    BackboneKind kind = BackboneKind::mlp;
    std::size_t depth = 4;
    std::size_t width = 64;
    std::size_t kernel = 3;  // taps per axis, conv only
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t context_dim = 4;  // r
    bool conditioned = true;      // false: plain (non-conditioned) variant

    void validate() const;
};

struct LayerShape {
    std::size_t d_in, d_out;    // flattened weight matrix dims
    std::size_t c_in, c_out;    // channel view (conv); equals d for mlp
};

class Model;

// Per-layer effective weights and biases materialized once on a tape; reuse
// across the many forward passes of a rollout instead of re-deriving the
// low-rank delta at every integrator stage.
class BoundModel {
  public:
    Var forward(Tape& t, Var u) const;

  private:
    friend class Model;
    const Model* model_ = nullptr;
    struct BoundLayer {
        Var w, b;
    };
    std::vector<BoundLayer> layers_;
};

// Adaptive layers stacked with swish between all but the last; maps a state
// (or stacked history of states) to a state-shaped output.
class Model {
  public:
    static Model build(const BackboneSpec& spec, std::uint64_t seed, ParamStore& store,
                       InitKind lowrank_init = InitKind::orthogonal,
                       const std::string& prefix = "layers");
    // Rebind an already-populated store (e.g. after loading a checkpoint).
    static Model attach(const BackboneSpec& spec, const std::string& prefix = "layers");

    // u: (B, d) for mlp, (B, C, L) or (B, C, H, W) for conv kinds.
    Var forward(Tape& t, const VarMap& vars, Var u, Var c) const;
    BoundModel bind(Tape& t, const VarMap& vars, Var c) const;
    Tensor forward_value(const ParamStore& store, const Tensor& u, const Tensor& c) const;

    const BackboneSpec& spec() const { return spec_; }
    const std::vector<LayerShape>& layers() const { return shapes_; }
    std::string param_name(std::size_t layer, const char* field) const;
    std::vector<std::string> param_names() const;

    // Closed-form parameter count from shape arithmetic (excludes contexts).
    std::size_t param_count() const;

  private:
    BackboneSpec spec_;
    std::vector<LayerShape> shapes_;
    std::string prefix_;
};

// Closed-form count for a spec without building anything.
std::size_t backbone_param_count(const BackboneSpec& spec);

}  // namespace capde
