#pragma once

#include <map>
#include <string>
#include <vector>

#include "capde/params.hpp"
#include "capde/tape.hpp"
#include "capde/tensor.hpp"

namespace capde {

// One conditioned layer's shared arrays: effective weight is
// W + A diag(c) B, effective bias is b1 + b2^T c.
struct AdaptiveLayerParams {
    Tensor W;   // (d_in, d_out)
    Tensor A;   // (d_in, r)
    Tensor B;   // (r, d_out)
    Tensor b1;  // (d_out)
    Tensor b2;  // (r, d_out)

    std::size_t d_in() const { return W.shape[0]; }
    std::size_t d_out() const { return W.shape[1]; }
    std::size_t r() const { return A.shape[1]; }
    void validate() const;
};

// Var bundle for the same layer when recorded on a tape.
struct LayerVars {
    Var W, A, B, b1, b2;
};

struct ConvSpec {
    std::size_t spatial_rank = 1;  // 1 or 2
    std::size_t kernel = 3;       // odd tap count per axis
    std::size_t taps() const;
};

// --- differentiable building blocks (Eq. family: low-rank context delta) ---
Var effective_weight(Tape& t, const LayerVars& l, Var c);
Var effective_bias(Tape& t, const LayerVars& l, Var c);
// x (B, d_in) -> (B, d_out)
Var adaptive_linear_forward(Tape& t, Var x, const LayerVars& l, Var c);
// x (B, C_in, L) or (B, C_in, H, W); layer shaped with d_in = C_in * taps
Var adaptive_conv_forward(Tape& t, Var x, const LayerVars& l, Var c, const ConvSpec& spec);

// --- value-level wrappers (scratch tape), used by tests and plain inference ---
Tensor effective_weight(const AdaptiveLayerParams& l, const Tensor& c);
Tensor adaptive_linear_forward(const Tensor& x, const AdaptiveLayerParams& l, const Tensor& c);
Tensor adaptive_conv_forward(const Tensor& x, const AdaptiveLayerParams& l, const Tensor& c,
                             const ConvSpec& spec);

// Map environment-id -> context vector c^e; one shared r across entries,
// one vector per environment shared by every layer of a model.
class ContextTable {
  public:
    ContextTable() = default;
    explicit ContextTable(std::size_t r) : r_(r) {}

    // Algorithm start: every context is the zero vector.
    static ContextTable init_training(std::size_t r, const std::vector<std::string>& env_ids);
    // Adaptation start: each new context is the mean of the trained ones.
    static ContextTable init_adaptation(const ContextTable& trained,
                                        const std::vector<std::string>& new_env_ids);

    const Tensor& get(const std::string& env_id) const;  // strict lookup
    void set(const std::string& env_id, Tensor c);
    bool has(const std::string& env_id) const { return ctx_.count(env_id) != 0; }
    Tensor mean() const;
    std::size_t r() const { return r_; }
    std::size_t size() const { return ctx_.size(); }
    const std::map<std::string, Tensor>& entries() const { return ctx_; }

    // ParamStore bridge; entries are stored under "<prefix><env-id>".
    void install(ParamStore& store, const std::string& prefix = "ctx/") const;
    static ContextTable from_store(const ParamStore& store, const std::string& prefix = "ctx/");

  private:
    std::size_t r_ = 0;
    std::map<std::string, Tensor> ctx_;
};

}  // namespace capde
