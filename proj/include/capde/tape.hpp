#pragma once

#include <functional>
#include <vector>

#include "capde/tensor.hpp"

namespace capde {

// Handle to a node on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode engine over a dynamically recorded expression graph.
// Values are computed eagerly as ops are recorded; backward() replays the
// recording in reverse. One Tape per loss evaluation; a Tape is not
// thread-safe, concurrent evaluations each own their Tape.
class Tape {
  public:
    Var input(Tensor value);     // participates in gradients
    Var constant(Tensor value);  // treated as fixed

    // --- elementwise ---
    Var add(Var a, Var b);  // same shape, or one operand scalar
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // same shape, or one operand scalar
    Var scale(Var a, double s);
    Var neg(Var a) { return scale(a, -1.0); }
    Var sigmoid(Var a);
    Var swish(Var a);  // x * sigmoid(x)
    Var sin(Var a);
    Var cos(Var a);

    // --- reductions to scalar ---
    Var sum(Var a);
    Var mean(Var a);
    Var sum_squares(Var a);

    // --- linear algebra ---
    Var matmul(Var a, Var b);          // (n,k) @ (k,m) -> (n,m)
    Var scale_columns(Var m, Var c);   // (p,r) * diag(c), c is an r-vector
    Var add_bias(Var x, Var v);        // x (B,C,...) + v (C) broadcast over batch/space

    // --- structure ---
    Var reshape(Var a, std::vector<std::size_t> shape);
    Var slice_axis1(Var a, std::size_t begin, std::size_t end);  // x (B,C,...) -> (B,end-begin,...)
    Var concat_axis1(Var a, Var b);

    // --- circular convolution support ---
    // Gather odd-sized periodic windows into an im2col matrix whose columns
    // follow the channel-major flattening (c * k + tap).
    Var circular_patches_1d(Var x, std::size_t k);                   // (B,C,L) -> (B*L, C*k)
    Var circular_patches_2d(Var x, std::size_t kh, std::size_t kw);  // (B,C,H,W) -> (B*H*W, C*kh*kw)
    // Rearrange a patches@weight product (B*S, Co) back to a field (B,Co,spatial...).
    Var rows_to_field(Var m, std::size_t batch, std::vector<std::size_t> spatial);

    // Full circular convolution; weight is the flattened (C_in*k..., C_out) matrix.
    Var conv_circular_1d(Var x, Var weight_flat, std::size_t k);
    Var conv_circular_2d(Var x, Var weight_flat, std::size_t kh, std::size_t kw);

    const Tensor& val(Var v) const { return nodes_[v.id].value; }
    const Tensor& grad(Var v) const;
    bool has_grad(Var v) const;

    // Reverse sweep from a scalar loss. Non-scalar input is rejected.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool grad_alloc = false;
        std::function<void(Tape&)> back;
    };

    std::vector<Node> nodes_;

    Var emit(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
    Tensor& grad_buf(int id);
    void accumulate(int id, const Tensor& g);
    friend struct TapeAccess;
};

}  // namespace capde
