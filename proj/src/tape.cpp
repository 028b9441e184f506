#include "capde/tape.hpp"

#include <cmath>

namespace capde {

namespace {
bool is_scalar(const Tensor& t) { return t.numel() == 1; }
}  // namespace

Var Tape::emit(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::input(Tensor value) { return emit(std::move(value), true, nullptr); }

Var Tape::constant(Tensor value) { return emit(std::move(value), false, nullptr); }

Tensor& Tape::grad_buf(int id) {
    Node& n = nodes_[id];
    if (!n.grad_alloc) {
        n.grad = Tensor::zeros(n.value.shape);
        n.grad_alloc = true;
    }
    return n.grad;
}

void Tape::accumulate(int id, const Tensor& g) {
    if (!nodes_[id].requires_grad) return;
    Tensor& buf = grad_buf(id);
    for (std::size_t i = 0; i < g.numel(); ++i) buf.data[i] += g.data[i];
}

const Tensor& Tape::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (!n.grad_alloc) throw InvariantError("gradient not computed for this node");
    return n.grad;
}

bool Tape::has_grad(Var v) const { return nodes_[v.id].grad_alloc; }

void Tape::backward(Var loss) {
    const Node& ln = nodes_[loss.id];
    if (ln.value.numel() != 1) throw ShapeError("backward: loss must be scalar, got " + shape_str(ln.value.shape));
    if (!ln.requires_grad) return;  // constant loss: all gradients are zero
    grad_buf(loss.id).data[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.grad_alloc && n.back) n.back(*this);
    }
}

// ---------------------------------------------------------------------------
// elementwise

Var Tape::add(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    bool sa = is_scalar(va), sb = is_scalar(vb);
    if (sa && sb) (va.rank() >= vb.rank() ? sa : sb) = false;  // keep the higher-rank shape
    Tensor out;
    if (va.same_shape(vb)) {
        out = va;
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += vb.data[i];
    } else if (sb) {
        out = va;
        for (auto& x : out.data) x += vb.data[0];
    } else if (sa) {
        out = vb;
        for (auto& x : out.data) x += va.data[0];
    } else {
        throw ShapeError("add: shape mismatch " + shape_str(va.shape) + " vs " + shape_str(vb.shape));
    }
    bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    int ia = a.id, ib = b.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, ib, io](Tape& t) {
        const Tensor& g = t.nodes_[io].grad;
        auto fold = [&](int target) {
            const Tensor& tv = t.nodes_[target].value;
            if (tv.numel() == g.numel()) {
                t.accumulate(target, g);
            } else {
                double s = 0.0;
                for (double x : g.data) s += x;
                Tensor gt = Tensor::zeros(tv.shape);
                gt.data[0] = s;
                t.accumulate(target, gt);
            }
        };
        fold(ia);
        fold(ib);
    });
}

Var Tape::sub(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    bool sa = is_scalar(va), sb = is_scalar(vb);
    if (sa && sb) (va.rank() >= vb.rank() ? sa : sb) = false;  // keep the higher-rank shape
    Tensor out;
    if (va.same_shape(vb)) {
        out = va;
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= vb.data[i];
    } else if (sb) {
        out = va;
        for (auto& x : out.data) x -= vb.data[0];
    } else if (sa) {
        out = vb;
        for (auto& x : out.data) x = va.data[0] - x;
    } else {
        throw ShapeError("sub: shape mismatch " + shape_str(va.shape) + " vs " + shape_str(vb.shape));
    }
    bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    int ia = a.id, ib = b.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, ib, io](Tape& t) {
        const Tensor& g = t.nodes_[io].grad;
        auto fold = [&](int target, double sign) {
            const Tensor& tv = t.nodes_[target].value;
            if (tv.numel() == g.numel()) {
                if (sign > 0) {
                    t.accumulate(target, g);
                } else {
                    Tensor gn = g;
                    for (auto& x : gn.data) x = -x;
                    t.accumulate(target, gn);
                }
            } else {
                double s = 0.0;
                for (double x : g.data) s += x;
                Tensor gt = Tensor::zeros(tv.shape);
                gt.data[0] = sign * s;
                t.accumulate(target, gt);
            }
        };
        fold(ia, +1.0);
        fold(ib, -1.0);
    });
}

Var Tape::mul(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    bool sa = is_scalar(va), sb = is_scalar(vb);
    if (sa && sb) (va.rank() >= vb.rank() ? sa : sb) = false;  // keep the higher-rank shape
    Tensor out;
    if (va.same_shape(vb)) {
        out = va;
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= vb.data[i];
    } else if (sb) {
        out = va;
        for (auto& x : out.data) x *= vb.data[0];
    } else if (sa) {
        out = vb;
        for (auto& x : out.data) x *= va.data[0];
    } else {
        throw ShapeError("mul: shape mismatch " + shape_str(va.shape) + " vs " + shape_str(vb.shape));
    }
    bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    int ia = a.id, ib = b.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, ib, io](Tape& t) {
        const Tensor& g = t.nodes_[io].grad;
        const Tensor& va = t.nodes_[ia].value;
        const Tensor& vb = t.nodes_[ib].value;
        auto fold = [&](int target, const Tensor& other) {
            const Tensor& tv = t.nodes_[target].value;
            if (!t.nodes_[target].requires_grad) return;
            if (tv.numel() == g.numel()) {
                Tensor gt = g;
                if (other.numel() == 1) {
                    for (auto& x : gt.data) x *= other.data[0];
                } else {
                    for (std::size_t i = 0; i < gt.numel(); ++i) gt.data[i] *= other.data[i];
                }
                t.accumulate(target, gt);
            } else {
                double s = 0.0;
                for (std::size_t i = 0; i < g.numel(); ++i) s += g.data[i] * other.data[i];
                Tensor gt = Tensor::zeros(tv.shape);
                gt.data[0] = s;
                t.accumulate(target, gt);
            }
        };
        fold(ia, vb);
        fold(ib, va);
    });
}

Var Tape::scale(Var a, double s) {
    Tensor out = val(a);
    for (auto& x : out.data) x *= s;
    bool rg = nodes_[a.id].requires_grad;
    int ia = a.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, io, s](Tape& t) {
        Tensor g = t.nodes_[io].grad;
        for (auto& x : g.data) x *= s;
        t.accumulate(ia, g);
    });
}

Var Tape::sigmoid(Var a) {
    Tensor out = val(a);
    for (auto& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
    bool rg = nodes_[a.id].requires_grad;
    int ia = a.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, io](Tape& t) {
        const Tensor& y = t.nodes_[io].value;
        Tensor g = t.nodes_[io].grad;
        for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] *= y.data[i] * (1.0 - y.data[i]);
        t.accumulate(ia, g);
    });
}

Var Tape::swish(Var a) {
    const Tensor& x = val(a);
    Tensor out = x;
    for (auto& v : out.data) v = v / (1.0 + std::exp(-v));
    bool rg = nodes_[a.id].requires_grad;
    int ia = a.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, io](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor g = t.nodes_[io].grad;
        for (std::size_t i = 0; i < g.numel(); ++i) {
            double s = 1.0 / (1.0 + std::exp(-x.data[i]));
            g.data[i] *= s * (1.0 + x.data[i] * (1.0 - s));
        }
        t.accumulate(ia, g);
    });
}

Var Tape::sin(Var a) {
    Tensor out = val(a);
    for (auto& x : out.data) x = std::sin(x);
    bool rg = nodes_[a.id].requires_grad;
    int ia = a.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, io](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor g = t.nodes_[io].grad;
        for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] *= std::cos(x.data[i]);
        t.accumulate(ia, g);
    });
}

Var Tape::cos(Var a) {
    Tensor out = val(a);
    for (auto& x : out.data) x = std::cos(x);
    bool rg = nodes_[a.id].requires_grad;
    int ia = a.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, io](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor g = t.nodes_[io].grad;
        for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] *= -std::sin(x.data[i]);
        t.accumulate(ia, g);
    });
}

// ---------------------------------------------------------------------------
// reductions

Var Tape::sum(Var a) {
    double s = 0.0;
    for (double x : val(a).data) s += x;
    bool rg = nodes_[a.id].requires_grad;
    int ia = a.id, io = static_cast<int>(nodes_.size());
    return emit(Tensor::scalar(s), rg, [ia, io](Tape& t) {
        double g = t.nodes_[io].grad.data[0];
        Tensor gt = Tensor::full(t.nodes_[ia].value.shape, g);
        t.accumulate(ia, gt);
    });
}

Var Tape::mean(Var a) {
    const Tensor& v = val(a);
    double s = 0.0;
    for (double x : v.data) s += x;
    const double n = static_cast<double>(v.numel());
    bool rg = nodes_[a.id].requires_grad;
    int ia = a.id, io = static_cast<int>(nodes_.size());
    return emit(Tensor::scalar(s / n), rg, [ia, io, n](Tape& t) {
        double g = t.nodes_[io].grad.data[0] / n;
        Tensor gt = Tensor::full(t.nodes_[ia].value.shape, g);
        t.accumulate(ia, gt);
    });
}

Var Tape::sum_squares(Var a) {
    double s = 0.0;
    for (double x : val(a).data) s += x * x;
    bool rg = nodes_[a.id].requires_grad;
    int ia = a.id, io = static_cast<int>(nodes_.size());
    return emit(Tensor::scalar(s), rg, [ia, io](Tape& t) {
        double g = t.nodes_[io].grad.data[0];
        const Tensor& x = t.nodes_[ia].value;
        Tensor gt = x;
        for (auto& v : gt.data) v *= 2.0 * g;
        t.accumulate(ia, gt);
    });
}

// ---------------------------------------------------------------------------
// linear algebra

Var Tape::matmul(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    if (va.rank() != 2 || vb.rank() != 2)
        throw ShapeError("matmul: expects rank-2 tensors, got " + shape_str(va.shape) + " @ " + shape_str(vb.shape));
    if (va.shape[1] != vb.shape[0])
        throw ShapeError("matmul: inner dims " + shape_str(va.shape) + " @ " + shape_str(vb.shape));
    Tensor out({va.shape[0], vb.shape[1]});
    matmul_into(va, vb, out);
    bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    int ia = a.id, ib = b.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, ib, io](Tape& t) {
        const Tensor& g = t.nodes_[io].grad;
        if (t.nodes_[ia].requires_grad) matmul_a_bt_into(g, t.nodes_[ib].value, t.grad_buf(ia), true);
        if (t.nodes_[ib].requires_grad) matmul_at_b_into(t.nodes_[ia].value, g, t.grad_buf(ib), true);
    });
}

Var Tape::scale_columns(Var m, Var c) {
    const Tensor& vm = val(m);
    const Tensor& vc = val(c);
    if (vm.rank() != 2) throw ShapeError("scale_columns: matrix must be rank-2");
    const std::size_t p = vm.shape[0], r = vm.shape[1];
    if (vc.numel() != r)
        throw ShapeError("scale_columns: vector length " + std::to_string(vc.numel()) + " != columns " + std::to_string(r));
    Tensor out = vm;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < r; ++j) out.data[i * r + j] *= vc.data[j];
    bool rg = nodes_[m.id].requires_grad || nodes_[c.id].requires_grad;
    int im = m.id, ic = c.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [im, ic, io, p, r](Tape& t) {
        const Tensor& g = t.nodes_[io].grad;
        const Tensor& vm = t.nodes_[im].value;
        const Tensor& vc = t.nodes_[ic].value;
        if (t.nodes_[im].requires_grad) {
            Tensor gm = g;
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < r; ++j) gm.data[i * r + j] *= vc.data[j];
            t.accumulate(im, gm);
        }
        if (t.nodes_[ic].requires_grad) {
            Tensor gc = Tensor::zeros(vc.shape);
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < r; ++j) gc.data[j] += g.data[i * r + j] * vm.data[i * r + j];
            t.accumulate(ic, gc);
        }
    });
}

Var Tape::add_bias(Var x, Var v) {
    const Tensor& vx = val(x);
    const Tensor& vv = val(v);
    if (vx.rank() < 2) throw ShapeError("add_bias: field must have a batch and channel axis");
    const std::size_t channels = vx.shape[1];
    if (vv.numel() != channels)
        throw ShapeError("add_bias: bias length " + std::to_string(vv.numel()) + " != channels " + std::to_string(channels));
    std::size_t inner = 1;
    for (std::size_t i = 2; i < vx.rank(); ++i) inner *= vx.shape[i];
    const std::size_t batch = vx.shape[0];
    Tensor out = vx;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            double* row = out.data.data() + (b * channels + c) * inner;
            const double bias = vv.data[c];
            for (std::size_t s = 0; s < inner; ++s) row[s] += bias;
        }
    bool rg = nodes_[x.id].requires_grad || nodes_[v.id].requires_grad;
    int ix = x.id, iv = v.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ix, iv, io, batch, channels, inner](Tape& t) {
        const Tensor& g = t.nodes_[io].grad;
        if (t.nodes_[ix].requires_grad) t.accumulate(ix, g);
        if (t.nodes_[iv].requires_grad) {
            Tensor gv = Tensor::zeros(t.nodes_[iv].value.shape);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t c = 0; c < channels; ++c) {
                    const double* row = g.data.data() + (b * channels + c) * inner;
                    double acc = 0.0;
                    for (std::size_t s = 0; s < inner; ++s) acc += row[s];
                    gv.data[c] += acc;
                }
            t.accumulate(iv, gv);
        }
    });
}

// ---------------------------------------------------------------------------
// structure

Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
    const Tensor& va = val(a);
    if (Tensor::numel_of(shape) != va.numel())
        throw ShapeError("reshape: element count mismatch " + shape_str(va.shape) + " -> " + shape_str(shape));
    Tensor out(shape, va.data);
    bool rg = nodes_[a.id].requires_grad;
    int ia = a.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, io](Tape& t) {
        Tensor g(t.nodes_[ia].value.shape, t.nodes_[io].grad.data);
        t.accumulate(ia, g);
    });
}

Var Tape::slice_axis1(Var a, std::size_t begin, std::size_t end) {
    const Tensor& va = val(a);
    if (va.rank() < 2) throw ShapeError("slice_axis1: needs at least rank 2");
    const std::size_t C = va.shape[1];
    if (begin >= end || end > C) throw ShapeError("slice_axis1: bad range");
    std::size_t inner = 1;
    for (std::size_t i = 2; i < va.rank(); ++i) inner *= va.shape[i];
    const std::size_t batch = va.shape[0], width = end - begin;
    std::vector<std::size_t> oshape = va.shape;
    oshape[1] = width;
    Tensor out(oshape);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < width; ++c)
            std::copy_n(va.data.data() + (b * C + begin + c) * inner, inner,
                        out.data.data() + (b * width + c) * inner);
    bool rg = nodes_[a.id].requires_grad;
    int ia = a.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, io, begin, batch, C, width, inner](Tape& t) {
        const Tensor& g = t.nodes_[io].grad;
        Tensor ga = Tensor::zeros(t.nodes_[ia].value.shape);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < width; ++c)
                std::copy_n(g.data.data() + (b * width + c) * inner, inner,
                            ga.data.data() + (b * C + begin + c) * inner);
        t.accumulate(ia, ga);
    });
}

Var Tape::concat_axis1(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    if (va.rank() != vb.rank() || va.rank() < 2) throw ShapeError("concat_axis1: rank mismatch");
    for (std::size_t i = 0; i < va.rank(); ++i)
        if (i != 1 && va.shape[i] != vb.shape[i]) throw ShapeError("concat_axis1: non-axis dims differ");
    std::size_t inner = 1;
    for (std::size_t i = 2; i < va.rank(); ++i) inner *= va.shape[i];
    const std::size_t batch = va.shape[0], ca = va.shape[1], cb = vb.shape[1];
    std::vector<std::size_t> oshape = va.shape;
    oshape[1] = ca + cb;
    Tensor out(oshape);
    for (std::size_t i = 0; i < batch; ++i) {
        std::copy_n(va.data.data() + i * ca * inner, ca * inner, out.data.data() + i * (ca + cb) * inner);
        std::copy_n(vb.data.data() + i * cb * inner, cb * inner,
                    out.data.data() + (i * (ca + cb) + ca) * inner);
    }
    bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    int ia = a.id, ib = b.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ia, ib, io, batch, ca, cb, inner](Tape& t) {
        const Tensor& g = t.nodes_[io].grad;
        if (t.nodes_[ia].requires_grad) {
            Tensor ga = Tensor::zeros(t.nodes_[ia].value.shape);
            for (std::size_t i = 0; i < batch; ++i)
                std::copy_n(g.data.data() + i * (ca + cb) * inner, ca * inner, ga.data.data() + i * ca * inner);
            t.accumulate(ia, ga);
        }
        if (t.nodes_[ib].requires_grad) {
            Tensor gb = Tensor::zeros(t.nodes_[ib].value.shape);
            for (std::size_t i = 0; i < batch; ++i)
                std::copy_n(g.data.data() + (i * (ca + cb) + ca) * inner, cb * inner,
                            gb.data.data() + i * cb * inner);
            t.accumulate(ib, gb);
        }
    });
}

// ---------------------------------------------------------------------------
// circular convolution support

Var Tape::circular_patches_1d(Var x, std::size_t k) {
    const Tensor& vx = val(x);
    if (vx.rank() != 3) throw ShapeError("circular_patches_1d: expects (B,C,L)");
    if (k % 2 == 0) throw ShapeError("circular_patches_1d: kernel must be odd");
    const std::size_t B = vx.shape[0], C = vx.shape[1], L = vx.shape[2];
    const std::size_t half = k / 2;
    Tensor out({B * L, C * k});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t pos = 0; pos < L; ++pos) {
            double* row = out.data.data() + (b * L + pos) * C * k;
            for (std::size_t c = 0; c < C; ++c) {
                const double* src = vx.data.data() + (b * C + c) * L;
                for (std::size_t j = 0; j < k; ++j) row[c * k + j] = src[(pos + j + L - half) % L];
            }
        }
    bool rg = nodes_[x.id].requires_grad;
    int ix = x.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ix, io, B, C, L, k, half](Tape& t) {
        const Tensor& g = t.nodes_[io].grad;
        Tensor gx = Tensor::zeros(t.nodes_[ix].value.shape);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t pos = 0; pos < L; ++pos) {
                const double* row = g.data.data() + (b * L + pos) * C * k;
                for (std::size_t c = 0; c < C; ++c) {
                    double* dst = gx.data.data() + (b * C + c) * L;
                    for (std::size_t j = 0; j < k; ++j) dst[(pos + j + L - half) % L] += row[c * k + j];
                }
            }
        t.accumulate(ix, gx);
    });
}

Var Tape::circular_patches_2d(Var x, std::size_t kh, std::size_t kw) {
    const Tensor& vx = val(x);
    if (vx.rank() != 4) throw ShapeError("circular_patches_2d: expects (B,C,H,W)");
    if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("circular_patches_2d: kernel must be odd");
    const std::size_t B = vx.shape[0], C = vx.shape[1], H = vx.shape[2], W = vx.shape[3];
    const std::size_t hh = kh / 2, hw = kw / 2, taps = kh * kw;
    Tensor out({B * H * W, C * taps});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t p = 0; p < W; ++p) {
                double* row = out.data.data() + ((b * H + i) * W + p) * C * taps;
                for (std::size_t c = 0; c < C; ++c) {
                    const double* src = vx.data.data() + (b * C + c) * H * W;
                    for (std::size_t di = 0; di < kh; ++di) {
                        const std::size_t si = (i + di + H - hh) % H;
                        for (std::size_t dj = 0; dj < kw; ++dj) {
                            const std::size_t sj = (p + dj + W - hw) % W;
                            row[c * taps + di * kw + dj] = src[si * W + sj];
                        }
                    }
                }
            }
    bool rg = nodes_[x.id].requires_grad;
    int ix = x.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [ix, io, B, C, H, W, kh, kw](Tape& t) {
        const std::size_t hh = kh / 2, hw = kw / 2, taps = kh * kw;
        const Tensor& g = t.nodes_[io].grad;
        Tensor gx = Tensor::zeros(t.nodes_[ix].value.shape);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < H; ++i)
                for (std::size_t p = 0; p < W; ++p) {
                    const double* row = g.data.data() + ((b * H + i) * W + p) * C * taps;
                    for (std::size_t c = 0; c < C; ++c) {
                        double* dst = gx.data.data() + (b * C + c) * H * W;
                        for (std::size_t di = 0; di < kh; ++di) {
                            const std::size_t si = (i + di + H - hh) % H;
                            for (std::size_t dj = 0; dj < kw; ++dj) {
                                const std::size_t sj = (p + dj + W - hw) % W;
                                dst[si * W + sj] += row[c * taps + di * kw + dj];
                            }
                        }
                    }
                }
        t.accumulate(ix, gx);
    });
}

Var Tape::rows_to_field(Var m, std::size_t batch, std::vector<std::size_t> spatial) {
    const Tensor& vm = val(m);
    if (vm.rank() != 2) throw ShapeError("rows_to_field: expects rank-2 input");
    std::size_t S = 1;
    for (auto d : spatial) S *= d;
    if (vm.shape[0] != batch * S) throw ShapeError("rows_to_field: row count mismatch");
    const std::size_t Co = vm.shape[1];
    std::vector<std::size_t> oshape{batch, Co};
    oshape.insert(oshape.end(), spatial.begin(), spatial.end());
    Tensor out(oshape);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t s = 0; s < S; ++s) {
            const double* row = vm.data.data() + (b * S + s) * Co;
            for (std::size_t c = 0; c < Co; ++c) out.data[(b * Co + c) * S + s] = row[c];
        }
    bool rg = nodes_[m.id].requires_grad;
    int im = m.id, io = static_cast<int>(nodes_.size());
    return emit(std::move(out), rg, [im, io, batch, S, Co](Tape& t) {
        const Tensor& g = t.nodes_[io].grad;
        Tensor gm = Tensor::zeros(t.nodes_[im].value.shape);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t s = 0; s < S; ++s) {
                double* row = gm.data.data() + (b * S + s) * Co;
                for (std::size_t c = 0; c < Co; ++c) row[c] = g.data[(b * Co + c) * S + s];
            }
        t.accumulate(im, gm);
    });
}

Var Tape::conv_circular_1d(Var x, Var weight_flat, std::size_t k) {
    // copy dims up front: recording child ops may reallocate the node vector
    const std::vector<std::size_t> xs = val(x).shape;
    const std::vector<std::size_t> ws = val(weight_flat).shape;
    if (xs.size() != 3) throw ShapeError("conv_circular_1d: expects (B,C,L)");
    if (ws.size() != 2 || ws[0] != xs[1] * k)
        throw ShapeError("conv_circular_1d: weight rows must be C_in*k");
    Var patches = circular_patches_1d(x, k);
    Var prod = matmul(patches, weight_flat);
    return rows_to_field(prod, xs[0], {xs[2]});
}

Var Tape::conv_circular_2d(Var x, Var weight_flat, std::size_t kh, std::size_t kw) {
    const std::vector<std::size_t> xs = val(x).shape;
    const std::vector<std::size_t> ws = val(weight_flat).shape;
    if (xs.size() != 4) throw ShapeError("conv_circular_2d: expects (B,C,H,W)");
    if (ws.size() != 2 || ws[0] != xs[1] * kh * kw)
        throw ShapeError("conv_circular_2d: weight rows must be C_in*kh*kw");
    Var patches = circular_patches_2d(x, kh, kw);
    Var prod = matmul(patches, weight_flat);
    return rows_to_field(prod, xs[0], {xs[2], xs[3]});
}

}  // namespace capde
