#include "atrfas/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

#include "atrfas/errors.hpp"
#include "gemm.hpp"

namespace atrfas::nd {

namespace {

using BackwardFn = std::function<void(Node&)>;

Tensor make_op(const char* name, const Shape& shape, std::vector<float> value,
               std::vector<NodePtr> parents, BackwardFn fn) {
    check_finite(value, name);
    auto out = std::make_shared<Node>();
    out->shape = shape;
    out->value = std::move(value);
    out->op = name;
    if (grad_enabled()) {
        bool rg = false;
        for (const auto& p : parents)
            if (p->requires_grad) rg = true;
        if (rg) {
            out->requires_grad = true;
            out->parents = std::move(parents);
            out->backward_fn = std::move(fn);
        }
    }
    return Tensor::wrap(std::move(out));
}

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor argument");
}

// im2col for one image into a strided destination: row r of the patch
// matrix starts at cols + r*ldc and this image's L columns sit at offset
// `col0`. All images of a batch share one matrix so the conv collapses to a
// single GEMM. Stride-1 rows are segment copies.
void im2col(const float* img, int C, int H, int W, int k, int stride, int pad,
            int Hout, int Wout, float* cols, int64_t ldc, int64_t col0) {
    const int L = Hout * Wout;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* row = cols + ((c * k + ky) * k + kx) * ldc + col0;
                for (int oy = 0; oy < Hout; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    float* dst = row + int64_t(oy) * Wout;
                    if (iy < 0 || iy >= H) {
                        std::memset(dst, 0, sizeof(float) * size_t(Wout));
                        continue;
                    }
                    const float* src = img + (int64_t(c) * H + iy) * W;
                    if (stride == 1) {
                        // valid ox range: 0 <= ox-pad+kx < W
                        const int lo = std::max(0, pad - kx);
                        const int hi = std::min(Wout, W + pad - kx); // exclusive
                        if (lo > 0) std::memset(dst, 0, sizeof(float) * size_t(lo));
                        if (hi > lo)
                            std::memcpy(dst + lo, src + lo - pad + kx,
                                        sizeof(float) * size_t(hi - lo));
                        if (hi < Wout)
                            std::memset(dst + hi, 0, sizeof(float) * size_t(Wout - hi));
                    } else {
                        for (int ox = 0; ox < Wout; ++ox) {
                            const int ix = ox * stride - pad + kx;
                            dst[ox] = (ix >= 0 && ix < W) ? src[ix] : 0.0f;
                        }
                    }
                }
            }
        }
    }
}

// Transpose of im2col: scatter-add column gradients back onto the image.
void col2im_add(const float* cols, int C, int H, int W, int k, int stride, int pad,
                int Hout, int Wout, float* img, int64_t ldc, int64_t col0) {
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* row = cols + ((c * k + ky) * k + kx) * ldc + col0;
                for (int oy = 0; oy < Hout; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) continue;
                    float* dst = img + (int64_t(c) * H + iy) * W;
                    const float* src = row + int64_t(oy) * Wout;
                    if (stride == 1) {
                        const int lo = std::max(0, pad - kx);
                        const int hi = std::min(Wout, W + pad - kx);
                        float* d = dst - pad + kx;
                        for (int ox = lo; ox < hi; ++ox) d[ox] += src[ox];
                    } else {
                        for (int ox = 0; ox < Wout; ++ox) {
                            const int ix = ox * stride - pad + kx;
                            if (ix >= 0 && ix < W) dst[ix] += src[ox];
                        }
                    }
                }
            }
        }
    }
}

} // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int stride, int padding) {
    require_defined(input, "conv2d");
    require_defined(kernel, "conv2d");
    const Shape& xs = input.shape();
    const Shape& ws = kernel.shape();
    if (xs.ndim() != 4) throw ShapeError("conv2d: input must be [B,C,H,W], got " + xs.str());
    if (ws.ndim() != 4) throw ShapeError("conv2d: kernel must be [Cout,Cin,k,k], got " + ws.str());
    const int B = int(xs[0]), Cin = int(xs[1]), H = int(xs[2]), W = int(xs[3]);
    const int Cout = int(ws[0]), k = int(ws[2]);
    if (ws[1] != Cin)
        throw ShapeError("conv2d: kernel expects " + std::to_string(ws[1]) +
                         " input channels, input has " + std::to_string(Cin));
    if (ws[3] != k) throw ShapeError("conv2d: kernel must be square, got " + ws.str());
    if (k % 2 == 0) throw ParamError("conv2d: kernel side must be odd");
    if (stride < 1) throw ParamError("conv2d: stride must be >= 1");
    if (padding < 0) throw ParamError("conv2d: padding must be >= 0");
    if (H + 2 * padding < k || W + 2 * padding < k)
        throw ShapeError("conv2d: padded input smaller than kernel");
    if (bias.defined() && (bias.shape().ndim() != 1 || bias.shape()[0] != Cout))
        throw ShapeError("conv2d: bias must be [Cout]");

    const int Hout = (H + 2 * padding - k) / stride + 1;
    const int Wout = (W + 2 * padding - k) / stride + 1;
    const int K = Cin * k * k;
    const int64_t L = int64_t(Hout) * Wout;
    const int64_t BL = int64_t(B) * L;

    // One patch matrix for the whole batch: cols[K][B*L], image b occupying
    // columns [b*L, (b+1)*L). Single GEMM, then scatter to NCHW. Scratch is
    // raw storage: im2col and the GEMM overwrite every entry.
    std::shared_ptr<float[]> cols(new float[size_t(K) * size_t(BL)]);
    const float* x = input.data().data();
    const float* w = kernel.data().data();
    for (int b = 0; b < B; ++b)
        im2col(x + size_t(b) * Cin * H * W, Cin, H, W, k, stride, padding, Hout, Wout,
               cols.get(), BL, int64_t(b) * L);

    std::unique_ptr<float[]> prod(new float[size_t(Cout) * size_t(BL)]);
    detail::gemm_nn(w, cols.get(), prod.get(), Cout, int(BL), K);

    std::vector<float> out(size_t(B) * Cout * size_t(L));
    const float* bv = bias.defined() ? bias.data().data() : nullptr;
    for (int b = 0; b < B; ++b) {
        for (int c = 0; c < Cout; ++c) {
            const float* src = prod.get() + size_t(c) * size_t(BL) + size_t(b) * size_t(L);
            float* dst = out.data() + (size_t(b) * Cout + c) * size_t(L);
            if (bv) {
                const float add = bv[c];
                for (int64_t l = 0; l < L; ++l) dst[l] = src[l] + add;
            } else {
                std::memcpy(dst, src, sizeof(float) * size_t(L));
            }
        }
    }

    std::vector<NodePtr> parents{input.node(), kernel.node()};
    if (bias.defined()) parents.push_back(bias.node());
    const bool has_bias = bias.defined();
    auto fn = [B, Cin, H, W, Cout, k, stride, padding, Hout, Wout, K, L, BL, cols,
               has_bias](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        const float* go = self.grad.data();
        // Gather the output gradient into the GEMM layout [Cout][B*L].
        std::unique_ptr<float[]> gprod(new float[size_t(Cout) * size_t(BL)]);
        for (int b = 0; b < B; ++b)
            for (int c = 0; c < Cout; ++c)
                std::memcpy(gprod.get() + size_t(c) * size_t(BL) + size_t(b) * size_t(L),
                            go + (size_t(b) * Cout + c) * size_t(L), sizeof(float) * size_t(L));
        if (wn.requires_grad) {
            wn.ensure_grad();
            detail::gemm_nt(gprod.get(), cols.get(), wn.grad.data(), Cout, K, int(BL),
                            /*accumulate=*/true);
        }
        if (has_bias) {
            Node& bn = *self.parents[2];
            if (bn.requires_grad) {
                bn.ensure_grad();
                for (int c = 0; c < Cout; ++c) {
                    const float* src = gprod.get() + size_t(c) * size_t(BL);
                    double acc = 0.0;
                    for (int64_t l = 0; l < BL; ++l) acc += src[l];
                    bn.grad[c] += float(acc);
                }
            }
        }
        if (xn.requires_grad) {
            xn.ensure_grad();
            std::unique_ptr<float[]> gcols(new float[size_t(K) * size_t(BL)]);
            detail::gemm_tn(wn.value.data(), gprod.get(), gcols.get(), K, int(BL), Cout);
            for (int b = 0; b < B; ++b)
                col2im_add(gcols.get(), Cin, H, W, k, stride, padding, Hout, Wout,
                           xn.grad.data() + size_t(b) * Cin * H * W, BL, int64_t(b) * L);
        }
    };
    return make_op("conv2d", Shape{B, Cout, Hout, Wout}, std::move(out), std::move(parents),
                   std::move(fn));
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    require_defined(input, "linear");
    require_defined(weight, "linear");
    const Shape& xs = input.shape();
    const Shape& ws = weight.shape();
    if (xs.ndim() != 2) throw ShapeError("linear: input must be [B,F], got " + xs.str());
    if (ws.ndim() != 2) throw ShapeError("linear: weight must be [F,G], got " + ws.str());
    if (xs[1] != ws[0])
        throw ShapeError("linear: inner dimensions disagree, " + xs.str() + " vs " + ws.str());
    const int B = int(xs[0]), F = int(xs[1]), G = int(ws[1]);
    if (bias.defined() && (bias.shape().ndim() != 1 || bias.shape()[0] != G))
        throw ShapeError("linear: bias must be [G]");

    std::vector<float> out(size_t(B) * G);
    detail::gemm_nn(input.data().data(), weight.data().data(), out.data(), B, G, F);
    if (bias.defined()) {
        const float* bv = bias.data().data();
        for (int b = 0; b < B; ++b)
            for (int g = 0; g < G; ++g) out[size_t(b) * G + g] += bv[g];
    }

    std::vector<NodePtr> parents{input.node(), weight.node()};
    if (bias.defined()) parents.push_back(bias.node());
    const bool has_bias = bias.defined();
    auto fn = [B, F, G, has_bias](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        const float* go = self.grad.data();
        if (xn.requires_grad) {
            xn.ensure_grad();
            detail::gemm_nt(go, wn.value.data(), xn.grad.data(), B, F, G, true);
        }
        if (wn.requires_grad) {
            wn.ensure_grad();
            detail::gemm_tn(xn.value.data(), go, wn.grad.data(), F, G, B, true);
        }
        if (has_bias) {
            Node& bn = *self.parents[2];
            if (bn.requires_grad) {
                bn.ensure_grad();
                for (int b = 0; b < B; ++b)
                    for (int g = 0; g < G; ++g) bn.grad[g] += go[size_t(b) * G + g];
            }
        }
    };
    return make_op("linear", Shape{B, G}, std::move(out), std::move(parents), std::move(fn));
}

namespace {

struct AxisSplit {
    int64_t outer, n, inner;
};

AxisSplit split_at_axis(const Shape& s, int axis, const char* op) {
    if (axis < 0 || axis >= s.ndim())
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for " + s.str());
    AxisSplit a{1, s[axis], 1};
    for (int i = 0; i < axis; ++i) a.outer *= s[i];
    for (int i = axis + 1; i < s.ndim(); ++i) a.inner *= s[i];
    return a;
}

} // namespace

Tensor softmax(const Tensor& x, int axis) {
    require_defined(x, "softmax");
    const Shape& s = x.shape();
    const AxisSplit a = split_at_axis(s, axis, "softmax");
    std::vector<float> out(size_t(s.numel()));
    const float* xv = x.data().data();
    for (int64_t o = 0; o < a.outer; ++o) {
        for (int64_t i = 0; i < a.inner; ++i) {
            const int64_t base = o * a.n * a.inner + i;
            float m = xv[base];
            for (int64_t j = 1; j < a.n; ++j) m = std::max(m, xv[base + j * a.inner]);
            double denom = 0.0;
            for (int64_t j = 0; j < a.n; ++j) denom += std::exp(double(xv[base + j * a.inner]) - m);
            for (int64_t j = 0; j < a.n; ++j)
                out[size_t(base + j * a.inner)] =
                    float(std::exp(double(xv[base + j * a.inner]) - m) / denom);
        }
    }
    auto fn = [a](Node& self) {
        Node& xn = *self.parents[0];
        if (!xn.requires_grad) return;
        xn.ensure_grad();
        const float* y = self.value.data();
        const float* g = self.grad.data();
        for (int64_t o = 0; o < a.outer; ++o) {
            for (int64_t i = 0; i < a.inner; ++i) {
                const int64_t base = o * a.n * a.inner + i;
                double dot = 0.0;
                for (int64_t j = 0; j < a.n; ++j) {
                    const size_t p = size_t(base + j * a.inner);
                    dot += double(g[p]) * double(y[p]);
                }
                for (int64_t j = 0; j < a.n; ++j) {
                    const size_t p = size_t(base + j * a.inner);
                    xn.grad[p] += float(double(y[p]) * (double(g[p]) - dot));
                }
            }
        }
    };
    return make_op("softmax", s, std::move(out), {x.node()}, std::move(fn));
}

Tensor log_softmax(const Tensor& x, int axis) {
    require_defined(x, "log_softmax");
    const Shape& s = x.shape();
    const AxisSplit a = split_at_axis(s, axis, "log_softmax");
    std::vector<float> out(size_t(s.numel()));
    const float* xv = x.data().data();
    for (int64_t o = 0; o < a.outer; ++o) {
        for (int64_t i = 0; i < a.inner; ++i) {
            const int64_t base = o * a.n * a.inner + i;
            float m = xv[base];
            for (int64_t j = 1; j < a.n; ++j) m = std::max(m, xv[base + j * a.inner]);
            double denom = 0.0;
            for (int64_t j = 0; j < a.n; ++j) denom += std::exp(double(xv[base + j * a.inner]) - m);
            const double lse = std::log(denom) + m;
            for (int64_t j = 0; j < a.n; ++j)
                out[size_t(base + j * a.inner)] = float(double(xv[base + j * a.inner]) - lse);
        }
    }
    auto fn = [a](Node& self) {
        Node& xn = *self.parents[0];
        if (!xn.requires_grad) return;
        xn.ensure_grad();
        const float* y = self.value.data();
        const float* g = self.grad.data();
        for (int64_t o = 0; o < a.outer; ++o) {
            for (int64_t i = 0; i < a.inner; ++i) {
                const int64_t base = o * a.n * a.inner + i;
                double gsum = 0.0;
                for (int64_t j = 0; j < a.n; ++j) gsum += g[size_t(base + j * a.inner)];
                for (int64_t j = 0; j < a.n; ++j) {
                    const size_t p = size_t(base + j * a.inner);
                    xn.grad[p] += float(double(g[p]) - std::exp(double(y[p])) * gsum);
                }
            }
        }
    };
    return make_op("log_softmax", s, std::move(out), {x.node()}, std::move(fn));
}

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const char* name, const Tensor& x, Fwd fwd, Bwd bwd) {
    require_defined(x, name);
    std::vector<float> out(x.data().begin(), x.data().end());
    for (float& v : out) v = fwd(v);
    auto fn = [bwd](Node& self) {
        Node& xn = *self.parents[0];
        if (!xn.requires_grad) return;
        xn.ensure_grad();
        const size_t n = self.value.size();
        for (size_t i = 0; i < n; ++i)
            xn.grad[i] += bwd(self.grad[i], xn.value[i], self.value[i]);
    };
    return make_op(name, x.shape(), std::move(out), {x.node()}, std::move(fn));
}

} // namespace

Tensor relu(const Tensor& x) {
    return unary_op(
        "relu", x, [](float v) { return v > 0.0f ? v : 0.0f; },
        [](float g, float xi, float) { return xi > 0.0f ? g : 0.0f; });
}

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        "sigmoid", x,
        [](float v) {
            if (v >= 0.0f) {
                const float e = std::exp(-v);
                return 1.0f / (1.0f + e);
            }
            const float e = std::exp(v);
            return e / (1.0f + e);
        },
        [](float g, float, float yi) { return g * yi * (1.0f - yi); });
}

Tensor log(const Tensor& x) {
    require_defined(x, "log");
    for (float v : x.data())
        if (!(v > 0.0f)) throw ValueError("log: input must be strictly positive");
    return unary_op(
        "log", x, [](float v) { return std::log(v); },
        [](float g, float xi, float) { return g / xi; });
}

Tensor neg(const Tensor& x) {
    return unary_op(
        "neg", x, [](float v) { return -v; }, [](float g, float, float) { return -g; });
}

Tensor clamp(const Tensor& x, float lo, float hi) {
    if (!(lo <= hi)) throw ParamError("clamp: lo must be <= hi");
    return unary_op(
        "clamp", x, [lo, hi](float v) { return std::min(std::max(v, lo), hi); },
        [lo, hi](float g, float xi, float) { return (xi > lo && xi < hi) ? g : 0.0f; });
}

namespace {

enum class BinKind { Add, Sub, Mul };

Tensor binary_op(BinKind kind, const char* name, const Tensor& a, const Tensor& b) {
    require_defined(a, name);
    require_defined(b, name);
    if (a.shape() != b.shape())
        throw ShapeError(std::string(name) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<float> out(av.size());
    switch (kind) {
        case BinKind::Add:
            for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
            break;
        case BinKind::Sub:
            for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
            break;
        case BinKind::Mul:
            for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
            break;
    }
    auto fn = [kind](Node& self) {
        Node& an = *self.parents[0];
        Node& bn = *self.parents[1];
        const size_t n = self.value.size();
        const float* g = self.grad.data();
        if (an.requires_grad) {
            an.ensure_grad();
            switch (kind) {
                case BinKind::Add:
                case BinKind::Sub:
                    for (size_t i = 0; i < n; ++i) an.grad[i] += g[i];
                    break;
                case BinKind::Mul:
                    for (size_t i = 0; i < n; ++i) an.grad[i] += g[i] * bn.value[i];
                    break;
            }
        }
        if (bn.requires_grad) {
            bn.ensure_grad();
            switch (kind) {
                case BinKind::Add:
                    for (size_t i = 0; i < n; ++i) bn.grad[i] += g[i];
                    break;
                case BinKind::Sub:
                    for (size_t i = 0; i < n; ++i) bn.grad[i] -= g[i];
                    break;
                case BinKind::Mul:
                    for (size_t i = 0; i < n; ++i) bn.grad[i] += g[i] * an.value[i];
                    break;
            }
        }
    };
    return make_op(name, a.shape(), std::move(out), {a.node(), b.node()}, std::move(fn));
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(BinKind::Add, "add", a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(BinKind::Sub, "sub", a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(BinKind::Mul, "mul", a, b); }

Tensor add(const Tensor& a, float s) {
    return unary_op(
        "add_scalar", a, [s](float v) { return v + s; }, [](float g, float, float) { return g; });
}

Tensor sub(const Tensor& a, float s) { return add(a, -s); }

Tensor sub(float s, const Tensor& a) {
    return unary_op(
        "rsub_scalar", a, [s](float v) { return s - v; },
        [](float g, float, float) { return -g; });
}

Tensor mul(const Tensor& a, float s) {
    return unary_op(
        "mul_scalar", a, [s](float v) { return v * s; },
        [s](float g, float, float) { return g * s; });
}

Tensor add_broadcast0(const Tensor& x, const Tensor& p) {
    require_defined(x, "add_broadcast0");
    require_defined(p, "add_broadcast0");
    const Shape& xs = x.shape();
    if (xs.ndim() < 1) throw ShapeError("add_broadcast0: x must have a leading axis");
    if (xs.drop_axis(0) != p.shape())
        throw ShapeError("add_broadcast0: p shape " + p.shape().str() +
                         " must equal x shape " + xs.str() + " minus axis 0");
    const int64_t n0 = xs[0];
    const int64_t m = p.numel();
    const float* xv = x.data().data();
    const float* pv = p.data().data();
    std::vector<float> out(size_t(xs.numel()));
    for (int64_t r = 0; r < n0; ++r)
        for (int64_t i = 0; i < m; ++i) out[size_t(r * m + i)] = xv[r * m + i] + pv[i];
    auto fn = [n0, m](Node& self) {
        Node& xn = *self.parents[0];
        Node& pn = *self.parents[1];
        const float* g = self.grad.data();
        if (xn.requires_grad) {
            xn.ensure_grad();
            for (size_t i = 0; i < self.value.size(); ++i) xn.grad[i] += g[i];
        }
        if (pn.requires_grad) {
            pn.ensure_grad();
            for (int64_t r = 0; r < n0; ++r)
                for (int64_t i = 0; i < m; ++i) pn.grad[size_t(i)] += g[r * m + i];
        }
    };
    return make_op("add_broadcast0", xs, std::move(out), {x.node(), p.node()}, std::move(fn));
}

namespace {

struct ReducePlan {
    Shape out_shape;
    // For each input axis: the stride of the corresponding output axis, or 0
    // when the axis is reduced away.
    std::array<int64_t, Shape::kMaxAxes> out_stride{};
    int64_t count = 1; // elements folded into one output cell
};

ReducePlan plan_reduce(const Shape& s, std::span<const int> axes, const char* op) {
    std::array<bool, Shape::kMaxAxes> reduced{};
    for (int ax : axes) {
        if (ax < 0 || ax >= s.ndim())
            throw ShapeError(std::string(op) + ": axis " + std::to_string(ax) +
                             " out of range for " + s.str());
        if (reduced[ax]) throw ParamError(std::string(op) + ": duplicate axis");
        reduced[ax] = true;
    }
    ReducePlan plan;
    std::vector<int64_t> kept;
    for (int i = 0; i < s.ndim(); ++i) {
        if (reduced[i])
            plan.count *= s[i];
        else
            kept.push_back(s[i]);
    }
    plan.out_shape = Shape(std::span<const int64_t>(kept));
    auto ostrides = plan.out_shape.strides();
    int oaxis = 0;
    for (int i = 0; i < s.ndim(); ++i)
        plan.out_stride[i] = reduced[i] ? 0 : ostrides[oaxis++];
    return plan;
}

// Walks the input linearly, yielding the output cell index per element.
template <typename Fn>
void for_each_mapped(const Shape& s, const ReducePlan& plan, Fn&& fn) {
    const int nd = s.ndim();
    std::array<int64_t, Shape::kMaxAxes> idx{};
    const int64_t total = s.numel();
    int64_t out = 0;
    for (int64_t lin = 0; lin < total; ++lin) {
        fn(lin, out);
        for (int ax = nd - 1; ax >= 0; --ax) {
            ++idx[ax];
            out += plan.out_stride[ax];
            if (idx[ax] < s[ax]) break;
            out -= plan.out_stride[ax] * s[ax];
            idx[ax] = 0;
        }
    }
}

Tensor reduce_impl(const Tensor& x, std::span<const int> axes, bool mean, const char* name) {
    require_defined(x, name);
    const Shape& s = x.shape();
    if (axes.empty()) {
        // Identity reduction: pass values through.
        std::vector<float> out(x.data().begin(), x.data().end());
        auto fn = [](Node& self) {
            Node& xn = *self.parents[0];
            if (!xn.requires_grad) return;
            xn.ensure_grad();
            for (size_t i = 0; i < self.value.size(); ++i) xn.grad[i] += self.grad[i];
        };
        return make_op(name, s, std::move(out), {x.node()}, std::move(fn));
    }
    ReducePlan plan = plan_reduce(s, axes, name);
    std::vector<double> acc(size_t(plan.out_shape.numel()), 0.0);
    const float* xv = x.data().data();
    for_each_mapped(s, plan, [&](int64_t lin, int64_t out) { acc[size_t(out)] += xv[lin]; });
    const double scale = mean ? 1.0 / double(plan.count) : 1.0;
    std::vector<float> out(acc.size());
    for (size_t i = 0; i < acc.size(); ++i) out[i] = float(acc[i] * scale);
    auto fn = [s, plan, scale](Node& self) {
        Node& xn = *self.parents[0];
        if (!xn.requires_grad) return;
        xn.ensure_grad();
        const float* g = self.grad.data();
        float* gx = xn.grad.data();
        for_each_mapped(s, plan, [&](int64_t lin, int64_t out) {
            gx[lin] += float(double(g[out]) * scale);
        });
    };
    return make_op(name, plan.out_shape, std::move(out), {x.node()}, std::move(fn));
}

std::vector<int> all_axes(const Tensor& x) {
    std::vector<int> axes(size_t(x.shape().ndim()));
    for (size_t i = 0; i < axes.size(); ++i) axes[i] = int(i);
    return axes;
}

} // namespace

Tensor reduce_sum(const Tensor& x, std::span<const int> axes) {
    return reduce_impl(x, axes, false, "reduce_sum");
}

Tensor reduce_mean(const Tensor& x, std::span<const int> axes) {
    return reduce_impl(x, axes, true, "reduce_mean");
}

Tensor sum_all(const Tensor& x) {
    auto axes = all_axes(x);
    return reduce_sum(x, axes);
}

Tensor mean_all(const Tensor& x) {
    auto axes = all_axes(x);
    return reduce_mean(x, axes);
}

Tensor upsample_nearest(const Tensor& x, int factor) {
    require_defined(x, "upsample_nearest");
    if (factor < 1) throw ParamError("upsample_nearest: factor must be >= 1");
    const Shape& s = x.shape();
    if (s.ndim() != 4) throw ShapeError("upsample_nearest: input must be [B,C,H,W]");
    const int64_t B = s[0], C = s[1], H = s[2], W = s[3];
    const int64_t HO = H * factor, WO = W * factor;
    std::vector<float> out(size_t(B * C * HO * WO));
    const float* xv = x.data().data();
    for (int64_t bc = 0; bc < B * C; ++bc) {
        const float* src = xv + bc * H * W;
        float* dst = out.data() + bc * HO * WO;
        for (int64_t oy = 0; oy < HO; ++oy) {
            const float* srow = src + (oy / factor) * W;
            float* drow = dst + oy * WO;
            for (int64_t ox = 0; ox < WO; ++ox) drow[ox] = srow[ox / factor];
        }
    }
    auto fn = [B, C, H, W, HO, WO, factor](Node& self) {
        Node& xn = *self.parents[0];
        if (!xn.requires_grad) return;
        xn.ensure_grad();
        const float* g = self.grad.data();
        for (int64_t bc = 0; bc < B * C; ++bc) {
            float* dst = xn.grad.data() + bc * H * W;
            const float* src = g + bc * HO * WO;
            for (int64_t oy = 0; oy < HO; ++oy) {
                float* drow = dst + (oy / factor) * W;
                const float* srow = src + oy * WO;
                for (int64_t ox = 0; ox < WO; ++ox) drow[ox / factor] += srow[ox];
            }
        }
    };
    return make_op("upsample_nearest", Shape{B, C, HO, WO}, std::move(out), {x.node()},
                   std::move(fn));
}

Tensor crop2d(const Tensor& x, int h, int w) {
    require_defined(x, "crop2d");
    const Shape& s = x.shape();
    if (s.ndim() != 4) throw ShapeError("crop2d: input must be [B,C,H,W]");
    const int64_t B = s[0], C = s[1], H = s[2], W = s[3];
    if (h < 1 || w < 1 || h > H || w > W)
        throw ParamError("crop2d: window " + std::to_string(h) + "x" + std::to_string(w) +
                         " does not fit in " + s.str());
    std::vector<float> out(size_t(B * C * h * w));
    const float* xv = x.data().data();
    for (int64_t bc = 0; bc < B * C; ++bc)
        for (int64_t y = 0; y < h; ++y)
            std::memcpy(out.data() + (bc * h + y) * w, xv + (bc * H + y) * W,
                        sizeof(float) * size_t(w));
    auto fn = [B, C, H, W, h, w](Node& self) {
        Node& xn = *self.parents[0];
        if (!xn.requires_grad) return;
        xn.ensure_grad();
        const float* g = self.grad.data();
        for (int64_t bc = 0; bc < B * C; ++bc)
            for (int64_t y = 0; y < h; ++y) {
                const float* src = g + (bc * h + y) * w;
                float* dst = xn.grad.data() + (bc * H + y) * W;
                for (int64_t xw = 0; xw < w; ++xw) dst[xw] += src[xw];
            }
    };
    return make_op("crop2d", Shape{B, C, h, w}, std::move(out), {x.node()}, std::move(fn));
}

Tensor reshape(const Tensor& x, const Shape& shape) {
    require_defined(x, "reshape");
    if (shape.numel() != x.numel())
        throw ShapeError("reshape: cannot view " + x.shape().str() + " as " + shape.str());
    std::vector<float> out(x.data().begin(), x.data().end());
    auto fn = [](Node& self) {
        Node& xn = *self.parents[0];
        if (!xn.requires_grad) return;
        xn.ensure_grad();
        for (size_t i = 0; i < self.value.size(); ++i) xn.grad[i] += self.grad[i];
    };
    return make_op("reshape", shape, std::move(out), {x.node()}, std::move(fn));
}

Tensor concat(std::span<const Tensor> parts, int axis) {
    if (parts.empty()) throw ParamError("concat: no inputs");
    for (const Tensor& t : parts) require_defined(t, "concat");
    const Shape& first = parts[0].shape();
    if (axis < 0 || axis >= first.ndim()) throw ShapeError("concat: axis out of range");
    int64_t axis_total = 0;
    for (const Tensor& t : parts) {
        const Shape& s = t.shape();
        if (s.ndim() != first.ndim()) throw ShapeError("concat: rank mismatch");
        for (int i = 0; i < s.ndim(); ++i)
            if (i != axis && s[i] != first[i])
                throw ShapeError("concat: extent mismatch at axis " + std::to_string(i));
        axis_total += s[axis];
    }
    std::vector<int64_t> dims;
    for (int i = 0; i < first.ndim(); ++i) dims.push_back(i == axis ? axis_total : first[i]);
    auto out_shape = Shape(std::span<const int64_t>(dims));

    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= first[i];
    for (int i = axis + 1; i < first.ndim(); ++i) inner *= first[i];

    std::vector<float> out(size_t(out_shape.numel()));
    std::vector<int64_t> piece(parts.size());
    const int64_t row = axis_total * inner;
    int64_t off = 0;
    for (size_t p = 0; p < parts.size(); ++p) {
        piece[p] = parts[p].shape()[axis] * inner;
        const float* src = parts[p].data().data();
        for (int64_t o = 0; o < outer; ++o)
            std::memcpy(out.data() + o * row + off, src + o * piece[p],
                        sizeof(float) * size_t(piece[p]));
        off += piece[p];
    }
    std::vector<NodePtr> parents;
    for (const Tensor& t : parts) parents.push_back(t.node());
    auto fn = [outer, row, piece](Node& self) {
        const float* g = self.grad.data();
        int64_t off = 0;
        for (size_t p = 0; p < self.parents.size(); ++p) {
            Node& pn = *self.parents[p];
            if (pn.requires_grad) {
                pn.ensure_grad();
                for (int64_t o = 0; o < outer; ++o) {
                    const float* src = g + o * row + off;
                    float* dst = pn.grad.data() + o * piece[p];
                    for (int64_t i = 0; i < piece[p]; ++i) dst[i] += src[i];
                }
            }
            off += piece[p];
        }
    };
    return make_op("concat", out_shape, std::move(out), std::move(parents), std::move(fn));
}

Tensor randn(const Shape& shape, RngStream& rng, float stddev, bool requires_grad) {
    std::vector<float> v(size_t(shape.numel()));
    for (float& x : v) x = rng.normal() * stddev;
    return Tensor::from(shape, std::move(v), requires_grad);
}

Tensor rand_uniform(const Shape& shape, RngStream& rng, float lo, float hi, bool requires_grad) {
    std::vector<float> v(size_t(shape.numel()));
    for (float& x : v) x = rng.uniform(lo, hi);
    return Tensor::from(shape, std::move(v), requires_grad);
}

} // namespace atrfas::nd
