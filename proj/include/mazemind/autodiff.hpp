#pragma once
// Reverse-mode differentiation over dense arrays. A TapeT owns the graph
// for one forward pass; ops append nodes in topological order, backward()
// walks the tape in reverse and accumulates gradients into node (or bound
// parameter) accumulators. Gradients accumulate across backward calls
// until explicitly zeroed.

#include "mazemind/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mazemind {

template <typename Real>
struct ParamT {
    std::string name;
    ArrayT<Real> value;
    ArrayT<Real> grad;

    ParamT() = default;
    ParamT(std::string n, Shape s) : name(std::move(n)), value(s), grad(std::move(s)) {}
};

namespace detail {
inline void op_check(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// (outer, axis_dim, inner) decomposition of a row-major shape around `axis`.
inline void axis_split(const Shape& s, int axis, long& outer, long& dim, long& inner) {
    outer = 1;
    inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    dim = s[axis];
    for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}
}  // namespace detail

template <typename Real>
class TapeT {
  public:
    using Arr = ArrayT<Real>;
    using Param = ParamT<Real>;

    struct Node {
        const Arr* v = nullptr;  // value (owned or external)
        Arr owned;
        Arr grad;
        Param* param = nullptr;
        bool requires_grad = false;
        bool persistent = false;  // leaf accumulator: survives across backward calls
        bool touched = false;
        const char* op = "";
        std::function<void()> back;

        const Arr& val() const { return *v; }
        Arr& acc() { return param ? param->grad : grad; }
    };

    TapeT() = default;
    TapeT(const TapeT&) = delete;
    TapeT& operator=(const TapeT&) = delete;

    long size() const { return static_cast<long>(nodes_.size()); }

    // ---- graph inputs -------------------------------------------------

    // Constant that views external storage (must outlive the tape).
    Node* constant_ref(const Arr& a) {
        Node* n = make("const");
        n->v = &a;
        return n;
    }
    Node* constant(Arr a) {
        Node* n = make("const");
        n->owned = std::move(a);
        n->v = &n->owned;
        return n;
    }
    Node* scalar(Real x) { return constant(Arr::scalar(x)); }

    // Trainable leaf bound to a parameter; gradients land in param.grad.
    // Memoized so each parameter appears once per tape.
    Node* leaf(Param& p) {
        auto it = leaves_.find(&p);
        if (it != leaves_.end()) return it->second;
        Node* n = make("leaf");
        n->v = &p.value;
        n->param = &p;
        n->requires_grad = true;
        n->persistent = true;
        leaves_.emplace(&p, n);
        return n;
    }

    // Trainable leaf with tape-local gradient storage.
    Node* variable(Arr a) {
        Node* n = make("var");
        n->owned = std::move(a);
        n->v = &n->owned;
        n->requires_grad = true;
        n->persistent = true;
        n->grad = Arr(n->owned.shape);
        return n;
    }

    // Constant copy of another node's current value (gradient barrier).
    Node* detach(Node* x) {
        Node* n = make("detach");
        n->owned = x->val();
        n->v = &n->owned;
        return n;
    }

    // ---- ops ----------------------------------------------------------

    Node* matmul(Node* a, Node* b) {
        const Arr& A = a->val();
        const Arr& B = b->val();
        detail::op_check(A.shape.size() == 2 && B.shape.size() == 2 && A.shape[1] == B.shape[0],
                         "matmul: incompatible shapes " + shape_str(A.shape) + " x " + shape_str(B.shape));
        int m = A.shape[0], k = A.shape[1], n = B.shape[1];
        Node* out = result("matmul", Shape{m, n}, {a, b});
        gemm<Real>(false, false, m, n, k, A.data.data(), B.data.data(), out->owned.data.data(), false);
        if (out->requires_grad)
            out->back = [out, a, b, m, n, k] {
                const Real* g = out->grad.data.data();
                if (a->requires_grad) {
                    gemm<Real>(false, true, m, k, n, g, b->val().data.data(), a->acc().data.data(), true);
                    a->touched = true;
                }
                if (b->requires_grad) {
                    gemm<Real>(true, false, k, n, m, a->val().data.data(), g, b->acc().data.data(), true);
                    b->touched = true;
                }
            };
        return out;
    }

    Node* add(Node* a, Node* b) { return binary("add", a, b, [](Real x, Real y) { return x + y; }, 1, 1); }
    Node* sub(Node* a, Node* b) { return binary("sub", a, b, [](Real x, Real y) { return x - y; }, 1, -1); }

    Node* mul(Node* a, Node* b) {
        const Arr& A = a->val();
        const Arr& B = b->val();
        detail::op_check(A.same_shape(B), "elementwise-mul: shape mismatch " + shape_str(A.shape) + " vs " +
                                              shape_str(B.shape));
        Node* out = result("elementwise-mul", A.shape, {a, b});
        for (long i = 0; i < A.size(); ++i) out->owned[i] = A[i] * B[i];
        if (out->requires_grad)
            out->back = [out, a, b] {
                const Arr& g = out->grad;
                if (a->requires_grad) {
                    Arr& ga = a->acc();
                    const Arr& B2 = b->val();
                    for (long i = 0; i < g.size(); ++i) ga[i] += g[i] * B2[i];
                    a->touched = true;
                }
                if (b->requires_grad) {
                    Arr& gb = b->acc();
                    const Arr& A2 = a->val();
                    for (long i = 0; i < g.size(); ++i) gb[i] += g[i] * A2[i];
                    b->touched = true;
                }
            };
        return out;
    }

    Node* scale(Node* a, Real c) {
        Node* out = result("scale", a->val().shape, {a});
        for (long i = 0; i < a->val().size(); ++i) out->owned[i] = a->val()[i] * c;
        if (out->requires_grad)
            out->back = [out, a, c] {
                Arr& ga = a->acc();
                for (long i = 0; i < out->grad.size(); ++i) ga[i] += out->grad[i] * c;
                a->touched = true;
            };
        return out;
    }

    Node* tanh_(Node* a) {
        Node* out = unary("tanh", a, [](Real x) { return std::tanh(x); });
        set_unary_back(out, a, [out](long i) {
            Real y = out->val()[i];
            return Real(1) - y * y;
        });
        return out;
    }

    Node* sigmoid(Node* a) {
        Node* out = unary("sigmoid", a, [](Real x) {
            return x >= 0 ? Real(1) / (Real(1) + std::exp(-x)) : [&] {
                Real e = std::exp(x);
                return e / (Real(1) + e);
            }();
        });
        set_unary_back(out, a, [out](long i) {
            Real y = out->val()[i];
            return y * (Real(1) - y);
        });
        return out;
    }

    Node* relu(Node* a) {
        Node* out = unary("relu", a, [](Real x) { return x > 0 ? x : Real(0); });
        set_unary_back(out, a, [a](long i) { return a->val()[i] > 0 ? Real(1) : Real(0); });
        return out;
    }

    Node* softplus(Node* a) {
        Node* out = unary("softplus", a, [](Real x) {
            // ln(1+e^x), stable for large |x|
            if (x > Real(20)) return x;
            if (x < Real(-20)) return std::exp(x);
            return std::log(Real(1) + std::exp(x));
        });
        set_unary_back(out, a, [a](long i) {
            Real x = a->val()[i];
            return x >= 0 ? Real(1) / (Real(1) + std::exp(-x)) : Real(std::exp(x) / (Real(1) + std::exp(x)));
        });
        return out;
    }

    Node* exp_(Node* a) {
        Node* out = unary("exp", a, [](Real x) { return std::exp(x); });
        set_unary_back(out, a, [out](long i) { return out->val()[i]; });
        return out;
    }

    Node* ln(Node* a) {
        Node* out = unary("ln", a, [](Real x) { return std::log(x); });
        set_unary_back(out, a, [a](long i) { return Real(1) / a->val()[i]; });
        return out;
    }

    Node* square(Node* a) {
        Node* out = unary("square", a, [](Real x) { return x * x; });
        set_unary_back(out, a, [a](long i) { return Real(2) * a->val()[i]; });
        return out;
    }

    // Clamp into [lo, hi]; gradient passes inside the interval, zero outside.
    Node* clamp(Node* a, Real lo, Real hi) {
        Node* out = unary("clamp", a, [lo, hi](Real x) { return std::min(hi, std::max(lo, x)); });
        set_unary_back(out, a, [a, lo, hi](long i) {
            Real x = a->val()[i];
            return (x > lo && x < hi) ? Real(1) : Real(0);
        });
        return out;
    }

    Node* sum(Node* a) {
        Node* out = result("sum", Shape{1}, {a});
        double acc = 0;
        for (long i = 0; i < a->val().size(); ++i) acc += static_cast<double>(a->val()[i]);
        out->owned[0] = static_cast<Real>(acc);
        if (out->requires_grad)
            out->back = [out, a] {
                Real g = out->grad[0];
                Arr& ga = a->acc();
                for (long i = 0; i < ga.size(); ++i) ga[i] += g;
                a->touched = true;
            };
        return out;
    }

    Node* mean(Node* a) {
        long n = a->val().size();
        Node* out = result("mean", Shape{1}, {a});
        double acc = 0;
        for (long i = 0; i < n; ++i) acc += static_cast<double>(a->val()[i]);
        out->owned[0] = static_cast<Real>(acc / static_cast<double>(n));
        if (out->requires_grad)
            out->back = [out, a, n] {
                Real g = out->grad[0] / static_cast<Real>(n);
                Arr& ga = a->acc();
                for (long i = 0; i < ga.size(); ++i) ga[i] += g;
                a->touched = true;
            };
        return out;
    }

    // Reduce the last axis; (d0,...,dk) -> (d0,...,d(k-1),1).
    Node* sum_last(Node* a) {
        const Arr& A = a->val();
        detail::op_check(!A.shape.empty(), "sum: empty shape");
        int rows = A.rows(), cols = A.cols();
        Shape os = A.shape;
        os.back() = 1;
        Node* out = result("sum", os, {a});
        for (int r = 0; r < rows; ++r) {
            double acc = 0;
            for (int c = 0; c < cols; ++c) acc += static_cast<double>(A[static_cast<long>(r) * cols + c]);
            out->owned[r] = static_cast<Real>(acc);
        }
        if (out->requires_grad)
            out->back = [out, a, rows, cols] {
                Arr& ga = a->acc();
                for (int r = 0; r < rows; ++r) {
                    Real g = out->grad[r];
                    for (int c = 0; c < cols; ++c) ga[static_cast<long>(r) * cols + c] += g;
                }
                a->touched = true;
            };
        return out;
    }

    // Repeat `a` to `target` shape; a's length must divide the target's and
    // the data is tiled over the leading dims (covers bias rows and scalars).
    Node* broadcast(Node* a, const Shape& target) {
        const Arr& A = a->val();
        long tn = shape_numel(target), an = A.size();
        detail::op_check(an > 0 && tn % an == 0,
                         "broadcast: cannot tile " + shape_str(A.shape) + " to " + shape_str(target));
        Node* out = result("broadcast", target, {a});
        for (long i = 0; i < tn; ++i) out->owned[i] = A[i % an];
        if (out->requires_grad)
            out->back = [out, a, tn, an] {
                Arr& ga = a->acc();
                for (long i = 0; i < tn; ++i) ga[i % an] += out->grad[i];
                a->touched = true;
            };
        return out;
    }

    Node* concat(const std::vector<Node*>& xs, int axis) {
        detail::op_check(!xs.empty(), "concat: no inputs");
        const Shape& s0 = xs[0]->val().shape;
        detail::op_check(axis >= 0 && axis < static_cast<int>(s0.size()), "concat: bad axis");
        Shape os = s0;
        long total_dim = 0;
        for (Node* x : xs) {
            const Shape& s = x->val().shape;
            detail::op_check(s.size() == s0.size(), "concat: rank mismatch");
            for (size_t i = 0; i < s.size(); ++i)
                detail::op_check(static_cast<int>(i) == axis || s[i] == s0[i],
                                 "concat: shape mismatch " + shape_str(s) + " vs " + shape_str(s0));
            total_dim += s[axis];
        }
        os[axis] = static_cast<int>(total_dim);
        std::vector<Node*> parents = xs;
        Node* out = result("concat", os, parents);
        long outer, dim, inner;
        detail::axis_split(os, axis, outer, dim, inner);
        long off = 0;
        for (Node* x : xs) {
            long xd = x->val().shape[axis];
            for (long o = 0; o < outer; ++o)
                std::copy_n(x->val().data.data() + o * xd * inner, xd * inner,
                            out->owned.data.data() + (o * dim + off) * inner);
            off += xd;
        }
        if (out->requires_grad)
            out->back = [out, xs2 = std::move(parents), axis] {
                const Shape& s = out->val().shape;
                long outer, dim, inner;
                detail::axis_split(s, axis, outer, dim, inner);
                long off = 0;
                for (Node* x : xs2) {
                    long xd = x->val().shape[axis];
                    if (x->requires_grad) {
                        Arr& gx = x->acc();
                        for (long o = 0; o < outer; ++o) {
                            const Real* src = out->grad.data.data() + (o * dim + off) * inner;
                            Real* dst = gx.data.data() + o * xd * inner;
                            for (long i = 0; i < xd * inner; ++i) dst[i] += src[i];
                        }
                        x->touched = true;
                    }
                    off += xd;
                }
            };
        return out;
    }

    Node* slice(Node* a, int axis, long start, long len) {
        const Shape& s = a->val().shape;
        detail::op_check(axis >= 0 && axis < static_cast<int>(s.size()), "slice: bad axis");
        detail::op_check(start >= 0 && len > 0 && start + len <= s[axis],
                         "slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                             ") out of bounds for " + shape_str(s));
        Shape os = s;
        os[axis] = static_cast<int>(len);
        Node* out = result("slice", os, {a});
        long outer, dim, inner;
        detail::axis_split(s, axis, outer, dim, inner);
        for (long o = 0; o < outer; ++o)
            std::copy_n(a->val().data.data() + (o * dim + start) * inner, len * inner,
                        out->owned.data.data() + o * len * inner);
        if (out->requires_grad)
            out->back = [out, a, axis, start, len] {
                const Shape& s2 = a->val().shape;
                long outer, dim, inner;
                detail::axis_split(s2, axis, outer, dim, inner);
                Arr& ga = a->acc();
                for (long o = 0; o < outer; ++o) {
                    const Real* src = out->grad.data.data() + o * len * inner;
                    Real* dst = ga.data.data() + (o * dim + start) * inner;
                    for (long i = 0; i < len * inner; ++i) dst[i] += src[i];
                }
                a->touched = true;
            };
        return out;
    }

    // Same data, new shape.
    Node* reshape(Node* a, Shape s) {
        detail::op_check(shape_numel(s) == a->val().size(),
                         "reshape: cannot view " + shape_str(a->val().shape) + " as " + shape_str(s));
        Node* out = result("reshape", std::move(s), {a});
        out->owned.data = a->val().data;
        if (out->requires_grad)
            out->back = [out, a] {
                Arr& ga = a->acc();
                for (long i = 0; i < out->grad.size(); ++i) ga[i] += out->grad[i];
                a->touched = true;
            };
        return out;
    }

    // Softmax along the last axis.
    Node* softmax(Node* a) {
        const Arr& A = a->val();
        int rows = A.rows(), cols = A.cols();
        Node* out = result("softmax", A.shape, {a});
        for (int r = 0; r < rows; ++r) {
            const Real* x = A.data.data() + static_cast<long>(r) * cols;
            Real* y = out->owned.data.data() + static_cast<long>(r) * cols;
            Real mx = x[0];
            for (int c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
            double z = 0;
            for (int c = 0; c < cols; ++c) {
                y[c] = std::exp(x[c] - mx);
                z += static_cast<double>(y[c]);
            }
            for (int c = 0; c < cols; ++c) y[c] = static_cast<Real>(y[c] / z);
        }
        if (out->requires_grad)
            out->back = [out, a, rows, cols] {
                Arr& ga = a->acc();
                for (int r = 0; r < rows; ++r) {
                    const Real* y = out->val().data.data() + static_cast<long>(r) * cols;
                    const Real* g = out->grad.data.data() + static_cast<long>(r) * cols;
                    double dot = 0;
                    for (int c = 0; c < cols; ++c) dot += static_cast<double>(g[c]) * y[c];
                    Real* dst = ga.data.data() + static_cast<long>(r) * cols;
                    for (int c = 0; c < cols; ++c) dst[c] += y[c] * (g[c] - static_cast<Real>(dot));
                }
                a->touched = true;
            };
        return out;
    }

    // 2-D convolution, x (B,Ci,H,W), w (Co,Ci,kh,kw), optional bias (Co).
    Node* conv2d(Node* x, Node* w, Node* bias, int sh, int sw, int ph, int pw) {
        const Arr& X = x->val();
        const Arr& W = w->val();
        detail::op_check(X.shape.size() == 4 && W.shape.size() == 4 && X.shape[1] == W.shape[1],
                         "conv2d: bad shapes " + shape_str(X.shape) + " w " + shape_str(W.shape));
        int B = X.shape[0], Ci = X.shape[1], H = X.shape[2], Wd = X.shape[3];
        int Co = W.shape[0], kh = W.shape[2], kw = W.shape[3];
        int Ho = (H + 2 * ph - kh) / sh + 1, Wo = (Wd + 2 * pw - kw) / sw + 1;
        detail::op_check(Ho > 0 && Wo > 0, "conv2d: empty output");
        std::vector<Node*> parents{x, w};
        if (bias) parents.push_back(bias);
        Node* out = result("conv2d", Shape{B, Co, Ho, Wo}, parents);
        long colsz = static_cast<long>(Ci) * kh * kw * Ho * Wo;
        std::vector<Real> col(colsz);
        for (int b = 0; b < B; ++b) {
            im2col(X.data.data() + static_cast<long>(b) * Ci * H * Wd, Ci, H, Wd, kh, kw, sh, sw, ph, pw, Ho, Wo,
                   col.data());
            gemm<Real>(false, false, Co, Ho * Wo, Ci * kh * kw, W.data.data(), col.data(),
                       out->owned.data.data() + static_cast<long>(b) * Co * Ho * Wo, false);
        }
        if (bias) {
            const Arr& Bv = bias->val();
            for (int b = 0; b < B; ++b)
                for (int c = 0; c < Co; ++c) {
                    Real* p = out->owned.data.data() + ((static_cast<long>(b) * Co + c) * Ho) * Wo;
                    for (int i = 0; i < Ho * Wo; ++i) p[i] += Bv[c];
                }
        }
        if (out->requires_grad)
            out->back = [this, out, x, w, bias, B, Ci, H, Wd, Co, kh, kw, sh, sw, ph, pw, Ho, Wo] {
                std::vector<Real> col(static_cast<long>(Ci) * kh * kw * Ho * Wo);
                std::vector<Real> gcol(col.size());
                for (int b = 0; b < B; ++b) {
                    const Real* g = out->grad.data.data() + static_cast<long>(b) * Co * Ho * Wo;
                    if (w->requires_grad || x->requires_grad)
                        im2col(x->val().data.data() + static_cast<long>(b) * Ci * H * Wd, Ci, H, Wd, kh, kw, sh,
                               sw, ph, pw, Ho, Wo, col.data());
                    if (w->requires_grad)
                        gemm<Real>(false, true, Co, Ci * kh * kw, Ho * Wo, g, col.data(), w->acc().data.data(),
                                   true);
                    if (x->requires_grad) {
                        gemm<Real>(true, false, Ci * kh * kw, Ho * Wo, Co, w->val().data.data(), g, gcol.data(),
                                   false);
                        col2im_add(gcol.data(), Ci, H, Wd, kh, kw, sh, sw, ph, pw, Ho, Wo,
                                   x->acc().data.data() + static_cast<long>(b) * Ci * H * Wd);
                    }
                    if (bias && bias->requires_grad) {
                        Arr& gb = bias->acc();
                        for (int c = 0; c < Co; ++c) {
                            double acc = 0;
                            for (int i = 0; i < Ho * Wo; ++i) acc += static_cast<double>(g[c * Ho * Wo + i]);
                            gb[c] += static_cast<Real>(acc);
                        }
                    }
                }
                if (x->requires_grad) x->touched = true;
                if (w->requires_grad) w->touched = true;
                if (bias && bias->requires_grad) bias->touched = true;
            };
        return out;
    }

    // Transposed 2-D convolution, x (B,Ci,H,W), w (Ci,Co,kh,kw).
    Node* conv2d_transpose(Node* x, Node* w, Node* bias, int sh, int sw, int ph, int pw, int oph, int opw) {
        const Arr& X = x->val();
        const Arr& W = w->val();
        detail::op_check(X.shape.size() == 4 && W.shape.size() == 4 && X.shape[1] == W.shape[0],
                         "conv2d-transpose: bad shapes " + shape_str(X.shape) + " w " + shape_str(W.shape));
        int B = X.shape[0], Ci = X.shape[1], H = X.shape[2], Wd = X.shape[3];
        int Co = W.shape[1], kh = W.shape[2], kw = W.shape[3];
        int Ho = (H - 1) * sh - 2 * ph + kh + oph, Wo = (Wd - 1) * sw - 2 * pw + kw + opw;
        detail::op_check(Ho > 0 && Wo > 0, "conv2d-transpose: empty output");
        std::vector<Node*> parents{x, w};
        if (bias) parents.push_back(bias);
        Node* out = result("conv2d-transpose", Shape{B, Co, Ho, Wo}, parents);
        // col[(co,i,j),(h,w)] = sum_ci W[ci,co,i,j] * X[ci,h,w]; scatter into out.
        std::vector<Real> col(static_cast<long>(Co) * kh * kw * H * Wd);
        for (int b = 0; b < B; ++b) {
            gemm<Real>(true, false, Co * kh * kw, H * Wd, Ci, W.data.data(),
                       X.data.data() + static_cast<long>(b) * Ci * H * Wd, col.data(), false);
            col2im_add(col.data(), Co, Ho, Wo, kh, kw, sh, sw, ph, pw, H, Wd,
                       out->owned.data.data() + static_cast<long>(b) * Co * Ho * Wo);
        }
        if (bias) {
            const Arr& Bv = bias->val();
            for (int b = 0; b < B; ++b)
                for (int c = 0; c < Co; ++c) {
                    Real* p = out->owned.data.data() + ((static_cast<long>(b) * Co + c) * Ho) * Wo;
                    for (int i = 0; i < Ho * Wo; ++i) p[i] += Bv[c];
                }
        }
        if (out->requires_grad)
            out->back = [this, out, x, w, bias, B, Ci, H, Wd, Co, kh, kw, sh, sw, ph, pw, Ho, Wo] {
                std::vector<Real> gcol(static_cast<long>(Co) * kh * kw * H * Wd);
                for (int b = 0; b < B; ++b) {
                    const Real* g = out->grad.data.data() + static_cast<long>(b) * Co * Ho * Wo;
                    // gcol = im2col(g): gather with the forward geometry.
                    im2col(g, Co, Ho, Wo, kh, kw, sh, sw, ph, pw, H, Wd, gcol.data());
                    if (x->requires_grad)
                        gemm<Real>(false, false, Ci, H * Wd, Co * kh * kw, w->val().data.data(), gcol.data(),
                                   x->acc().data.data() + static_cast<long>(b) * Ci * H * Wd, true);
                    if (w->requires_grad)
                        gemm<Real>(false, true, Ci, Co * kh * kw, H * Wd,
                                   x->val().data.data() + static_cast<long>(b) * Ci * H * Wd, gcol.data(),
                                   w->acc().data.data(), true);
                    if (bias && bias->requires_grad) {
                        Arr& gb = bias->acc();
                        for (int c = 0; c < Co; ++c) {
                            double acc = 0;
                            for (int i = 0; i < Ho * Wo; ++i) acc += static_cast<double>(g[c * Ho * Wo + i]);
                            gb[c] += static_cast<Real>(acc);
                        }
                    }
                }
                if (x->requires_grad) x->touched = true;
                if (w->requires_grad) w->touched = true;
                if (bias && bias->requires_grad) bias->touched = true;
            };
        return out;
    }

    // ---- backward -----------------------------------------------------

    void backward(Node* root) {
        detail::op_check(root->val().size() == 1, "backward: root must be scalar, got " +
                                                      shape_str(root->val().shape));
        if (!root->requires_grad) return;
        // Intermediate grads describe one pass and are reset here; leaf
        // accumulators (parameters, variables) persist until zeroed, so
        // repeated backward calls add up.
        for (Node& n : nodes_)
            if (!n.persistent) {
                if (!n.grad.shape.empty()) n.grad.zero();
                n.touched = false;
            }
        ensure_grad(root);
        root->acc()[0] += Real(1);
        root->touched = true;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            Node& n = *it;
            if (n.touched && n.back) n.back();
        }
    }

  private:
    std::deque<Node> nodes_;
    std::unordered_map<Param*, Node*> leaves_;

    Node* make(const char* op) {
        nodes_.emplace_back();
        Node* n = &nodes_.back();
        n->op = op;
        return n;
    }

    void ensure_grad(Node* n) {
        if (!n->param && n->grad.shape.empty()) n->grad = Arr(n->val().shape);
    }

    Node* result(const char* op, Shape s, const std::vector<Node*>& parents) {
        Node* n = make(op);
        n->owned = Arr(std::move(s));
        n->v = &n->owned;
        for (Node* p : parents)
            if (p->requires_grad) {
                n->requires_grad = true;
                ensure_grad(p);
            }
        if (n->requires_grad) n->grad = Arr(n->owned.shape);
        return n;
    }

    template <typename F>
    Node* unary(const char* op, Node* a, F f) {
        Node* out = result(op, a->val().shape, {a});
        const Arr& A = a->val();
        for (long i = 0; i < A.size(); ++i) out->owned[i] = f(A[i]);
        return out;
    }

    // dL/da[i] += g[i] * local(i)
    template <typename Local>
    void set_unary_back(Node* out, Node* a, Local local) {
        if (!out->requires_grad) return;
        out->back = [out, a, local] {
            Arr& ga = a->acc();
            for (long i = 0; i < out->grad.size(); ++i) ga[i] += out->grad[i] * local(i);
            a->touched = true;
        };
    }

    template <typename F>
    Node* binary(const char* op, Node* a, Node* b, F f, Real da, Real db) {
        const Arr& A = a->val();
        const Arr& B = b->val();
        detail::op_check(A.same_shape(B), std::string(op) + ": shape mismatch " + shape_str(A.shape) + " vs " +
                                              shape_str(B.shape));
        Node* out = result(op, A.shape, {a, b});
        for (long i = 0; i < A.size(); ++i) out->owned[i] = f(A[i], B[i]);
        if (out->requires_grad)
            out->back = [out, a, b, da, db] {
                const Arr& g = out->grad;
                if (a->requires_grad) {
                    Arr& ga = a->acc();
                    for (long i = 0; i < g.size(); ++i) ga[i] += da * g[i];
                    a->touched = true;
                }
                if (b->requires_grad) {
                    Arr& gb = b->acc();
                    for (long i = 0; i < g.size(); ++i) gb[i] += db * g[i];
                    b->touched = true;
                }
            };
        return out;
    }

    static void im2col(const Real* x, int C, int H, int W, int kh, int kw, int sh, int sw, int ph, int pw,
                       int Ho, int Wo, Real* col) {
        long idx = 0;
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < kh; ++i)
                for (int j = 0; j < kw; ++j)
                    for (int oh = 0; oh < Ho; ++oh) {
                        int h = oh * sh - ph + i;
                        for (int ow = 0; ow < Wo; ++ow, ++idx) {
                            int w = ow * sw - pw + j;
                            col[idx] = (h >= 0 && h < H && w >= 0 && w < W)
                                           ? x[(static_cast<long>(c) * H + h) * W + w]
                                           : Real(0);
                        }
                    }
    }

    static void col2im_add(const Real* col, int C, int H, int W, int kh, int kw, int sh, int sw, int ph, int pw,
                           int Ho, int Wo, Real* x) {
        long idx = 0;
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < kh; ++i)
                for (int j = 0; j < kw; ++j)
                    for (int oh = 0; oh < Ho; ++oh) {
                        int h = oh * sh - ph + i;
                        for (int ow = 0; ow < Wo; ++ow, ++idx) {
                            int w = ow * sw - pw + j;
                            if (h >= 0 && h < H && w >= 0 && w < W)
                                x[(static_cast<long>(c) * H + h) * W + w] += col[idx];
                        }
                    }
    }
};

}  // namespace mazemind
